// Copyright 2026 The RMP2 Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rmp2/naive.h"

#include <stdexcept>
#include <vector>

namespace rmp2 {

using ad::Var;

RecordedPolicy RecordNaive(ad::Tape& tape, const TaskGraph& graph,
                           std::span<const RmpBinding> rmps, const ConfigState& state,
                           NaiveVariant variant, bool record) {
  state.Validate(graph.root_dim());
  ValidateBindings(graph, rmps);
  if (rmps.empty()) throw std::invalid_argument("RecordNaive: no RMPs");

  RecordedPolicy out;
  out.q = tape.input(state.q);
  out.qd = tape.input(state.qd);
  const std::vector<Var> nodes = graph.Evaluate(out.q);

  std::vector<Var> xs, jacobians, xds, cs;
  for (const RmpBinding& b : rmps) xs.push_back(nodes[b.node]);
  if (variant == NaiveVariant::kDirect) {
    for (const Var& x : xs) {
      Var j = ad::Jacobian(x, out.q, true);
      jacobians.push_back(j);
      xds.push_back(matvec(j, out.qd));
    }
    for (const Var& xd : xds) cs.push_back(ad::Jvp(xd, out.q, out.qd, record));
  } else {
    for (const Var& x : xs) jacobians.push_back(ad::Jacobian(x, out.q, record));
    xds = ad::Jvp(xs, out.q, out.qd, true);
    cs = ad::Jvp(xds, out.q, out.qd, record);
  }

  for (std::size_t k = 0; k < rmps.size(); ++k) {
    RmpVars leaf = EvaluateLeaf(graph, rmps[k], xs[k], xds[k]);
    Var jt = transpose(jacobians[k]);
    Var mk = matmul(jt, matmul(leaf.metric, jacobians[k]));
    Var fk = matvec(jt, matvec(leaf.metric, leaf.accel - cs[k]));
    out.metric = k == 0 ? mk : out.metric + mk;
    out.force = k == 0 ? fk : out.force + fk;
  }
  return out;
}

namespace {

PolicyResult Evaluate(const TaskGraph& graph, std::span<const RmpBinding> rmps,
                      const ConfigState& state, NaiveVariant variant) {
  ad::Tape tape;
  RecordedPolicy rec = RecordNaive(tape, graph, rmps, state, variant);
  PolicyResult result;
  result.root.force = rec.force.vector();
  result.root.metric = rec.metric.value();
  result.accel = Resolve(result.root);
  result.tape_nodes = tape.size();
  return result;
}

}  // namespace

PolicyResult NaivePolicy(const TaskGraph& graph, std::span<const RmpBinding> rmps,
                         const ConfigState& state) {
  return Evaluate(graph, rmps, state, NaiveVariant::kDirect);
}

PolicyResult NaivePolicyMemorySafe(const TaskGraph& graph, std::span<const RmpBinding> rmps,
                                   const ConfigState& state) {
  return Evaluate(graph, rmps, state, NaiveVariant::kMemorySafe);
}

}  // namespace rmp2
