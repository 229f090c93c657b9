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

#include "rmp2/rmp2.h"

#include <stdexcept>

namespace rmp2 {

using ad::Var;

RecordedPolicy RecordRmp2(ad::Tape& tape, const TaskGraph& graph,
                          std::span<const RmpBinding> rmps, const ConfigState& state,
                          bool record, std::span<const Var> params) {
  const int d = graph.root_dim();
  state.Validate(d);
  ValidateBindings(graph, rmps);
  if (!params.empty() && params.size() != rmps.size()) {
    throw std::invalid_argument("RecordRmp2: need one parameter Var per binding");
  }
  if (rmps.empty()) throw std::invalid_argument("RecordRmp2: no RMPs");

  RecordedPolicy out;
  out.q = tape.input(state.q);
  out.qd = tape.input(state.qd);

  // Forward: x, ẋ = J q̇, c = J̇ q̇.
  const std::vector<Var> nodes = graph.Evaluate(out.q);
  std::vector<Var> xs;
  xs.reserve(rmps.size());
  for (const RmpBinding& b : rmps) xs.push_back(nodes[b.node]);
  const std::vector<Var> xds = ad::Jvp(xs, out.q, out.qd, true);
  const std::vector<Var> cs = ad::Jvp(xds, out.q, out.qd, record);

  std::vector<Var> metrics, rhs;
  for (std::size_t k = 0; k < rmps.size(); ++k) {
    RmpVars leaf =
        EvaluateLeaf(graph, rmps[k], xs[k], xds[k], params.empty() ? nullptr : &params[k]);
    metrics.push_back(leaf.metric);
    rhs.push_back(leaf.accel - cs[k]);
  }

  // Backward on mirrored copies; M, a and c do not depend on q' or q''.
  const Var q1 = copy(out.q);
  const Var q2 = copy(out.q);
  const std::vector<Var> nodes1 = graph.Evaluate(q1);
  const std::vector<Var> nodes2 = graph.Evaluate(q2);
  Var r, s;
  for (std::size_t k = 0; k < rmps.size(); ++k) {
    const Var& x1 = nodes1[rmps[k].node];
    const Var& x2 = nodes2[rmps[k].node];
    Var rk = dot(x1, matvec(metrics[k], x2));
    Var sk = dot(x1, matvec(metrics[k], rhs[k]));
    r = k == 0 ? rk : r + rk;
    s = k == 0 ? sk : s + sk;
  }
  out.force = ad::Gradient(s, q1, record);
  out.metric = ad::Jacobian(ad::Gradient(r, q1, true), q2, record);
  return out;
}

PolicyResult Rmp2Policy(const TaskGraph& graph, std::span<const RmpBinding> rmps,
                        const ConfigState& state) {
  ad::Tape tape;
  RecordedPolicy rec = RecordRmp2(tape, graph, rmps, state);
  PolicyResult result;
  result.root.force = rec.force.vector();
  result.root.metric = rec.metric.value();
  result.accel = Resolve(result.root);
  result.tape_nodes = tape.size();
  return result;
}

ParamGradientResult ParameterGradient(const PolicyLoss& loss, std::span<const RmpBinding> rmps,
                                      const TaskGraph& graph, const ConfigState& state) {
  ad::Tape tape;
  std::vector<Var> params;
  params.reserve(rmps.size());
  for (const RmpBinding& b : rmps) params.push_back(tape.input(b.rmp.params()));
  RecordedPolicy rec = RecordRmp2(tape, graph, rmps, state, true, params);

  const Eigen::MatrixXd m = rec.metric.value();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  const Eigen::VectorXd lambda = eig.eigenvalues().cwiseAbs();
  if (lambda.minCoeff() <= 1e-10 * lambda.maxCoeff()) {
    throw ad::DomainError("ParameterGradient: root metric is rank deficient");
  }
  Var sym = (rec.metric + transpose(rec.metric)) * 0.5;
  Var accel = solve(sym, rec.force);
  Var value = loss(accel);
  if (value.size() != 1) throw ad::ShapeError("ParameterGradient: loss must be a scalar");

  ParamGradientResult result;
  result.loss = value.scalar();
  result.accel = accel.vector();
  for (const Var& g : ad::Gradients(value, params)) result.grads.push_back(g.vector());
  return result;
}

}  // namespace rmp2
