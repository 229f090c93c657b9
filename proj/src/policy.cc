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

#include "rmp2/policy.h"

#include <algorithm>
#include <stdexcept>

namespace rmp2 {

void ConfigState::Validate(int dim) const {
  if (q.size() != dim || qd.size() != dim) {
    throw std::invalid_argument("ConfigState: expected dimension " + std::to_string(dim));
  }
  if (!q.allFinite() || !qd.allFinite()) {
    throw std::invalid_argument("ConfigState: non-finite state");
  }
}

RmpBinding Bind(const TaskGraph& graph, const std::string& name, LeafRmp rmp) {
  const int node = graph.Find(name);
  if (node < 0) throw std::invalid_argument("Bind: no node named '" + name + "'");
  return RmpBinding{node, std::move(rmp)};
}

void ValidateBindings(const TaskGraph& graph, std::span<const RmpBinding> rmps) {
  std::vector<bool> used(graph.node_count(), false);
  for (const RmpBinding& b : rmps) {
    if (b.node < 0 || b.node >= static_cast<int>(graph.node_count())) {
      throw std::invalid_argument("RMP bound to a node outside the graph");
    }
    const TaskNode& n = graph.node(b.node);
    if (n.dim != b.rmp.dim()) {
      throw std::invalid_argument("RMP on '" + n.name + "' has dim " +
                                  std::to_string(b.rmp.dim()) + ", node has " +
                                  std::to_string(n.dim));
    }
    if (used[b.node]) throw std::invalid_argument("node '" + n.name + "' has two RMPs");
    used[b.node] = true;
  }
}

Eigen::MatrixXd SymmetricPseudoInverse(const Eigen::MatrixXd& m, double rel_tol) {
  const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym);
  const Eigen::VectorXd& lambda = eig.eigenvalues();
  const double cutoff = rel_tol * lambda.cwiseAbs().maxCoeff();
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    if (std::abs(lambda(i)) > cutoff) inv(i) = 1.0 / lambda(i);
  }
  const Eigen::MatrixXd& v = eig.eigenvectors();
  return v * inv.asDiagonal() * v.transpose();
}

Eigen::VectorXd Resolve(const RmpNatural& rmp) {
  return SymmetricPseudoInverse(rmp.metric) * rmp.force;
}

std::string LeafLabel(const TaskGraph& graph, const RmpBinding& binding) {
  return std::string(RmpKindName(binding.rmp.kind())) + " RMP on '" +
         graph.node(binding.node).name + "'";
}

RmpVars EvaluateLeaf(const TaskGraph& graph, const RmpBinding& binding, const ad::Var& x,
                     const ad::Var& xd, const ad::Var* params) {
  RmpVars out;
  try {
    out = params ? binding.rmp.Evaluate(x, xd, *params) : binding.rmp.Evaluate(x, xd);
  } catch (const ad::DomainError& e) {
    throw ad::DomainError(LeafLabel(graph, binding) + ": " + e.what());
  }
  CheckLeafOutput(graph, binding, out.metric.value(), out.accel.vector());
  return out;
}

RmpCanonical EvaluateLeaf(const TaskGraph& graph, const RmpBinding& binding,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& xd) {
  RmpCanonical out;
  try {
    out = binding.rmp.Evaluate(x, xd);
  } catch (const ad::DomainError& e) {
    throw ad::DomainError(LeafLabel(graph, binding) + ": " + e.what());
  }
  CheckLeafOutput(graph, binding, out.metric, out.accel);
  return out;
}

void CheckLeafOutput(const TaskGraph& graph, const RmpBinding& binding,
                     const Eigen::MatrixXd& metric, const Eigen::VectorXd& accel) {
  if (!metric.allFinite() || !accel.allFinite()) {
    throw ad::DomainError(LeafLabel(graph, binding) + " produced a non-finite value");
  }
}

double RelativeError(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double scale = std::max({a.norm(), b.norm(), 1e-12});
  return (a - b).norm() / scale;
}

}  // namespace rmp2
