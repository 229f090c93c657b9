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

// Types shared by the three policy implementations.

#ifndef RMP2_POLICY_H_
#define RMP2_POLICY_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmp2/autodiff.h"
#include "rmp2/leaf_rmps.h"
#include "rmp2/taskmaps.h"

namespace rmp2 {

struct ConfigState {
  Eigen::VectorXd q;   // rad
  Eigen::VectorXd qd;  // rad/s

  // Throws std::invalid_argument unless both are finite and of size `dim`.
  void Validate(int dim) const;
};

// Force form [f, M].
struct RmpNatural {
  Eigen::VectorXd force;
  Eigen::MatrixXd metric;
};

// A leaf RMP attached to one node of a TaskGraph.
struct RmpBinding {
  int node;
  LeafRmp rmp;
};

// Looks the node up by name.
RmpBinding Bind(const TaskGraph& graph, const std::string& name, LeafRmp rmp);

// Checks indices, dimensions and that no node carries two RMPs.
void ValidateBindings(const TaskGraph& graph, std::span<const RmpBinding> rmps);

struct PolicyResult {
  Eigen::VectorXd accel;
  RmpNatural root;
  std::size_t tape_nodes = 0;  // nodes recorded by the evaluation
};

// Pseudo-inverse of the symmetric part of `m` via an eigendecomposition;
// eigenvalues at or below rel_tol * (largest |eigenvalue|) are dropped.
Eigen::MatrixXd SymmetricPseudoInverse(const Eigen::MatrixXd& m, double rel_tol = 1e-10);

// a = M† f.
Eigen::VectorXd Resolve(const RmpNatural& rmp);

// "<kind> RMP on '<node>'", used to prefix leaf errors.
std::string LeafLabel(const TaskGraph& graph, const RmpBinding& binding);

// Evaluates the bound RMP; domain errors are rethrown with the leaf label.
RmpVars EvaluateLeaf(const TaskGraph& graph, const RmpBinding& binding, const ad::Var& x,
                     const ad::Var& xd, const ad::Var* params = nullptr);
RmpCanonical EvaluateLeaf(const TaskGraph& graph, const RmpBinding& binding,
                          const Eigen::VectorXd& x, const Eigen::VectorXd& xd);

// Throws DomainError naming the node when a leaf RMP output is not finite.
void CheckLeafOutput(const TaskGraph& graph, const RmpBinding& binding,
                     const Eigen::MatrixXd& metric, const Eigen::VectorXd& accel);

double RelativeError(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace rmp2

#endif  // RMP2_POLICY_H_
