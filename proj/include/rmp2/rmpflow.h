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

// Message passing on an RMP-tree: pushforward of (x, ẋ) from the root to
// the leaves, leaf RMP evaluation, pullback of natural-form RMPs
//   f_u = Σ J_mᵀ (f_m - M_m J̇_m ẋ),  M_u = Σ J_mᵀ M_m J_m,
// and resolve at the root. Each edge keeps its own small tape.

#ifndef RMP2_RMPFLOW_H_
#define RMP2_RMPFLOW_H_

#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "rmp2/autodiff.h"
#include "rmp2/policy.h"
#include "rmp2/taskmaps.h"

namespace rmp2 {

class RmpTree {
 public:
  // `graph` must be a tree (every non-root node has one input).
  RmpTree(TaskGraph graph, std::vector<RmpBinding> rmps);

  const TaskGraph& graph() const { return graph_; }
  // Kahn order over the parent -> child edges, root first.
  const std::vector<int>& order() const { return order_; }

  // Clears all node states and RMPs, then sets the root state.
  void SetRootState(const ConfigState& state);
  // Sets (ψ_m(x), J_m ẋ) on every child m of `node`.
  void Pushforward(int node);
  // Sums the node's own RMP (if any) and the pulled-back child RMPs.
  const RmpNatural& Pullback(int node);

  bool has_state(int node) const { return nodes_.at(node).has_state; }
  const Eigen::VectorXd& position(int node) const { return nodes_.at(node).x; }
  const Eigen::VectorXd& velocity(int node) const { return nodes_.at(node).xd; }
  const RmpNatural& rmp(int node) const { return nodes_.at(node).rmp; }
  // Nodes recorded on all edge tapes since the last SetRootState.
  std::size_t tape_nodes() const;

 private:
  struct NodeState {
    Eigen::VectorXd x, xd;
    bool has_state = false;
    RmpNatural rmp;
    bool has_rmp = false;
    int binding = -1;
    std::vector<int> children;
    // Incoming edge, recorded by the parent's pushforward.
    std::unique_ptr<ad::Tape> tape;
    ad::Var in, y, yd;
  };

  TaskGraph graph_;
  std::vector<RmpBinding> rmps_;
  std::vector<NodeState> nodes_;
  std::vector<int> order_;
};

PolicyResult RmpflowPolicy(RmpTree& tree, const ConfigState& state);

}  // namespace rmp2

#endif  // RMP2_RMPFLOW_H_
