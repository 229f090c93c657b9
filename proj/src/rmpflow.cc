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

#include "rmp2/rmpflow.h"

#include <deque>
#include <stdexcept>
#include <utility>

namespace rmp2 {

using ad::Var;

RmpTree::RmpTree(TaskGraph graph, std::vector<RmpBinding> rmps)
    : graph_(std::move(graph)), rmps_(std::move(rmps)) {
  if (!graph_.is_tree()) throw std::invalid_argument("RmpTree: task graph is not a tree");
  ValidateBindings(graph_, rmps_);
  const std::size_t n = graph_.node_count();
  nodes_.resize(n);
  for (std::size_t i = 1; i < n; ++i) {
    nodes_[graph_.node(static_cast<int>(i)).inputs[0]].children.push_back(static_cast<int>(i));
  }
  for (std::size_t k = 0; k < rmps_.size(); ++k) nodes_[rmps_[k].node].binding = static_cast<int>(k);

  std::vector<int> indegree(n, 1);
  indegree[0] = 0;
  std::deque<int> ready = {0};
  while (!ready.empty()) {
    const int u = ready.front();
    ready.pop_front();
    order_.push_back(u);
    for (int m : nodes_[u].children) {
      if (--indegree[m] == 0) ready.push_back(m);
    }
  }
  if (order_.size() != n) throw std::invalid_argument("RmpTree: graph is not connected");
}

void RmpTree::SetRootState(const ConfigState& state) {
  state.Validate(graph_.root_dim());
  for (NodeState& s : nodes_) {
    s.has_state = false;
    s.has_rmp = false;
    s.tape.reset();
  }
  nodes_[0].x = state.q;
  nodes_[0].xd = state.qd;
  nodes_[0].has_state = true;
}

void RmpTree::Pushforward(int node) {
  NodeState& u = nodes_.at(node);
  if (!u.has_state) {
    throw std::logic_error("pushforward from '" + graph_.node(node).name + "' before its state");
  }
  for (int m : u.children) {
    NodeState& child = nodes_[m];
    child.tape = std::make_unique<ad::Tape>();
    child.in = child.tape->input(u.x);
    const Var xd = child.tape->input(u.xd);
    const Var in[] = {child.in};
    child.y = graph_.node(m).map(in);
    child.yd = ad::Jvp(child.y, child.in, xd, true);
    child.x = child.y.vector();
    child.xd = child.yd.vector();
    child.has_state = true;
  }
}

const RmpNatural& RmpTree::Pullback(int node) {
  NodeState& u = nodes_.at(node);
  const int dim = graph_.node(node).dim;
  u.rmp.force = Eigen::VectorXd::Zero(dim);
  u.rmp.metric = Eigen::MatrixXd::Zero(dim, dim);
  if (u.binding >= 0) {
    const RmpBinding& b = rmps_[u.binding];
    RmpCanonical leaf = EvaluateLeaf(graph_, b, u.x, u.xd);
    u.rmp.force += leaf.metric * leaf.accel;
    u.rmp.metric += leaf.metric;
  }
  for (int m : u.children) {
    NodeState& child = nodes_[m];
    if (!child.has_rmp) {
      throw std::logic_error("pullback to '" + graph_.node(node).name + "' before child '" +
                             graph_.node(m).name + "'");
    }
    const Eigen::MatrixXd j = ad::Jacobian(child.y, child.in).value();
    const Eigen::VectorXd curvature = ad::Jvp(child.yd, child.in, u.xd).vector();
    u.rmp.force += j.transpose() * (child.rmp.force - child.rmp.metric * curvature);
    u.rmp.metric += j.transpose() * child.rmp.metric * j;
  }
  u.has_rmp = true;
  return u.rmp;
}

std::size_t RmpTree::tape_nodes() const {
  std::size_t total = 0;
  for (const NodeState& s : nodes_) {
    if (s.tape) total += s.tape->size();
  }
  return total;
}

PolicyResult RmpflowPolicy(RmpTree& tree, const ConfigState& state) {
  tree.SetRootState(state);
  const std::vector<int>& order = tree.order();
  for (int u : order) tree.Pushforward(u);
  for (auto it = order.rbegin(); it != order.rend(); ++it) tree.Pullback(*it);
  PolicyResult result;
  result.root = tree.rmp(0);
  result.accel = Resolve(result.root);
  result.tape_nodes = tree.tape_nodes();
  return result;
}

}  // namespace rmp2
