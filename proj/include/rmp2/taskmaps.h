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

// Task maps: a DAG of differentiable maps from the configuration q (node 0)
// to subtask coordinates. Builders for the planar n-link arm and for the
// synthetic chain graph used in timing experiments.

#ifndef RMP2_TASKMAPS_H_
#define RMP2_TASKMAPS_H_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmp2/autodiff.h"

namespace rmp2 {

// Maps the values of a node's inputs (in declaration order) to its value.
using EdgeMap = std::function<ad::Var(std::span<const ad::Var> inputs)>;

struct TaskNode {
  std::string name;
  int dim = 0;
  std::vector<int> inputs;  // indices of earlier nodes; empty for the root
  EdgeMap map;
  bool leaf = false;
};

class TaskGraph {
 public:
  explicit TaskGraph(int root_dim, std::string root_name = "q");

  // Appends a node; inputs must refer to existing nodes. Returns its index.
  int AddNode(std::string name, int dim, std::vector<int> inputs, EdgeMap map,
              bool leaf = false);
  int AddLeaf(std::string name, int dim, std::vector<int> inputs, EdgeMap map) {
    return AddNode(std::move(name), dim, std::move(inputs), std::move(map), true);
  }

  int root_dim() const { return nodes_[0].dim; }
  const TaskNode& node(int index) const { return nodes_.at(index); }
  std::size_t node_count() const { return nodes_.size(); }
  std::size_t leaf_count() const;
  std::vector<int> leaves() const;
  std::vector<int> children(int index) const;
  // Largest number of children of any node.
  int max_branching() const;
  // Every non-root node has exactly one input.
  bool is_tree() const;
  // Index of the node called `name`, or -1.
  int Find(const std::string& name) const;

  // Values of every node, each computed once, recorded on q's tape.
  std::vector<ad::Var> Evaluate(const ad::Var& q) const;
  std::vector<Eigen::VectorXd> EvaluateValues(const Eigen::VectorXd& q) const;

 private:
  std::vector<TaskNode> nodes_;
};

struct RobotModel {
  int num_links = 3;
  std::vector<double> link_lengths = {0.25, 0.25, 0.25};  // m
  double joint_velocity_limit = 1.0;                      // rad/s
  int control_points_per_link = 3;

  void Validate() const;
};

struct Obstacle {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();  // m
  double radius = 0.05;                               // m
};
using ObstacleSet = std::vector<Obstacle>;

void ValidateObstacles(const ObstacleSet& obstacles);

// Name of control point `point` (1-based) on link `link` (1-based).
std::string ControlPointName(int link, int point);
inline constexpr char kEndEffector[] = "ee";
inline constexpr char kJoints[] = "joints";
std::string JointName(int joint);

// Planar arm with link frames (φ_i, p_i) as intermediate nodes. Link i
// depends on the root and on link i-1, so the graph is a DAG. Control points
// interpolate adjacent link endpoints at fractions k / c, k = 1..c.
TaskGraph PlanarFkLeaves(const RobotModel& robot);

// Same leaves on a tree: frame i carries (φ_i, p_i, q_{i+1..n}) so that
// each node has a single parent.
TaskGraph PlanarFkTree(const RobotModel& robot);

// Adds one clearance leaf ‖p - c‖ - r per (control point, obstacle) pair.
// Leaf names are "<control point>/o<k>".
TaskGraph DistanceLeaves(const TaskGraph& fk_graph, const ObstacleSet& obstacles);

// Adds the identity leaf "joints" and one 1-D leaf "joint<i>" per coordinate.
TaskGraph JointLeaves(const TaskGraph& graph);

// Chain of `length` nodes, each feeding `branching` leaves; every node has
// dimension `dim` and every edge is y = tanh(W x + c) with W, c ~ U[-1, 1].
// The graph has 1 + (branching + 1) * length nodes.
TaskGraph ChainBenchmarkGraph(int length, int branching, int dim, std::uint64_t seed);

// Closed-form positions of every control point, in the order the builders
// add them (link-major), for clearance checks outside the tape.
std::vector<Eigen::Vector2d> ControlPointPositions(const RobotModel& robot,
                                                   const Eigen::VectorXd& q);
Eigen::Vector2d EndEffectorPosition(const RobotModel& robot, const Eigen::VectorXd& q);

}  // namespace rmp2

#endif  // RMP2_TASKMAPS_H_
