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

#include "rmp2/taskmaps.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

namespace rmp2 {

using ad::Var;

TaskGraph::TaskGraph(int root_dim, std::string root_name) {
  if (root_dim < 1) throw std::invalid_argument("TaskGraph: root_dim must be >= 1");
  nodes_.push_back(TaskNode{std::move(root_name), root_dim, {}, nullptr, false});
}

int TaskGraph::AddNode(std::string name, int dim, std::vector<int> inputs,
                       EdgeMap map, bool leaf) {
  const int index = static_cast<int>(nodes_.size());
  if (dim < 1) throw std::invalid_argument("TaskGraph: node '" + name + "' has dim < 1");
  if (inputs.empty()) throw std::invalid_argument("TaskGraph: node '" + name + "' has no inputs");
  for (int in : inputs) {
    if (in < 0 || in >= index) {
      throw std::invalid_argument("TaskGraph: node '" + name + "' refers to a later node");
    }
  }
  if (!map) throw std::invalid_argument("TaskGraph: node '" + name + "' has no map");
  if (Find(name) >= 0) throw std::invalid_argument("TaskGraph: duplicate node '" + name + "'");
  nodes_.push_back(TaskNode{std::move(name), dim, std::move(inputs), std::move(map), leaf});
  return index;
}

std::size_t TaskGraph::leaf_count() const {
  return std::count_if(nodes_.begin(), nodes_.end(), [](const TaskNode& n) { return n.leaf; });
}

std::vector<int> TaskGraph::leaves() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].leaf) out.push_back(static_cast<int>(i));
  }
  return out;
}

std::vector<int> TaskGraph::children(int index) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    const auto& in = nodes_[i].inputs;
    if (std::find(in.begin(), in.end(), index) != in.end()) out.push_back(static_cast<int>(i));
  }
  return out;
}

int TaskGraph::max_branching() const {
  std::vector<int> count(nodes_.size(), 0);
  for (const auto& n : nodes_) {
    std::vector<int> in = n.inputs;
    std::sort(in.begin(), in.end());
    in.erase(std::unique(in.begin(), in.end()), in.end());
    for (int i : in) ++count[i];
  }
  return *std::max_element(count.begin(), count.end());
}

bool TaskGraph::is_tree() const {
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    if (nodes_[i].inputs.size() != 1) return false;
  }
  return true;
}

int TaskGraph::Find(const std::string& name) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

std::vector<Var> TaskGraph::Evaluate(const Var& q) const {
  if (q.size() != root_dim()) {
    throw ad::ShapeError("TaskGraph::Evaluate: root has dim " + std::to_string(root_dim()) +
                         ", got " + std::to_string(q.size()));
  }
  std::vector<Var> values;
  values.reserve(nodes_.size());
  values.push_back(q);
  std::vector<Var> args;
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const TaskNode& n = nodes_[i];
    args.clear();
    for (int in : n.inputs) args.push_back(values[in]);
    Var v = n.map(args);
    if (v.cols() != 1 || v.rows() != n.dim) {
      throw ad::ShapeError("TaskGraph: node '" + n.name + "' produced the wrong shape");
    }
    values.push_back(v);
  }
  return values;
}

std::vector<Eigen::VectorXd> TaskGraph::EvaluateValues(const Eigen::VectorXd& q) const {
  ad::Tape tape;
  std::vector<Var> vars = Evaluate(tape.input(q));
  std::vector<Eigen::VectorXd> out;
  out.reserve(vars.size());
  for (const Var& v : vars) out.push_back(v.vector());
  return out;
}

void RobotModel::Validate() const {
  if (num_links < 1) throw std::invalid_argument("RobotModel: num_links must be >= 1");
  if (static_cast<int>(link_lengths.size()) != num_links) {
    throw std::invalid_argument("RobotModel: need one length per link");
  }
  for (double l : link_lengths) {
    if (!(l > 0.0)) throw std::invalid_argument("RobotModel: link lengths must be positive");
  }
  if (!(joint_velocity_limit > 0.0)) {
    throw std::invalid_argument("RobotModel: velocity limit must be positive");
  }
  if (control_points_per_link < 1) {
    throw std::invalid_argument("RobotModel: control_points_per_link must be >= 1");
  }
}

void ValidateObstacles(const ObstacleSet& obstacles) {
  for (const Obstacle& o : obstacles) {
    if (!(o.radius > 0.0) || !o.center.allFinite()) {
      throw std::invalid_argument("obstacle radius must be positive and center finite");
    }
  }
}

std::string ControlPointName(int link, int point) {
  return "cp" + std::to_string(link) + "_" + std::to_string(point);
}

std::string JointName(int joint) { return "joint" + std::to_string(joint); }

namespace {

// [cos φ, sin φ] * length for a 1-element φ.
Var Heading(const Var& phi, double length) {
  return concat(cos(phi), sin(phi)) * length;
}

bool IsControlPoint(const std::string& name) { return name.rfind("cp", 0) == 0; }

}  // namespace

TaskGraph PlanarFkLeaves(const RobotModel& robot) {
  robot.Validate();
  const int n = robot.num_links;
  const int c = robot.control_points_per_link;
  TaskGraph g(n);
  std::vector<int> link(n + 1, -1);
  for (int i = 1; i <= n; ++i) {
    const double l = robot.link_lengths[i - 1];
    if (i == 1) {
      link[i] = g.AddNode("link1", 3, {0}, [l](std::span<const Var> in) {
        Var phi = slice(in[0], 0, 1);
        return concat(phi, Heading(phi, l));
      });
    } else {
      link[i] = g.AddNode("link" + std::to_string(i), 3, {0, link[i - 1]},
                          [l, i](std::span<const Var> in) {
                            Var phi = slice(in[1], 0, 1) + slice(in[0], i - 1, 1);
                            Var p = slice(in[1], 1, 2) + Heading(phi, l);
                            return concat(phi, p);
                          });
    }
    for (int k = 1; k <= c; ++k) {
      const double t = static_cast<double>(k) / c;
      if (i == 1) {
        g.AddLeaf(ControlPointName(i, k), 2, {link[i]},
                  [t](std::span<const Var> in) { return slice(in[0], 1, 2) * t; });
      } else {
        g.AddLeaf(ControlPointName(i, k), 2, {link[i - 1], link[i]},
                  [t](std::span<const Var> in) {
                    return slice(in[0], 1, 2) * (1.0 - t) + slice(in[1], 1, 2) * t;
                  });
      }
    }
  }
  g.AddLeaf(kEndEffector, 2, {link[n]},
            [](std::span<const Var> in) { return slice(in[0], 1, 2); });
  return g;
}

TaskGraph PlanarFkTree(const RobotModel& robot) {
  robot.Validate();
  const int n = robot.num_links;
  const int c = robot.control_points_per_link;
  TaskGraph g(n);
  // frame i = (φ_i, p_i, q_{i+1}, ..., q_n), dimension 3 + n - i.
  int parent = 0;
  for (int i = 1; i <= n; ++i) {
    const double l = robot.link_lengths[i - 1];
    const int rest = n - i;
    EdgeMap map;
    if (i == 1) {
      map = [l, rest](std::span<const Var> in) {
        Var phi = slice(in[0], 0, 1);
        Var out = concat(phi, Heading(phi, l));
        return rest > 0 ? concat(out, slice(in[0], 1, rest)) : out;
      };
    } else {
      map = [l, rest](std::span<const Var> in) {
        const Var& f = in[0];
        Var phi = slice(f, 0, 1) + slice(f, 3, 1);
        Var out = concat(phi, slice(f, 1, 2) + Heading(phi, l));
        return rest > 0 ? concat(out, slice(f, 4, rest)) : out;
      };
    }
    const int frame = g.AddNode("frame" + std::to_string(i), 3 + rest, {parent}, map);
    for (int k = 1; k <= c; ++k) {
      const double back = (1.0 - static_cast<double>(k) / c) * l;
      g.AddLeaf(ControlPointName(i, k), 2, {frame}, [back](std::span<const Var> in) {
        Var phi = slice(in[0], 0, 1);
        return slice(in[0], 1, 2) - Heading(phi, back);
      });
    }
    parent = frame;
  }
  g.AddLeaf(kEndEffector, 2, {parent},
            [](std::span<const Var> in) { return slice(in[0], 1, 2); });
  return g;
}

TaskGraph DistanceLeaves(const TaskGraph& fk_graph, const ObstacleSet& obstacles) {
  ValidateObstacles(obstacles);
  TaskGraph g = fk_graph;
  const std::size_t count = fk_graph.node_count();
  for (std::size_t i = 0; i < count; ++i) {
    const TaskNode& node = fk_graph.node(static_cast<int>(i));
    if (!node.leaf || !IsControlPoint(node.name)) continue;
    for (std::size_t k = 0; k < obstacles.size(); ++k) {
      const Eigen::Vector2d center = obstacles[k].center;
      const double radius = obstacles[k].radius;
      g.AddLeaf(node.name + "/o" + std::to_string(k), 1, {static_cast<int>(i)},
                [center, radius](std::span<const Var> in) {
                  Var e = in[0] - in[0].tape().input(center);
                  return sqrt(squared_norm(e)) - radius;
                });
    }
  }
  return g;
}

TaskGraph JointLeaves(const TaskGraph& graph) {
  TaskGraph g = graph;
  const int n = graph.root_dim();
  g.AddLeaf(kJoints, n, {0}, [](std::span<const Var> in) { return copy(in[0]); });
  for (int i = 0; i < n; ++i) {
    g.AddLeaf(JointName(i), 1, {0}, [i](std::span<const Var> in) { return slice(in[0], i, 1); });
  }
  return g;
}

TaskGraph ChainBenchmarkGraph(int length, int branching, int dim, std::uint64_t seed) {
  if (length < 1 || branching < 1 || dim < 1) {
    throw std::invalid_argument("ChainBenchmarkGraph: length, branching and dim must be >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  auto dense = [&]() {
    Eigen::MatrixXd w(dim, dim);
    Eigen::VectorXd c(dim);
    for (int r = 0; r < dim; ++r) {
      for (int k = 0; k < dim; ++k) w(r, k) = u(rng);
    }
    for (int r = 0; r < dim; ++r) c(r) = u(rng);
    return EdgeMap([w, c](std::span<const Var> in) {
      ad::Tape& t = in[0].tape();
      return tanh(matvec(t.input_matrix(w), in[0]) + t.input(c));
    });
  };
  TaskGraph g(dim);
  int prev = 0;
  for (int i = 1; i <= length; ++i) {
    const int node = g.AddNode("n" + std::to_string(i), dim, {prev}, dense());
    for (int j = 1; j <= branching; ++j) {
      g.AddLeaf("n" + std::to_string(i) + "_leaf" + std::to_string(j), dim, {node}, dense());
    }
    prev = node;
  }
  return g;
}

std::vector<Eigen::Vector2d> ControlPointPositions(const RobotModel& robot,
                                                   const Eigen::VectorXd& q) {
  const int c = robot.control_points_per_link;
  std::vector<Eigen::Vector2d> out;
  out.reserve(robot.num_links * c);
  Eigen::Vector2d prev = Eigen::Vector2d::Zero();
  double phi = 0.0;
  for (int i = 0; i < robot.num_links; ++i) {
    phi += q(i);
    Eigen::Vector2d next = prev + robot.link_lengths[i] * Eigen::Vector2d(std::cos(phi), std::sin(phi));
    for (int k = 1; k <= c; ++k) {
      const double t = static_cast<double>(k) / c;
      out.push_back((1.0 - t) * prev + t * next);
    }
    prev = next;
  }
  return out;
}

Eigen::Vector2d EndEffectorPosition(const RobotModel& robot, const Eigen::VectorXd& q) {
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  double phi = 0.0;
  for (int i = 0; i < robot.num_links; ++i) {
    phi += q(i);
    p += robot.link_lengths[i] * Eigen::Vector2d(std::cos(phi), std::sin(phi));
  }
  return p;
}

}  // namespace rmp2
