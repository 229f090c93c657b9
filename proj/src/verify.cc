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

#include "rmp2/verify.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "rmp2/naive.h"
#include "rmp2/rmp2.h"
#include "rmp2/rmpflow.h"
#include "rmp2/sim.h"

namespace rmp2 {

using ad::Var;

namespace {

int UniformInt(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Eigen::VectorXd UniformVector(std::mt19937_64& rng, int n, double lo, double hi) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = Uniform(rng, lo, hi);
  return v;
}

Eigen::MatrixXd UniformMatrix(std::mt19937_64& rng, int rows, int cols) {
  Eigen::MatrixXd m(rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) m(r, c) = Uniform(rng, -1.0, 1.0);
  }
  return m;
}

LeafRmp RandomConstantRmp(std::mt19937_64& rng, int dim) {
  Eigen::MatrixXd a = UniformMatrix(rng, dim, dim);
  Eigen::MatrixXd m = a * a.transpose() / dim + 0.1 * Eigen::MatrixXd::Identity(dim, dim);
  return ConstantRmp(0.5 * (m + m.transpose()), UniformVector(rng, dim, -1.0, 1.0));
}

LeafRmp RandomLeafRmp(std::mt19937_64& rng, int dim) {
  if (UniformInt(rng, 0, 1) == 0) return RandomConstantRmp(rng, dim);
  AttractorParams p;
  p.gain = Uniform(rng, 0.5, 5.0);
  p.damping = Uniform(rng, 0.5, 3.0);
  p.softness = Uniform(rng, 0.1, 1.0);
  return GoalAttractor(UniformVector(rng, dim, -1.0, 1.0), p);
}

void AddRegularizer(std::mt19937_64& rng, VerifyInstance& inst) {
  const int d = inst.graph.root_dim();
  const int node = inst.graph.AddLeaf("reg", d, {0}, [](std::span<const Var> in) {
    return copy(in[0]);
  });
  inst.rmps.push_back({node, ConstantRmp(0.1 * Eigen::MatrixXd::Identity(d, d),
                                         UniformVector(rng, d, -1.0, 1.0))});
}

void RandomState(std::mt19937_64& rng, VerifyInstance& inst, double q_range, double qd_range) {
  const int d = inst.graph.root_dim();
  inst.state.q = UniformVector(rng, d, -q_range, q_range);
  inst.state.qd = UniformVector(rng, d, -qd_range, qd_range);
}

// One random smooth map from the concatenated inputs (size n) to dim m.
EdgeMap RandomEdge(std::mt19937_64& rng, int n, int m) {
  const Eigen::MatrixXd w = UniformMatrix(rng, m, n);
  const Eigen::MatrixXd w2 = UniformMatrix(rng, m, n);
  const Eigen::VectorXd c = UniformVector(rng, m, -1.0, 1.0);
  const int kind = UniformInt(rng, 0, 3);
  return [w, w2, c, kind](std::span<const Var> in) {
    ad::Tape& t = in[0].tape();
    Var x = in.size() == 1 ? in[0] : concat(in);
    Var wx = matvec(t.input_matrix(w), x);
    switch (kind) {
      case 0: return tanh(wx + t.input(c));
      case 1: return sin(wx) + t.input(c);
      case 2: return matvec(t.input_matrix(w2), square(x)) * 0.5 + wx;
      default: {
        Var y = tanh(matvec(t.input_matrix(w2), x));
        return mul(y, wx) + t.input(c);
      }
    }
  };
}

}  // namespace

VerifyInstance RandomChainInstance(std::mt19937_64& rng) {
  const int d = UniformInt(rng, 1, 5);
  const int b = UniformInt(rng, 1, 3);
  // 1 + (b + 1) l + 1 <= kMaxVerifyNodes, the last node being the regularizer.
  const int max_l = (kMaxVerifyNodes - 2) / (b + 1);
  const int l = UniformInt(rng, 1, std::min(max_l, 7));
  VerifyInstance inst;
  inst.family = "chain";
  inst.graph = ChainBenchmarkGraph(l, b, d, rng());
  for (int leaf : inst.graph.leaves()) inst.rmps.push_back({leaf, RandomLeafRmp(rng, d)});
  AddRegularizer(rng, inst);
  RandomState(rng, inst, 1.0, 1.0);
  return inst;
}

VerifyInstance RandomArmInstance(std::mt19937_64& rng, bool tree) {
  RobotModel robot;
  robot.num_links = UniformInt(rng, 2, 3);
  robot.control_points_per_link = UniformInt(rng, 1, 2);
  robot.link_lengths.clear();
  for (int i = 0; i < robot.num_links; ++i) robot.link_lengths.push_back(Uniform(rng, 0.15, 0.35));
  const int n = robot.num_links;
  const int points = n * robot.control_points_per_link;

  VerifyInstance inst;
  inst.family = tree ? "arm_tree" : "arm";
  TaskGraph base = JointLeaves(tree ? PlanarFkTree(robot) : PlanarFkLeaves(robot));
  const int room = kMaxVerifyNodes - 1 - static_cast<int>(base.node_count());
  const int obstacles = std::min(UniformInt(rng, 0, 2), std::max(room, 0) / points);

  inst.state.q = UniformVector(rng, n, -std::numbers::pi, std::numbers::pi);
  inst.state.qd = UniformVector(rng, n, -1.0, 1.0);
  const std::vector<Eigen::Vector2d> cps = ControlPointPositions(robot, inst.state.q);
  ObstacleSet set;
  while (static_cast<int>(set.size()) < obstacles) {
    Obstacle o{Eigen::Vector2d(Uniform(rng, -0.9, 0.9), Uniform(rng, -0.9, 0.9)),
               Uniform(rng, 0.05, 0.1)};
    bool clear = true;
    for (const auto& p : cps) clear = clear && (p - o.center).norm() - o.radius > 0.02;
    if (clear) set.push_back(o);
  }
  inst.graph = DistanceLeaves(base, set);

  AttractorParams ap;
  ap.gain = Uniform(rng, 1.0, 10.0);
  inst.rmps.push_back(Bind(inst.graph, kEndEffector,
                           GoalAttractor(UniformVector(rng, 2, -0.6, 0.6), ap)));
  inst.rmps.push_back(Bind(inst.graph, kJoints, JointDamping(n)));
  for (int i = 0; i < n; ++i) {
    inst.rmps.push_back(Bind(inst.graph, JointName(i), JointVelocityLimit(robot.joint_velocity_limit)));
  }
  for (int leaf : inst.graph.leaves()) {
    if (inst.graph.node(leaf).name.find("/o") != std::string::npos) {
      inst.rmps.push_back({leaf, CollisionAvoidance()});
    }
  }
  AddRegularizer(rng, inst);
  return inst;
}

VerifyInstance RandomDagInstance(std::mt19937_64& rng) {
  const int d = UniformInt(rng, 1, 5);
  const int total = UniformInt(rng, 6, kMaxVerifyNodes - 1);
  VerifyInstance inst;
  inst.family = "dag";
  TaskGraph g(d);
  for (int i = 1; i < total; ++i) {
    std::vector<int> inputs = {UniformInt(rng, 0, i - 1)};
    if (i > 1 && UniformInt(rng, 0, 1) == 1) {
      int other = UniformInt(rng, 0, i - 1);
      if (other != inputs[0]) inputs.push_back(other);
    }
    int n = 0;
    for (int in : inputs) n += g.node(in).dim;
    const int m = UniformInt(rng, 1, 5);
    g.AddNode("v" + std::to_string(i), m, inputs, RandomEdge(rng, n, m));
  }
  inst.graph = TaskGraph(d);
  // Rebuild with leaf flags: every sink and a third of the other nodes.
  for (int i = 1; i < total; ++i) {
    const TaskNode& node = g.node(i);
    const bool leaf = g.children(i).empty() || UniformInt(rng, 0, 2) == 0;
    inst.graph.AddNode(node.name, node.dim, node.inputs, node.map, leaf);
  }
  for (int leaf : inst.graph.leaves()) {
    inst.rmps.push_back({leaf, RandomLeafRmp(rng, inst.graph.node(leaf).dim)});
  }
  AddRegularizer(rng, inst);
  RandomState(rng, inst, 1.0, 1.0);
  return inst;
}

VerifyInstance RandomInstance(std::mt19937_64& rng, int index) {
  switch (index % 4) {
    case 0: return RandomChainInstance(rng);
    case 1: return RandomArmInstance(rng, false);
    case 2: return RandomArmInstance(rng, true);
    default: return RandomDagInstance(rng);
  }
}

RmpNatural FiniteDifferenceRootRmp(const TaskGraph& graph, std::span<const RmpBinding> rmps,
                                   const ConfigState& state) {
  const int d = graph.root_dim();
  state.Validate(d);
  std::vector<Eigen::Index> offset;
  Eigen::Index rows = 0;
  for (const RmpBinding& b : rmps) {
    offset.push_back(rows);
    rows += b.rmp.dim();
  }
  auto stacked = [&](const Eigen::VectorXd& q) {
    const std::vector<Eigen::VectorXd> values = graph.EvaluateValues(q);
    Eigen::VectorXd out(rows);
    for (std::size_t k = 0; k < rmps.size(); ++k) {
      out.segment(offset[k], rmps[k].rmp.dim()) = values[rmps[k].node];
    }
    return out;
  };

  const double h = 1e-6;
  Eigen::MatrixXd j(rows, d);
  for (int i = 0; i < d; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(d);
    e(i) = h;
    j.col(i) = (stacked(state.q + e) - stacked(state.q - e)) / (2.0 * h);
  }
  const double h2 = 1e-4;
  const Eigen::VectorXd x = stacked(state.q);
  const Eigen::VectorXd curvature =
      (stacked(state.q + h2 * state.qd) - 2.0 * x + stacked(state.q - h2 * state.qd)) /
      (h2 * h2);
  const Eigen::VectorXd xd = j * state.qd;

  RmpNatural root{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  for (std::size_t k = 0; k < rmps.size(); ++k) {
    const Eigen::Index m = rmps[k].rmp.dim();
    const Eigen::MatrixXd jk = j.middleRows(offset[k], m);
    RmpCanonical leaf = rmps[k].rmp.Evaluate(x.segment(offset[k], m), xd.segment(offset[k], m));
    root.metric += jk.transpose() * leaf.metric * jk;
    root.force += jk.transpose() * leaf.metric * (leaf.accel - curvature.segment(offset[k], m));
  }
  return root;
}

double CaseReport::max_error() const {
  double e = std::max(naive, memory_safe);
  if (tree) e = std::max(e, rmpflow);
  return e;
}

CaseReport CheckInstance(const VerifyInstance& inst, double tol, double fd_tol) {
  CaseReport report;
  report.family = inst.family;
  report.nodes = inst.graph.node_count();
  report.tree = inst.graph.is_tree();

  const Eigen::VectorXd ref = Rmp2Policy(inst.graph, inst.rmps, inst.state).accel;
  const Eigen::VectorXd naive = NaivePolicy(inst.graph, inst.rmps, inst.state).accel;
  const Eigen::VectorXd safe = NaivePolicyMemorySafe(inst.graph, inst.rmps, inst.state).accel;
  const Eigen::VectorXd fd = Resolve(FiniteDifferenceRootRmp(inst.graph, inst.rmps, inst.state));
  report.naive = RelativeError(naive, ref);
  report.memory_safe = RelativeError(safe, ref);
  report.finite_difference =
      std::max({RelativeError(ref, fd), RelativeError(naive, fd), RelativeError(safe, fd)});
  report.rmpflow = std::numeric_limits<double>::quiet_NaN();
  if (report.tree) {
    RmpTree tree(inst.graph, inst.rmps);
    const Eigen::VectorXd flow = RmpflowPolicy(tree, inst.state).accel;
    report.rmpflow = RelativeError(flow, ref);
    report.finite_difference = std::max(report.finite_difference, RelativeError(flow, fd));
  }
  report.passed = report.naive <= tol && report.memory_safe <= tol &&
                  (!report.tree || report.rmpflow <= tol) && report.finite_difference <= fd_tol;
  return report;
}

std::vector<CaseReport> RunVerify(const VerifyOptions& options,
                                  const std::function<void(const CaseReport&)>& on_case) {
  if (options.cases < 1) throw std::invalid_argument("verify: cases must be >= 1");
  if (!(options.tol >= 0.0) || !(options.fd_tol >= 0.0)) {
    throw std::invalid_argument("verify: tolerances must be >= 0");
  }
  std::mt19937_64 rng(options.seed);
  std::vector<CaseReport> reports;
  for (int i = 0; i < options.cases; ++i) {
    VerifyInstance inst = RandomInstance(rng, i);
    CaseReport report = CheckInstance(inst, options.tol, options.fd_tol);
    report.index = i;
    if (on_case) on_case(report);
    reports.push_back(report);
  }
  return reports;
}

// ---------------------------------------------------------------------------
// Parameter gradients.

namespace {

double Loss(const Eigen::VectorXd& a, const Eigen::VectorXd& target) {
  return (a - target).squaredNorm();
}

// Central differences of the loss with respect to binding k's parameters.
Eigen::VectorXd ParamFiniteDifference(const TaskGraph& graph, const std::vector<RmpBinding>& rmps,
                                      std::size_t k, const ConfigState& state,
                                      const Eigen::VectorXd& target) {
  const Eigen::VectorXd p0 = rmps[k].rmp.params();
  Eigen::VectorXd grad(p0.size());
  std::vector<RmpBinding> moved = rmps;
  for (Eigen::Index i = 0; i < p0.size(); ++i) {
    const double h = 1e-6 * std::max(1.0, std::abs(p0(i)));
    Eigen::VectorXd p = p0;
    p(i) = p0(i) + h;
    moved[k].rmp = rmps[k].rmp.WithParams(p);
    const double up = Loss(Rmp2Policy(graph, moved, state).accel, target);
    p(i) = p0(i) - h;
    moved[k].rmp = rmps[k].rmp.WithParams(p);
    const double down = Loss(Rmp2Policy(graph, moved, state).accel, target);
    grad(i) = (up - down) / (2.0 * h);
  }
  return grad;
}

// Random state with every clearance positive and away from the activation
// kink; prefers states where some collision leaf is active.
ConfigState GradCheckState(const RobotModel& robot, const Scene& scene, double activation,
                           std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uq(-1.2, 1.2), uqd(-0.5, 0.5);
  ConfigState fallback = scene.initial;
  for (int attempt = 0; attempt < 2000; ++attempt) {
    ConfigState s{scene.initial.q, Eigen::VectorXd(robot.num_links)};
    for (int i = 0; i < robot.num_links; ++i) s.q(i) += uq(rng);
    for (int i = 0; i < robot.num_links; ++i) s.qd(i) = uqd(rng);
    bool valid = true, active = false;
    const std::vector<Eigen::Vector2d> points = ControlPointPositions(robot, s.q);
    for (const Obstacle& o : scene.obstacles) {
      for (const Eigen::Vector2d& p : points) {
        const double d = (p - o.center).norm() - o.radius;
        valid = valid && d > 0.02 && std::abs(d - activation) > 1e-3;
        active = active || d < activation;
      }
    }
    if (valid && active) return s;
    if (valid && attempt == 0) fallback = s;
  }
  return fallback;
}

}  // namespace

std::vector<GradCheckCase> RunGradCheck(const GradCheckOptions& options,
                                        const std::function<void(const GradCheckCase&)>& on_case) {
  if (options.scenes < 1) throw std::invalid_argument("gradcheck: scenes must be >= 1");
  if (!(options.tol >= 0.0)) throw std::invalid_argument("gradcheck: tol must be >= 0");
  const EnvConfig env = EnvConfig::ForEnv(options.env_id);
  const RobotModel robot;
  const StackGains gains;
  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<GradCheckCase> out;
  for (int index = 0; index < options.scenes; ++index) {
    const Scene scene = SampleScene(env, robot, rng);
    const ConfigState state = GradCheckState(robot, scene, gains.collision.activation, rng);
    Eigen::VectorXd target(robot.num_links);
    for (int i = 0; i < robot.num_links; ++i) target(i) = u(rng);

    RmpStack stack = BuildRmpStack(robot, scene, gains);
    if (!options.joint_rmps) {
      std::erase_if(stack.rmps, [](const RmpBinding& b) {
        return b.rmp.kind() == RmpKind::kJointDamping ||
               b.rmp.kind() == RmpKind::kJointVelocityLimit;
      });
    }

    GradCheckCase c;
    c.index = index;
    const std::vector<Eigen::Vector2d> points = ControlPointPositions(robot, state.q);
    for (const Obstacle& o : scene.obstacles) {
      for (const Eigen::Vector2d& p : points) {
        c.active_collision += (p - o.center).norm() - o.radius < gains.collision.activation;
      }
    }
    try {
      const ParamGradientResult r = ParameterGradient(
          [&target](const ad::Var& a) {
            ad::Var e = a - a.tape().input(target);
            return dot(e, e);
          },
          stack.rmps, stack.graph, state);
      for (std::size_t k = 0; k < stack.rmps.size(); ++k) {
        const RmpKind kind = stack.rmps[k].rmp.kind();
        if (kind != RmpKind::kGoalAttractor && kind != RmpKind::kCollisionAvoidance) continue;
        const Eigen::VectorXd fd = ParamFiniteDifference(stack.graph, stack.rmps, k, state, target);
        const double err = (r.grads[k] - fd).norm() /
                           std::max({r.grads[k].norm(), fd.norm(), 1e-8});
        double& worst = kind == RmpKind::kGoalAttractor ? c.attractor_error : c.collision_error;
        worst = std::max(worst, err);
      }
      c.passed = c.attractor_error <= options.tol && c.collision_error <= options.tol;
    } catch (const ad::DomainError& e) {
      c.skipped = true;
      c.message = e.what();
    }
    if (on_case) on_case(c);
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace rmp2
