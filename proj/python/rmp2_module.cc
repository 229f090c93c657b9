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

#include <string>
#include <tuple>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rmp2/bench.h"
#include "rmp2/naive.h"
#include "rmp2/rmp2.h"
#include "rmp2/rmpflow.h"
#include "rmp2/sim.h"
#include "rmp2/verify.h"

namespace py = pybind11;

namespace rmp2 {
namespace {

using ObstacleTuple = std::tuple<double, double, double>;  // cx, cy, radius

Scene MakeScene(const Eigen::VectorXd& q, const Eigen::VectorXd& qd, const Eigen::Vector2d& goal,
                const std::vector<ObstacleTuple>& obstacles) {
  Scene scene;
  scene.initial = {q, qd};
  scene.goal = goal;
  for (const auto& [x, y, r] : obstacles) scene.obstacles.push_back({Eigen::Vector2d(x, y), r});
  ValidateObstacles(scene.obstacles);
  return scene;
}

py::dict ToDict(const PolicyResult& r) {
  py::dict d;
  d["accel"] = r.accel;
  d["force"] = r.root.force;
  d["metric"] = r.root.metric;
  d["tape_nodes"] = r.tape_nodes;
  return d;
}

py::dict ArmPolicy(const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                   const Eigen::Vector2d& goal, const std::vector<ObstacleTuple>& obstacles,
                   const std::string& algorithm) {
  const RobotModel robot;
  const Scene scene = MakeScene(q, qd, goal, obstacles);
  const ConfigState state{q, qd};
  if (algorithm == "rmpflow") {
    RmpStack stack = BuildRmpStack(robot, scene, StackGains{}, true);
    RmpTree tree(std::move(stack.graph), std::move(stack.rmps));
    return ToDict(RmpflowPolicy(tree, state));
  }
  const RmpStack stack = BuildRmpStack(robot, scene, StackGains{});
  if (algorithm == "rmp2") return ToDict(Rmp2Policy(stack.graph, stack.rmps, state));
  if (algorithm == "naive") return ToDict(NaivePolicy(stack.graph, stack.rmps, state));
  if (algorithm == "naive_memory_safe") {
    return ToDict(NaivePolicyMemorySafe(stack.graph, stack.rmps, state));
  }
  throw std::invalid_argument("unknown algorithm '" + algorithm + "'");
}

py::dict ArmParameterGradient(const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                              const Eigen::Vector2d& goal,
                              const std::vector<ObstacleTuple>& obstacles,
                              const Eigen::VectorXd& target) {
  const RobotModel robot;
  const RmpStack stack = BuildRmpStack(robot, MakeScene(q, qd, goal, obstacles), StackGains{});
  if (target.size() != robot.num_links) throw std::invalid_argument("target has the wrong size");
  const ParamGradientResult r = ParameterGradient(
      [&target](const ad::Var& a) {
        ad::Var e = a - a.tape().input(target);
        return dot(e, e);
      },
      stack.rmps, stack.graph, ConfigState{q, qd});
  py::list leaves;
  for (std::size_t k = 0; k < stack.rmps.size(); ++k) {
    py::dict leaf;
    leaf["kind"] = RmpKindName(stack.rmps[k].rmp.kind());
    leaf["node"] = stack.graph.node(stack.rmps[k].node).name;
    leaf["params"] = stack.rmps[k].rmp.params();
    leaf["grad"] = r.grads[k];
    leaves.append(leaf);
  }
  py::dict d;
  d["loss"] = r.loss;
  d["accel"] = r.accel;
  d["leaves"] = leaves;
  return d;
}

py::dict ChainPolicy(int length, int branching, int dim, std::uint64_t seed,
                     const Eigen::VectorXd& q, const Eigen::VectorXd& qd,
                     const std::string& algorithm) {
  const BenchProblem p = MakeBenchProblem(length, branching, dim, seed);
  PolicyEvaluator eval = MakeEvaluator(p, ParseBenchAlgorithm(algorithm), false);
  py::dict d;
  d["nodes"] = p.graph.node_count();
  d["accel"] = eval(ConfigState{q, qd});
  return d;
}

py::list Verify(int cases, std::uint64_t seed, double tol, double fd_tol) {
  VerifyOptions opt{cases, seed, tol, fd_tol};
  py::list out;
  for (const CaseReport& r : RunVerify(opt)) {
    py::dict d;
    d["index"] = r.index;
    d["family"] = r.family;
    d["nodes"] = r.nodes;
    d["tree"] = r.tree;
    d["max_rel_err"] = r.max_error();
    d["fd_rel_err"] = r.finite_difference;
    d["passed"] = r.passed;
    out.append(d);
  }
  return out;
}

py::list GradCheck(int scenes, std::uint64_t seed, double tol, bool joint_rmps) {
  GradCheckOptions opt;
  opt.scenes = scenes;
  opt.seed = seed;
  opt.tol = tol;
  opt.joint_rmps = joint_rmps;
  py::list out;
  for (const GradCheckCase& c : RunGradCheck(opt)) {
    py::dict d;
    d["index"] = c.index;
    d["skipped"] = c.skipped;
    d["message"] = c.message;
    d["active_collision"] = c.active_collision;
    d["attractor_rel_err"] = c.attractor_error;
    d["collision_rel_err"] = c.collision_error;
    d["passed"] = c.passed;
    out.append(d);
  }
  return out;
}

py::dict Benchmark(const std::vector<int>& lengths, int trials,
                   const std::vector<std::string>& algorithms, std::uint64_t seed, bool replay,
                   int branching, int dim) {
  BenchSpec spec;
  spec.lengths = lengths;
  spec.trials = trials;
  spec.seed = seed;
  spec.replay = replay;
  spec.branching = branching;
  spec.dim = dim;
  spec.algorithms.clear();
  for (const std::string& a : algorithms) spec.algorithms.push_back(ParseBenchAlgorithm(a));
  BenchResult r;
  {
    py::gil_scoped_release release;
    r = RunBenchmark(spec);
  }
  py::list rows;
  for (const BenchRow& row : r.rows) {
    py::dict d;
    d["algorithm"] = BenchAlgorithmName(row.algorithm);
    d["length"] = row.length;
    d["N"] = row.nodes;
    d["trials"] = row.trials;
    d["mean_s"] = row.mean_s;
    d["std_s"] = row.std_s;
    d["median_s"] = row.median_s;
    rows.append(d);
  }
  py::dict fits;
  for (const AlgorithmFit& f : r.fits) {
    fits[BenchAlgorithmName(f.algorithm)] = py::make_tuple(f.fit.slope, f.fit.intercept, f.fit.r2);
  }
  py::dict d;
  d["rows"] = rows;
  d["fits"] = fits;
  return d;
}

py::dict Simulate(int env, int episodes, std::uint64_t seed, const std::string& policy,
                  double goal_tolerance) {
  SimConfig cfg;
  cfg.env = EnvConfig::ForEnv(env);
  cfg.env.seed = seed;
  const PolicyAlgorithm algo = ParsePolicyAlgorithm(policy);
  std::vector<EpisodeResult> eps;
  {
    py::gil_scoped_release release;
    eps = RunEpisodes(cfg, episodes, algo);
  }
  const SimSummary s = Summarize(eps, goal_tolerance);
  py::list per_episode;
  for (const EpisodeResult& e : eps) {
    py::dict d;
    d["steps"] = e.steps.size();
    d["terminated_by"] = TerminationName(e.terminated_by);
    d["total_reward"] = e.total_reward;
    d["final_goal_distance"] = e.final_goal_distance;
    d["min_clearance"] = e.min_clearance;
    per_episode.append(d);
  }
  py::dict d;
  d["episodes"] = per_episode;
  d["mean_reward"] = s.mean_reward;
  d["collision_free_fraction"] = s.collision_free_fraction;
  d["goal_reached_fraction"] = s.goal_reached_fraction;
  d["mean_final_distance"] = s.mean_final_distance;
  d["min_clearance"] = s.min_clearance;
  d["min_step_reward"] = s.min_step_reward;
  d["max_step_reward"] = s.max_step_reward;
  d["max_abs_velocity"] = s.max_abs_velocity;
  return d;
}

}  // namespace
}  // namespace rmp2

PYBIND11_MODULE(_rmp2, m) {
  using namespace rmp2;
  m.doc() = "RMP2 policies, verification, benchmark and simulation";

  py::register_exception<ad::DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<ad::ShapeError>(m, "ShapeError", PyExc_ValueError);

  m.def("arm_policy", &ArmPolicy, py::arg("q"), py::arg("qd"), py::arg("goal"),
        py::arg("obstacles") = std::vector<ObstacleTuple>{}, py::arg("algorithm") = "rmp2",
        "Hand-designed stack on the planar three-link arm; obstacles are (cx, cy, r).");
  m.def("arm_parameter_gradient", &ArmParameterGradient, py::arg("q"), py::arg("qd"),
        py::arg("goal"), py::arg("obstacles"), py::arg("target"),
        "Gradient of |a - target|^2 with respect to every leaf RMP's parameters.");
  m.def("chain_policy", &ChainPolicy, py::arg("length"), py::arg("branching") = 3,
        py::arg("dim") = 3, py::arg("seed") = 0, py::arg("q"), py::arg("qd"),
        py::arg("algorithm") = "rmp2");
  m.def("tape_footprint",
        [](int length, const std::string& algorithm, int branching, int dim) {
          return TapeFootprint(MakeBenchProblem(length, branching, dim, 0),
                               ParseBenchAlgorithm(algorithm));
        },
        py::arg("length"), py::arg("algorithm") = "rmp2", py::arg("branching") = 3,
        py::arg("dim") = 3);
  m.def("verify", &Verify, py::arg("cases") = 200, py::arg("seed") = 0, py::arg("tol") = 1e-8,
        py::arg("fd_tol") = 1e-4);
  m.def("gradcheck", &GradCheck, py::arg("scenes") = 20, py::arg("seed") = 0,
        py::arg("tol") = 1e-4, py::arg("joint_rmps") = true);
  m.def("run_benchmark", &Benchmark, py::arg("lengths"), py::arg("trials") = 1000,
        py::arg("algorithms") = std::vector<std::string>{"rmp2", "naive"}, py::arg("seed") = 0,
        py::arg("replay") = true, py::arg("branching") = 3, py::arg("dim") = 3);
  m.def("fit_loglog_slope",
        [](const std::vector<double>& x, const std::vector<double>& y) {
          if (x.size() != y.size()) throw std::invalid_argument("x and y differ in length");
          std::vector<std::pair<double, double>> pts;
          for (std::size_t i = 0; i < x.size(); ++i) pts.emplace_back(x[i], y[i]);
          const LogLogFit f = FitLogLogSlope(pts);
          return py::make_tuple(f.slope, f.intercept, f.r2);
        },
        py::arg("x"), py::arg("y"));
  m.def("simulate", &Simulate, py::arg("env") = 1, py::arg("episodes") = 10, py::arg("seed") = 0,
        py::arg("policy") = "rmp2", py::arg("goal_tolerance") = 0.05);
  m.def("reward",
        [](const Eigen::Vector2d& x, const Eigen::Vector2d& goal,
           const std::vector<double>& clearances, double effort) {
          return Reward(x, goal, clearances, effort, RewardParams{});
        },
        py::arg("x_ee"), py::arg("goal"), py::arg("clearances"), py::arg("effort") = 0.0);
  m.def("step",
        [](const Eigen::VectorXd& q, const Eigen::VectorXd& qd, const Eigen::VectorXd& qdd,
           double dt) {
          const ConfigState s = Step(ConfigState{q, qd}, qdd, RobotModel{}, dt);
          return py::make_tuple(s.q, s.qd);
        },
        py::arg("q"), py::arg("qd"), py::arg("qdd"), py::arg("dt") = 0.0125);
  m.def("end_effector", [](const Eigen::VectorXd& q) { return EndEffectorPosition({}, q); },
        py::arg("q"));
  m.def("control_points", [](const Eigen::VectorXd& q) { return ControlPointPositions({}, q); },
        py::arg("q"));
}
