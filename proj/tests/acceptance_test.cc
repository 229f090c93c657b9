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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 0 iff
// every criterion passes.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "primitive_cases.h"
#include "random_program.h"
#include "rmp2/bench.h"
#include "rmp2/naive.h"
#include "rmp2/rmp2.h"
#include "rmp2/sim.h"
#include "rmp2/verify.h"
#include "test_util.h"

namespace rmp2 {
namespace {

using ad::Tape;
using ad::Var;
using testing::FiniteDifferenceJacobian;
using testing::RandomVector;

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// 1. Cross-algorithm equivalence.
Outcome Equivalence() {
  const auto t0 = std::chrono::steady_clock::now();
  VerifyOptions opt;
  opt.cases = 200;
  opt.seed = 0;
  opt.tol = 1e-8;
  opt.fd_tol = 1e-4;
  const std::vector<CaseReport> reports = RunVerify(opt);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  std::set<std::string> families;
  int failed = 0, trees = 0;
  std::size_t max_nodes = 0;
  double worst = 0.0, worst_fd = 0.0;
  for (const CaseReport& r : reports) {
    families.insert(r.family);
    failed += !r.passed;
    trees += r.tree;
    max_nodes = std::max(max_nodes, r.nodes);
    worst = std::max(worst, r.max_error());
    worst_fd = std::max(worst_fd, r.finite_difference);
  }
  const bool ok = reports.size() >= 200 && failed == 0 && families.size() == 4 &&
                  max_nodes <= 30 && trees > 0 && worst <= 1e-8 && worst_fd <= 1e-4 &&
                  secs < 60.0;
  return {ok, Format("%zu instances (%d trees, %zu families, N<=%zu), algo rel err %.2e <= 1e-8, "
                     "finite-difference rel err %.2e <= 1e-4, %.1f s < 60 s",
                     reports.size(), trees, families.size(), max_nodes, worst, worst_fd, secs)};
}

// 2. Complexity separation on chain graphs.
Outcome Complexity() {
  const auto t0 = std::chrono::steady_clock::now();
  BenchSpec spec;
  spec.trials = 1000;
  spec.algorithms = {BenchAlgorithm::kRmp2, BenchAlgorithm::kNaive};
  const BenchResult r = RunBenchmark(spec);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double rmp2 = 0, naive = 0, r2_rmp2 = 0, r2_naive = 0;
  for (const AlgorithmFit& f : r.fits) {
    if (f.algorithm == BenchAlgorithm::kRmp2) {
      rmp2 = f.fit.slope;
      r2_rmp2 = f.fit.r2;
    } else {
      naive = f.fit.slope;
      r2_naive = f.fit.r2;
    }
  }
  const bool ok = rmp2 >= 0.7 && rmp2 <= 1.3 && naive - rmp2 >= 0.4 && secs < 600.0;
  return {ok, Format("b=d=3, l=4..36, %d trials: rmp2 slope %.3f in [0.7, 1.3] (R^2 %.3f), "
                     "naive slope %.3f (R^2 %.3f), gap %.3f >= 0.4, %.1f s",
                     spec.trials, rmp2, r2_rmp2, naive, r2_naive, naive - rmp2, secs)};
}

// 3. JVP, primitive gradients and double backward.
Outcome Derivatives() {
  std::mt19937_64 rng(3);
  double jvp_err = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto program = testing::RandomProgram::Generate(rng, 20, 5);
    Tape tape;
    Var u = tape.input(RandomVector(rng, program.input_dim(), -1.5, 1.5));
    Var v = program.Evaluate(u);
    const Eigen::VectorXd w = RandomVector(rng, program.input_dim());
    const Eigen::VectorXd expected = ad::Jacobian(v, u).value() * w;
    jvp_err = std::max(jvp_err,
                       testing::RelativeError(ad::Jvp(v, u, w).vector(), expected, 1e-12));
  }
  // Task graphs as well as bare programs.
  for (int trial = 0; trial < 100; ++trial) {
    const VerifyInstance inst = RandomInstance(rng, trial);
    Tape tape;
    Var q = tape.input(inst.state.q);
    const std::vector<Var> nodes = inst.graph.Evaluate(q);
    for (int leaf : inst.graph.leaves()) {
      const Eigen::VectorXd expected = ad::Jacobian(nodes[leaf], q).value() * inst.state.qd;
      jvp_err = std::max(jvp_err, testing::RelativeError(
                                      ad::Jvp(nodes[leaf], q, inst.state.qd).vector(), expected,
                                      1e-12));
    }
  }

  double prim_err = 0.0;
  std::string worst_prim;
  const auto cases = testing::PrimitiveCases();
  for (const testing::PrimitiveCase& pc : cases) {
    for (int sample = 0; sample < 20; ++sample) {
      Eigen::VectorXd x = RandomVector(rng, 2 * pc.dim, -2.0, 2.0);
      for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = pc.domain(x(i));
      Eigen::VectorXd weights;
      {
        Tape t;
        weights = RandomVector(rng, pc.apply(t.input(x.head(pc.dim)), t.input(x.tail(pc.dim))).size());
      }
      auto f = [&](const Eigen::VectorXd& z) {
        Tape t;
        Var y = pc.apply(t.input(z.head(pc.dim)), t.input(z.tail(pc.dim)));
        return Eigen::VectorXd::Constant(1, y.vector().dot(weights));
      };
      Tape t;
      Var a = t.input(x.head(pc.dim));
      Var b = t.input(x.tail(pc.dim));
      Var s = dot(pc.apply(a, b), t.input(weights));
      const Var wrt[] = {a, b};
      const std::vector<Var> g = ad::Gradients(s, wrt);
      Eigen::VectorXd analytic(2 * pc.dim);
      analytic << g[0].vector(), g[1].vector();
      const double e = testing::RelativeError(analytic, FiniteDifferenceJacobian(f, x).row(0).transpose(),
                                              1e-3);
      if (e > prim_err) {
        prim_err = e;
        worst_prim = pc.name;
      }
    }
  }

  double hess_err = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const auto program = testing::RandomProgram::Generate(rng, 12, 4);
    const Eigen::VectorXd x0 = RandomVector(rng, program.input_dim());
    const Eigen::VectorXd probe = RandomVector(rng, program.output_dim(x0));
    auto grad_fn = [&](const Eigen::VectorXd& x) {
      Tape t;
      Var u = t.input(x);
      return ad::Gradient(dot(program.Evaluate(u), t.input(probe)), u).vector();
    };
    Tape t;
    Var u = t.input(x0);
    Var g = ad::Gradient(dot(program.Evaluate(u), t.input(probe)), u, true);
    hess_err = std::max(hess_err, testing::RelativeError(ad::Jacobian(g, u).value(),
                                                         FiniteDifferenceJacobian(grad_fn, x0),
                                                         1e-3));
  }
  const bool ok = jvp_err <= 1e-10 && prim_err <= 1e-5 && hess_err <= 1e-4;
  return {ok, Format("jvp vs Jacobian product %.2e <= 1e-10 (200 graphs), %zu primitive gradients "
                     "%.2e <= 1e-5 (worst: %s), double backward %.2e <= 1e-4",
                     jvp_err, cases.size(), prim_err, worst_prim.c_str(), hess_err)};
}

// 4. Two-link curvature against the hand-derived J̇ q̇.
Outcome Curvature() {
  RobotModel robot;
  robot.num_links = 2;
  robot.link_lengths = {0.3, 0.2};
  const TaskGraph g = PlanarFkLeaves(robot);
  const int ee = g.Find(kEndEffector);
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::VectorXd q = RandomVector(rng, 2, -std::numbers::pi, std::numbers::pi);
    const Eigen::VectorXd qd = RandomVector(rng, 2, -2.0, 2.0);
    Tape tape;
    Var qv = tape.input(q);
    Var qdv = tape.input(qd);
    Var xd = ad::Jvp(g.Evaluate(qv)[ee], qv, qdv, true);
    const Eigen::VectorXd c = ad::Jvp(xd, qv, qdv).vector();
    // x = l1 [cos θ1, sin θ1] + l2 [cos(θ1+θ2), sin(θ1+θ2)]
    const double p1 = q(0), p2 = q(0) + q(1);
    const double w1 = qd(0), w2 = qd(0) + qd(1);
    const Eigen::Vector2d expected =
        -0.3 * w1 * w1 * Eigen::Vector2d(std::cos(p1), std::sin(p1)) -
        0.2 * w2 * w2 * Eigen::Vector2d(std::cos(p2), std::sin(p2));
    worst = std::max(worst, (c - expected).cwiseAbs().maxCoeff());
  }
  return {worst <= 1e-9, Format("100 states, max abs err %.2e <= 1e-9", worst)};
}

// 5. Tape footprint.
Outcome Memory() {
  std::vector<double> n, rmp2, naive;
  for (int l = 4; l <= 36; l += 4) {
    const BenchProblem p = MakeBenchProblem(l, 3, 3, 0);
    n.push_back(static_cast<double>(p.graph.node_count()));
    rmp2.push_back(static_cast<double>(TapeFootprint(p, BenchAlgorithm::kRmp2)));
    naive.push_back(static_cast<double>(TapeFootprint(p, BenchAlgorithm::kNaive)));
  }
  // Linear least squares of tape nodes on N.
  const double k = static_cast<double>(n.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    mx += n[i] / k;
    my += rmp2[i] / k;
  }
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    sxx += (n[i] - mx) * (n[i] - mx);
    sxy += (n[i] - mx) * (rmp2[i] - my);
    syy += (rmp2[i] - my) * (rmp2[i] - my);
  }
  const double r2 = sxy * sxy / (sxx * syy);
  const double rmp2_ratio = rmp2.back() / rmp2.front();
  const double naive_ratio = naive.back() / naive.front();
  bool faster = true;
  for (std::size_t i = 1; i < n.size(); ++i) {
    faster = faster && naive[i] / naive[i - 1] > rmp2[i] / rmp2[i - 1];
  }
  const bool ok = r2 >= 0.999 && naive_ratio >= 2.0 * rmp2_ratio && faster;
  return {ok, Format("rmp2 tape nodes linear in N with R^2 %.6f >= 0.999; l=36/l=4 ratio rmp2 "
                     "%.2f, naive %.2f >= 2 x %.2f",
                     r2, rmp2_ratio, naive_ratio, rmp2_ratio)};
}

// 6. Simulation properties on Env 1.
Outcome Simulation() {
  const auto t0 = std::chrono::steady_clock::now();
  SimConfig cfg;
  cfg.env = EnvConfig::ForEnv(1);
  const std::vector<EpisodeResult> eps = RunEpisodes(cfg, 100, PolicyAlgorithm::kRmp2);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const SimSummary s = Summarize(eps, 0.1);
  const int collisions =
      static_cast<int>(std::count_if(eps.begin(), eps.end(), [](const EpisodeResult& e) {
        return e.terminated_by == Termination::kCollision;
      }));
  const bool ok = collisions == 0 && s.goal_reached_fraction >= 0.8 && s.min_step_reward >= -5.0 &&
                  s.max_step_reward <= 1.0 && s.max_abs_velocity <= 1.0 && secs < 300.0;
  return {ok, Format("100 Env-1 episodes: %d collisions, %.0f%% within 0.1 m (>= 80%%), step "
                     "rewards in [%.3f, %.3f], max |qd| %.4f <= 1, min clearance %.4f m, %.1f s",
                     collisions, 100.0 * s.goal_reached_fraction, s.min_step_reward,
                     s.max_step_reward, s.max_abs_velocity, s.min_clearance, secs)};
}

// 7. Parameter gradients of the full policy.
Outcome Differentiability() {
  GradCheckOptions opt;
  opt.scenes = 20;
  opt.tol = 1e-4;
  const std::vector<GradCheckCase> cases = RunGradCheck(opt);
  int failed = 0, skipped = 0, with_active = 0;
  double att = 0, col = 0;
  for (const GradCheckCase& c : cases) {
    failed += !c.skipped && !c.passed;
    skipped += c.skipped;
    with_active += c.active_collision > 0;
    att = std::max(att, c.attractor_error);
    col = std::max(col, c.collision_error);
  }
  const bool ok = failed == 0 && skipped == 0 && with_active == opt.scenes && att <= 1e-4 &&
                  col <= 1e-4;
  return {ok, Format("20 three-link scenes (%d with active collision RMPs, %d skipped): attractor "
                     "rel err %.2e, collision rel err %.2e <= 1e-4",
                     with_active, skipped, att, col)};
}

}  // namespace
}  // namespace rmp2

int main() {
  using rmp2::Outcome;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"cross-algorithm equivalence", rmp2::Equivalence},
      {"complexity separation", rmp2::Complexity},
      {"jvp and gradient correctness", rmp2::Derivatives},
      {"analytic curvature", rmp2::Curvature},
      {"linear memory", rmp2::Memory},
      {"simulation properties", rmp2::Simulation},
      {"end-to-end differentiability", rmp2::Differentiability},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.passed;
    std::printf("%s %zu %s: %s\n", o.passed ? "PASS" : "FAIL", i + 1, criteria[i].first,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
