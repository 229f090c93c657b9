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

// rmp2 verify | bench | sim | gradcheck
//
// Exit codes: 0 success, 1 check failure or runtime error, 2 usage error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rmp2/bench.h"
#include "rmp2/sim.h"
#include "rmp2/verify.h"

namespace {

constexpr int kOk = 0;
constexpr int kCheckFailed = 1;
constexpr int kUsage = 2;

class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// --seed, then RMP2_SEED, then `fallback`.
std::uint64_t ResolveSeed(const std::optional<std::uint64_t>& flag, std::uint64_t fallback) {
  if (flag) return *flag;
  if (const char* env = std::getenv("RMP2_SEED"); env != nullptr && *env != '\0') {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (errno != 0 || *end != '\0' || env[0] == '-') {
      throw UsageError(std::string("RMP2_SEED is not an unsigned integer: '") + env + "'");
    }
    return v;
  }
  return fallback;
}

struct VerifyArgs {
  rmp2::VerifyOptions options;
  std::optional<std::uint64_t> seed;
  bool quiet = false;
};

int RunVerifyCommand(VerifyArgs& args) {
  if (args.options.cases < 1) throw UsageError("--cases must be >= 1");
  if (args.options.tol < 0 || args.options.fd_tol < 0) throw UsageError("tolerances must be >= 0");
  args.options.seed = ResolveSeed(args.seed, 0);
  int failed = 0;
  double worst = 0.0, worst_fd = 0.0;
  const auto reports = rmp2::RunVerify(args.options, [&](const rmp2::CaseReport& r) {
    failed += !r.passed;
    worst = std::max(worst, r.max_error());
    worst_fd = std::max(worst_fd, r.finite_difference);
    if (!args.quiet || !r.passed) {
      std::printf("case %3d %-8s N=%2zu%s max_rel_err=%.3e fd_rel_err=%.3e %s\n", r.index,
                  r.family.c_str(), r.nodes, r.tree ? " tree" : "     ", r.max_error(),
                  r.finite_difference, r.passed ? "PASS" : "FAIL");
    }
  });
  std::printf("verify: %zu cases, %d failed, seed %llu, max_rel_err %.3e (tol %.1e), "
              "fd_rel_err %.3e (tol %.1e)\n",
              reports.size(), failed, static_cast<unsigned long long>(args.options.seed), worst,
              args.options.tol, worst_fd, args.options.fd_tol);
  return failed == 0 ? kOk : kCheckFailed;
}

struct BenchArgs {
  rmp2::BenchSpec spec;
  std::vector<std::string> algos = {"rmp2", "naive"};
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string gnuplot;
  bool dynamic = false;
};

int RunBenchCommand(BenchArgs& args) {
  args.spec.algorithms.clear();
  for (const std::string& a : args.algos) {
    if (a.empty()) continue;
    try {
      args.spec.algorithms.push_back(rmp2::ParseBenchAlgorithm(a));
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  if (args.spec.algorithms.empty()) throw UsageError("--algos must name at least one algorithm");
  args.spec.seed = ResolveSeed(args.seed, 0);
  args.spec.replay = !args.dynamic;
  try {
    args.spec.Validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::printf("%-18s %6s %5s %12s %12s %12s\n", "algorithm", "length", "N", "mean_s", "std_s",
              "median_s");
  const rmp2::BenchResult result = rmp2::RunBenchmark(args.spec, [](const rmp2::BenchRow& r) {
    std::printf("%-18s %6d %5d %12.6e %12.6e %12.6e\n", rmp2::BenchAlgorithmName(r.algorithm),
                r.length, r.nodes, r.mean_s, r.std_s, r.median_s);
    std::fflush(stdout);
  });
  for (const rmp2::AlgorithmFit& f : result.fits) {
    std::printf("slope %-18s %.3f (intercept %.3f, R^2 %.4f)\n",
                rmp2::BenchAlgorithmName(f.algorithm), f.fit.slope, f.fit.intercept, f.fit.r2);
  }
  if (!args.out.empty()) {
    std::ofstream csv(args.out);
    if (!csv) throw std::runtime_error("cannot write " + args.out);
    rmp2::WriteBenchCsv(csv, result);
  }
  if (!args.gnuplot.empty()) {
    std::ofstream dat(args.gnuplot);
    if (!dat) throw std::runtime_error("cannot write " + args.gnuplot);
    rmp2::WriteGnuplotData(dat, result);
  }
  return kOk;
}

struct SimArgs {
  std::optional<int> env;
  int episodes = 10;
  std::optional<std::uint64_t> seed;
  std::string policy = "rmp2";
  std::string log;
  double goal_tolerance = 0.05;
  bool quiet = false;
};

int RunSimCommand(SimArgs& args, const std::string& config_path) {
  if (args.episodes < 1) throw UsageError("--episodes must be >= 1");
  if (args.env && (*args.env < 1 || *args.env > 3)) throw UsageError("--env must be 1, 2 or 3");
  if (!(args.goal_tolerance > 0)) throw UsageError("--goal-tolerance must be positive");
  rmp2::PolicyAlgorithm algorithm;
  try {
    algorithm = rmp2::ParsePolicyAlgorithm(args.policy);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  rmp2::SimConfig cfg;
  cfg.env.seed = ResolveSeed(std::nullopt, 0);
  try {
    if (!config_path.empty()) cfg = rmp2::LoadSimConfig(config_path, cfg);
    if (args.env && *args.env != cfg.env.env_id) {
      rmp2::SetConfigValue(cfg, "env_id", std::to_string(*args.env));
    }
  } catch (const rmp2::ConfigError& e) {
    throw UsageError(e.what());
  }
  if (args.seed) cfg.env.seed = *args.seed;

  if (!args.log.empty()) std::filesystem::create_directories(args.log);
  const auto episodes = rmp2::RunEpisodes(
      cfg, args.episodes, algorithm, [&](int i, const rmp2::EpisodeResult& e) {
        if (!args.quiet) {
          std::printf("episode %3d steps %3zu %-9s reward %9.3f goal_dist %.4f min_clear %.4f\n", i,
                      e.steps.size(), rmp2::TerminationName(e.terminated_by), e.total_reward,
                      e.final_goal_distance, e.min_clearance);
        }
        if (!args.log.empty()) {
          char name[32];
          std::snprintf(name, sizeof(name), "episode_%04d.csv", i);
          std::ofstream csv(std::filesystem::path(args.log) / name);
          if (!csv) throw std::runtime_error("cannot write episode log in " + args.log);
          rmp2::WriteEpisodeCsv(csv, e);
        }
      });

  const rmp2::SimSummary s = rmp2::Summarize(episodes, args.goal_tolerance);
  char summary[512];
  std::snprintf(summary, sizeof(summary),
                "env %d policy %s seed %llu episodes %d\n"
                "mean_reward %.6f\n"
                "collision_free %.4f\n"
                "goal_reached %.4f (< %.3f m)\n"
                "mean_final_distance %.6f\n"
                "min_clearance %.6f\n"
                "step_reward_range [%.6f, %.6f]\n"
                "max_abs_velocity %.6f\n",
                cfg.env.env_id, rmp2::PolicyAlgorithmName(algorithm),
                static_cast<unsigned long long>(cfg.env.seed), s.episodes, s.mean_reward,
                s.collision_free_fraction, s.goal_reached_fraction, s.goal_tolerance,
                s.mean_final_distance, s.min_clearance, s.min_step_reward, s.max_step_reward,
                s.max_abs_velocity);
  std::fputs(summary, stdout);
  if (!args.log.empty()) {
    std::ofstream out(std::filesystem::path(args.log) / "summary.txt");
    out << summary;
  }
  return kOk;
}

struct GradCheckArgs {
  rmp2::GradCheckOptions options;
  std::optional<std::uint64_t> seed;
  bool without_joint_rmps = false;
};

int RunGradCheckCommand(GradCheckArgs& args) {
  if (args.options.scenes < 1) throw UsageError("--scenes must be >= 1");
  if (args.options.tol < 0) throw UsageError("--tol must be >= 0");
  args.options.seed = ResolveSeed(args.seed, 0);
  args.options.joint_rmps = !args.without_joint_rmps;
  int failed = 0, skipped = 0;
  rmp2::RunGradCheck(args.options, [&](const rmp2::GradCheckCase& c) {
    if (c.skipped) {
      ++skipped;
      std::printf("scene %3d SKIP %s\n", c.index, c.message.c_str());
      return;
    }
    failed += !c.passed;
    std::printf("scene %3d active_collision %2d attractor_rel_err %.3e collision_rel_err %.3e %s\n",
                c.index, c.active_collision, c.attractor_error, c.collision_error,
                c.passed ? "PASS" : "FAIL");
  });
  std::printf("gradcheck: %d scenes, %d failed, %d skipped, seed %llu, tol %.1e\n",
              args.options.scenes, failed, skipped,
              static_cast<unsigned long long>(args.options.seed), args.options.tol);
  return failed == 0 ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RMP2 policy tools"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "Simulation config file (key = value)")
      ->check(CLI::ExistingFile);

  VerifyArgs verify;
  CLI::App* verify_cmd = app.add_subcommand("verify", "Cross-check the policy implementations");
  verify_cmd->add_option("--tol", verify.options.tol, "Max relative error between algorithms")
      ->capture_default_str();
  verify_cmd->add_option("--fd-tol", verify.options.fd_tol,
                         "Max relative error against finite differences")
      ->capture_default_str();
  verify_cmd->add_option("--seed", verify.seed, "Seed (default: RMP2_SEED or 0)");
  verify_cmd->add_option("--cases", verify.options.cases, "Number of random instances")
      ->capture_default_str();
  verify_cmd->add_flag("--quiet", verify.quiet, "Only print failing cases");

  BenchArgs bench;
  CLI::App* bench_cmd = app.add_subcommand("bench", "Time the policies on chain graphs");
  bench_cmd->add_option("--lengths", bench.spec.lengths, "Chain lengths, ascending")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--trials", bench.spec.trials, "Timed trials per point")
      ->capture_default_str();
  bench_cmd->add_option("--algos", bench.algos, "rmp2, naive, naive_memory_safe, rmpflow")
      ->delimiter(',')
      ->capture_default_str();
  bench_cmd->add_option("--branching", bench.spec.branching, "Leaves per chain node")
      ->capture_default_str();
  bench_cmd->add_option("--dim", bench.spec.dim, "Node dimension")->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed, "Seed (default: RMP2_SEED or 0)");
  bench_cmd->add_option("--out", bench.out, "CSV output file");
  bench_cmd->add_option("--gnuplot", bench.gnuplot, "Gnuplot data output file");
  bench_cmd->add_flag("--dynamic", bench.dynamic, "Rebuild the tape on every evaluation");

  SimArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("sim", "Roll out the hand-designed RMP stack");
  sim_cmd->add_option("--env", sim.env, "Environment 1, 2 or 3 (default 1)");
  sim_cmd->add_option("--episodes", sim.episodes, "Number of episodes")->capture_default_str();
  sim_cmd->add_option("--seed", sim.seed, "Seed (default: config, RMP2_SEED or 0)");
  sim_cmd->add_option("--policy", sim.policy, "rmp2, rmpflow or naive")->capture_default_str();
  sim_cmd->add_option("--log", sim.log, "Directory for episode CSVs and summary.txt");
  sim_cmd->add_option("--goal-tolerance", sim.goal_tolerance, "Goal-reached distance, m")
      ->capture_default_str();
  sim_cmd->add_flag("--quiet", sim.quiet, "Only print the summary");

  GradCheckArgs grad;
  CLI::App* grad_cmd =
      app.add_subcommand("gradcheck", "Check parameter gradients against finite differences");
  grad_cmd->add_option("--seed", grad.seed, "Seed (default: RMP2_SEED or 0)");
  grad_cmd->add_option("--scenes", grad.options.scenes, "Number of scenes")->capture_default_str();
  grad_cmd->add_option("--tol", grad.options.tol, "Max relative error")->capture_default_str();
  grad_cmd->add_flag("--without-joint-rmps", grad.without_joint_rmps,
                     "Drop the joint RMPs; rank-deficient scenes are skipped");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*verify_cmd) return RunVerifyCommand(verify);
    if (*bench_cmd) return RunBenchCommand(bench);
    if (*sim_cmd) return RunSimCommand(sim, config_path);
    if (*grad_cmd) return RunGradCheckCommand(grad);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "rmp2: %s\n", e.what());
    return kUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "rmp2: error: %s\n", e.what());
    return kCheckFailed;
  }
  return kUsage;
}
