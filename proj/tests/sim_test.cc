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

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "rmp2/sim.h"
#include "test_util.h"

namespace rmp2 {
namespace {

using testing::RandomVector;

Eigen::VectorXd Zero3() { return Eigen::VectorXd::Zero(3); }

Controller ZeroController() {
  return [](const ConfigState& s, const Scene&) { return Eigen::VectorXd::Zero(s.q.size()); };
}

Scene EmptyScene() {
  Scene scene;
  scene.initial = {Zero3(), Zero3()};
  scene.goal = Eigen::Vector2d(0.4, 0.0);
  return scene;
}

TEST(SampleScene, EnvOneHasOneObstacleInRange) {
  const EnvConfig cfg = EnvConfig::ForEnv(1);
  const RobotModel robot;
  std::mt19937_64 rng(3);
  for (int i = 0; i < 200; ++i) {
    const Scene scene = SampleScene(cfg, robot, rng);
    ASSERT_EQ(scene.obstacles.size(), 1u);
    const Obstacle& o = scene.obstacles[0];
    EXPECT_GE(o.radius, 0.05);
    EXPECT_LE(o.radius, 0.1);
    EXPECT_GE(o.center.norm(), 0.4);
    EXPECT_LE(o.center.norm(), 0.9);
    const double r = scene.goal.norm();
    const double a = std::atan2(scene.goal.y(), scene.goal.x());
    EXPECT_GE(r, 0.275);
    EXPECT_LE(r, 0.475);
    EXPECT_LE(std::abs(a), 0.25 * std::numbers::pi + 1e-12);
    EXPECT_LE(scene.initial.q.cwiseAbs().maxCoeff(), 0.1);
    EXPECT_LE(scene.initial.qd.cwiseAbs().maxCoeff(), 0.005);
  }
}

TEST(SampleScene, ClearancesHoldInEveryEnv) {
  const RobotModel robot;
  for (int env : {1, 2, 3}) {
    const EnvConfig cfg = EnvConfig::ForEnv(env);
    std::mt19937_64 rng(env);
    for (int i = 0; i < 100; ++i) {
      const Scene scene = SampleScene(cfg, robot, rng);
      EXPECT_EQ(static_cast<int>(scene.obstacles.size()), env == 1 ? 1 : 3);
      for (const Obstacle& o : scene.obstacles) {
        EXPECT_GE((scene.goal - o.center).norm() - o.radius, 0.1);
      }
      for (double d : ObstacleClearances(robot, scene.initial.q, scene.obstacles)) {
        EXPECT_GE(d, 0.1);
      }
    }
  }
}

TEST(SampleScene, EnvThreeGoalsInLeftHalfDisk) {
  const EnvConfig cfg = EnvConfig::ForEnv(3);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 200; ++i) {
    const Scene scene = SampleScene(cfg, RobotModel{}, rng);
    EXPECT_LE(scene.goal.x(), 1e-12);
    EXPECT_GE(scene.goal.norm(), 0.125);
    EXPECT_LE(scene.goal.norm(), 0.625);
  }
}

TEST(SampleScene, DeterministicForSeed) {
  const EnvConfig cfg = EnvConfig::ForEnv(2);
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 10; ++i) {
    const Scene x = SampleScene(cfg, RobotModel{}, a);
    const Scene y = SampleScene(cfg, RobotModel{}, b);
    EXPECT_EQ(x.goal, y.goal);
    EXPECT_EQ(x.initial.q, y.initial.q);
    for (std::size_t k = 0; k < x.obstacles.size(); ++k) {
      EXPECT_EQ(x.obstacles[k].center, y.obstacles[k].center);
    }
  }
}

TEST(SampleScene, ExhaustedBudgetThrows) {
  EnvConfig cfg;
  cfg.min_clearance = 5.0;
  cfg.max_attempts = 50;
  std::mt19937_64 rng(0);
  EXPECT_THROW(SampleScene(cfg, RobotModel{}, rng), SamplingError);
}

TEST(EnvConfig, RejectsBadValues) {
  EXPECT_THROW(EnvConfig::ForEnv(4), ConfigError);
  EnvConfig cfg;
  cfg.dt = 0.0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.obstacle_radius_inner = 1.0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
  cfg = EnvConfig{};
  cfg.horizon = 0;
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(Reward, MaximalAtGoal) {
  const Eigen::Vector2d g(0.3, 0.1);
  const double far[] = {0.2, 0.05};
  EXPECT_DOUBLE_EQ(Reward(g, g, far, 0.0, RewardParams{}), 1.0);
}

TEST(Reward, DecaysToZeroFarAway) {
  const double far[] = {1.0};
  EXPECT_LT(Reward(Eigen::Vector2d(10, 0), Eigen::Vector2d::Zero(), far, 0.0, RewardParams{}),
            1e-12);
}

TEST(Reward, HalfDeltaPenalty) {
  const Eigen::Vector2d g(0.3, 0.1);
  const double d[] = {0.025};
  EXPECT_DOUBLE_EQ(Reward(g, g, d, 0.0, RewardParams{}), 0.5);
}

TEST(Reward, MatchesFormula) {
  std::mt19937_64 rng(5);
  const RewardParams p;
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector2d x = RandomVector(rng, 2);
    const Eigen::Vector2d g = RandomVector(rng, 2);
    const std::vector<double> d = {0.1 * RandomVector(rng, 1)(0), 0.1 * RandomVector(rng, 1)(0)};
    const double effort = 1e4 * std::abs(RandomVector(rng, 1)(0));
    double expected = std::exp(-(x - g).squaredNorm() / (2 * 0.1 * 0.1)) - 1e-5 * effort;
    for (double di : d) expected -= di < 0.05 ? 1.0 - di / 0.05 : 0.0;
    expected = expected < -5.0 ? -5.0 : expected;
    EXPECT_NEAR(Reward(x, g, d, effort, p), expected, 1e-14);
  }
}

TEST(Reward, ClipsAtLowerBound) {
  const double d[] = {-1.0};
  EXPECT_EQ(Reward(Eigen::Vector2d(1, 0), Eigen::Vector2d::Zero(), d, 0.0, RewardParams{}), -5.0);
}

TEST(Step, ZeroAccelerationIsUniformMotion) {
  const ConfigState s{Eigen::Vector3d(0.1, -0.2, 0.3), Eigen::Vector3d(0.5, -0.25, 0.0)};
  const ConfigState next = Step(s, Zero3(), RobotModel{}, 0.0125);
  EXPECT_EQ(next.qd, s.qd);
  EXPECT_EQ(next.q, s.q + s.qd * 0.0125);
}

TEST(Step, ClampsVelocity) {
  const ConfigState s{Zero3(), Eigen::Vector3d(1.0, -1.0, 0.0)};
  const ConfigState next = Step(s, Eigen::Vector3d(50, -50, 0), RobotModel{}, 0.0125);
  EXPECT_EQ(next.qd(0), 1.0);
  EXPECT_EQ(next.qd(1), -1.0);
  EXPECT_EQ(next.q(0), 0.0125);
}

TEST(Step, MatchesHandComputedEuler) {
  std::mt19937_64 rng(9);
  const double dt = 0.0125;
  for (int i = 0; i < 100; ++i) {
    const ConfigState s{RandomVector(rng, 3), 0.5 * RandomVector(rng, 3)};
    const Eigen::VectorXd a = 10.0 * RandomVector(rng, 3);
    const ConfigState next = Step(s, a, RobotModel{}, dt);
    for (int j = 0; j < 3; ++j) {
      double v = s.qd(j) + a(j) * dt;
      v = v > 1.0 ? 1.0 : (v < -1.0 ? -1.0 : v);
      EXPECT_LT(std::abs(next.qd(j) - v), 1e-15);
      EXPECT_LT(std::abs(next.q(j) - (s.q(j) + v * dt)), 1e-15);
    }
  }
}

TEST(Step, RejectsNonFiniteAction) {
  const ConfigState s{Zero3(), Zero3()};
  EXPECT_THROW(Step(s, Eigen::Vector3d(0, NAN, 0), RobotModel{}, 0.0125), std::invalid_argument);
  EXPECT_THROW(Step(s, Eigen::Vector2d(0, 0), RobotModel{}, 0.0125), std::invalid_argument);
}

TEST(RunEpisode, ZeroPolicyRunsToHorizon) {
  const EpisodeResult e =
      RunEpisode(EnvConfig{}, RobotModel{}, RewardParams{}, EmptyScene(), ZeroController());
  EXPECT_EQ(e.steps.size(), 600u);
  EXPECT_EQ(e.terminated_by, Termination::kHorizon);
  EXPECT_NEAR(e.final_goal_distance, 0.35, 1e-12);
}

TEST(RunEpisode, SweepIntoObstacleCollides) {
  Scene scene = EmptyScene();
  scene.initial.qd = Eigen::Vector3d(0.5, 0.0, 0.0);
  scene.obstacles.push_back({0.6 * Eigen::Vector2d(std::cos(0.5), std::sin(0.5)), 0.05});
  const EpisodeResult e =
      RunEpisode(EnvConfig{}, RobotModel{}, RewardParams{}, scene, ZeroController());
  EXPECT_EQ(e.terminated_by, Termination::kCollision);
  EXPECT_LT(e.steps.size(), 600u);
  EXPECT_LE(e.steps.back().min_clearance, 0.0);
  for (std::size_t t = 0; t + 1 < e.steps.size(); ++t) EXPECT_GT(e.steps[t].min_clearance, 0.0);
}

TEST(RunEpisode, ControllerErrorNamesStep) {
  int calls = 0;
  const Controller bad = [&calls](const ConfigState& s, const Scene&) {
    if (++calls == 4) throw std::runtime_error("boom");
    return Eigen::VectorXd::Zero(s.q.size());
  };
  try {
    RunEpisode(EnvConfig{}, RobotModel{}, RewardParams{}, EmptyScene(), bad);
    FAIL();
  } catch (const EpisodeError& e) {
    EXPECT_NE(std::string(e.what()).find("step 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("boom"), std::string::npos);
  }
}

TEST(RunEpisode, RmpStackInvariantsAndDeterminism) {
  EnvConfig cfg = EnvConfig::ForEnv(2);
  cfg.horizon = 200;
  const RobotModel robot;
  const Controller ctrl = MakeRmpController(robot, StackGains{}, PolicyAlgorithm::kRmp2);
  for (int seed = 0; seed < 5; ++seed) {
    std::mt19937_64 a(seed), b(seed);
    const EpisodeResult e = RunEpisode(cfg, robot, RewardParams{}, ctrl, a);
    const EpisodeResult f = RunEpisode(cfg, robot, RewardParams{}, ctrl, b);
    EXPECT_EQ(e.total_reward, f.total_reward);
    EXPECT_EQ(e.final_state.q, f.final_state.q);
    EXPECT_EQ(e.terminated_by, Termination::kHorizon);
    EXPECT_GT(e.min_clearance, 0.0);
    for (const StepRecord& r : e.steps) {
      EXPECT_GE(r.reward, -5.0);
      EXPECT_LE(r.reward, 1.0);
      EXPECT_LE(r.state.qd.cwiseAbs().maxCoeff(), 1.0);
    }
    EXPECT_GE(e.total_reward, -5.0 * cfg.horizon);
    EXPECT_LE(e.total_reward, 1.0 * cfg.horizon);
  }
}

TEST(RunEpisode, AlgorithmsProduceSameActions) {
  EnvConfig cfg = EnvConfig::ForEnv(2);
  cfg.horizon = 60;
  const RobotModel robot;
  std::mt19937_64 rng(17);
  const Scene scene = SampleScene(cfg, robot, rng);
  const EpisodeResult ref = RunEpisode(
      cfg, robot, RewardParams{}, scene,
      MakeRmpController(robot, StackGains{}, PolicyAlgorithm::kRmp2));
  for (PolicyAlgorithm algo : {PolicyAlgorithm::kRmpflow, PolicyAlgorithm::kNaive}) {
    const Controller ctrl = MakeRmpController(robot, StackGains{}, algo);
    for (const StepRecord& r : ref.steps) {
      const Eigen::VectorXd a = ctrl(r.state, scene);
      EXPECT_LE((a - r.action).norm(), 1e-8 * std::max(1.0, r.action.norm()))
          << PolicyAlgorithmName(algo) << " step " << r.step;
    }
  }
}

TEST(RmpStack, BindsEveryLeafKind) {
  Scene scene = EmptyScene();
  scene.obstacles.push_back({Eigen::Vector2d(0.5, 0.5), 0.05});
  scene.obstacles.push_back({Eigen::Vector2d(-0.5, 0.5), 0.05});
  const RobotModel robot;
  for (bool tree : {false, true}) {
    const RmpStack stack = BuildRmpStack(robot, scene, StackGains{}, tree);
    int counts[5] = {};
    for (const RmpBinding& b : stack.rmps) ++counts[static_cast<int>(b.rmp.kind())];
    EXPECT_EQ(counts[static_cast<int>(RmpKind::kGoalAttractor)], 1);
    EXPECT_EQ(counts[static_cast<int>(RmpKind::kCollisionAvoidance)], 2 * 9);
    EXPECT_EQ(counts[static_cast<int>(RmpKind::kJointDamping)], 1);
    EXPECT_EQ(counts[static_cast<int>(RmpKind::kJointVelocityLimit)], 3);
    EXPECT_EQ(stack.graph.is_tree(), tree);
  }
}

TEST(PolicyAlgorithm, ParsesNames) {
  for (PolicyAlgorithm a :
       {PolicyAlgorithm::kRmp2, PolicyAlgorithm::kRmpflow, PolicyAlgorithm::kNaive}) {
    EXPECT_EQ(ParsePolicyAlgorithm(PolicyAlgorithmName(a)), a);
  }
  EXPECT_THROW(ParsePolicyAlgorithm("tree"), std::invalid_argument);
}

TEST(Config, ParsesKeysAndComments) {
  std::istringstream in(
      "# scene\n"
      "env_id = 3\n"
      "seed = 12   # trailing\n"
      "\n"
      "reward.sigma = 0.2\n"
      "attractor.gain = 5\n"
      "collision.activation=0.3\n");
  const SimConfig cfg = ParseSimConfig(in);
  EXPECT_EQ(cfg.env.env_id, 3);
  EXPECT_EQ(cfg.env.num_obstacles, 3);
  EXPECT_EQ(cfg.env.goal_radius_max, 0.625);
  EXPECT_EQ(cfg.env.seed, 12u);
  EXPECT_EQ(cfg.reward.sigma, 0.2);
  EXPECT_EQ(cfg.gains.attractor.gain, 5.0);
  EXPECT_EQ(cfg.gains.collision.activation, 0.3);
}

TEST(Config, ReportsErrorsWithLine) {
  std::istringstream unknown("seed = 1\nbogus = 2\n");
  try {
    ParseSimConfig(unknown);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream bad_number("dt = fast\n");
  EXPECT_THROW(ParseSimConfig(bad_number), ConfigError);
  std::istringstream no_equals("dt 0.1\n");
  EXPECT_THROW(ParseSimConfig(no_equals), ConfigError);
  std::istringstream invalid("dt = -1\n");
  EXPECT_THROW(ParseSimConfig(invalid), ConfigError);
  EXPECT_THROW(LoadSimConfig("/nonexistent/rmp2.cfg"), ConfigError);
}

TEST(Config, EveryKeyIsSettable) {
  for (const std::string& key : ConfigKeys()) {
    SimConfig cfg;
    EXPECT_NO_THROW(SetConfigValue(cfg, key, key == "env_id" ? "2" : "1")) << key;
  }
}

TEST(EpisodeCsv, HeaderAndRows) {
  EnvConfig cfg;
  cfg.horizon = 3;
  const EpisodeResult e =
      RunEpisode(cfg, RobotModel{}, RewardParams{}, EmptyScene(), ZeroController());
  std::ostringstream out;
  WriteEpisodeCsv(out, e);
  std::istringstream lines(out.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "step,q0,q1,q2,qd0,qd1,qd2,action0,action1,action2,reward,min_clearance");
  int rows = 0;
  while (std::getline(lines, line)) ++rows;
  EXPECT_EQ(rows, 3);
}

TEST(Summarize, CountsOutcomes) {
  EpisodeResult a, b;
  a.final_state = b.final_state = {Zero3(), Zero3()};
  a.final_goal_distance = 0.01;
  a.total_reward = 10;
  a.min_clearance = 0.2;
  b.final_goal_distance = 0.3;
  b.total_reward = -2;
  b.min_clearance = -0.01;
  b.terminated_by = Termination::kCollision;
  const EpisodeResult both[] = {a, b};
  const SimSummary s = Summarize(both);
  EXPECT_EQ(s.episodes, 2);
  EXPECT_DOUBLE_EQ(s.mean_reward, 4.0);
  EXPECT_DOUBLE_EQ(s.collision_free_fraction, 0.5);
  EXPECT_DOUBLE_EQ(s.goal_reached_fraction, 0.5);
  EXPECT_DOUBLE_EQ(s.min_clearance, -0.01);
}

}  // namespace
}  // namespace rmp2
