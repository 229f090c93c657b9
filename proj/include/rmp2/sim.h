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

// Planar three-link reaching environment driven at the acceleration level.

#ifndef RMP2_SIM_H_
#define RMP2_SIM_H_

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmp2/leaf_rmps.h"
#include "rmp2/policy.h"
#include "rmp2/taskmaps.h"

namespace rmp2 {

struct EnvConfig {
  int env_id = 1;
  int num_obstacles = 1;
  // Goal region: sector [angle_min, angle_max] (rad) of the annulus
  // [radius_min, radius_max] (m).
  double goal_angle_min = -0.25 * std::numbers::pi;
  double goal_angle_max = 0.25 * std::numbers::pi;
  double goal_radius_min = 0.275;
  double goal_radius_max = 0.475;
  // Obstacle centers are drawn from the full annulus [inner, outer] (m).
  double obstacle_radius_inner = 0.4;
  double obstacle_radius_outer = 0.9;
  double obstacle_size_min = 0.05;  // m
  double obstacle_size_max = 0.1;   // m
  double min_clearance = 0.1;       // m, goal-obstacle and robot-obstacle
  double init_q_range = 0.1;        // rad
  double init_qd_range = 0.005;     // rad/s
  double dt = 0.0125;               // s
  int horizon = 600;
  int max_attempts = 10000;
  std::uint64_t seed = 0;

  // Defaults for environment 1, 2 or 3.
  static EnvConfig ForEnv(int env_id);
  void Validate() const;
};

struct RewardParams {
  double sigma = 0.1;    // m
  double delta = 0.05;   // m
  double lambda = 1e-5;
  double clip_min = -5.0;

  void Validate() const;
};

struct Scene {
  ConfigState initial;
  Eigen::Vector2d goal = Eigen::Vector2d::Zero();
  ObstacleSet obstacles;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rejection sampling; throws SamplingError after cfg.max_attempts rejections.
Scene SampleScene(const EnvConfig& cfg, const RobotModel& robot, std::mt19937_64& rng);

// Per-obstacle clearance: min over control points of ‖p - c‖ - r.
std::vector<double> ObstacleClearances(const RobotModel& robot, const Eigen::VectorXd& q,
                                       const ObstacleSet& obstacles);

// max(exp(-‖x - g‖² / 2σ²) - Σ max(0, 1 - d_i / δ) - λ effort, clip_min).
double Reward(const Eigen::Vector2d& x_ee, const Eigen::Vector2d& goal,
              std::span<const double> clearances, double effort, const RewardParams& params);

// Semi-implicit Euler with the velocity clamped to the joint limit.
ConfigState Step(const ConfigState& state, const Eigen::VectorXd& qdd, const RobotModel& robot,
                 double dt);

using Controller = std::function<Eigen::VectorXd(const ConfigState&, const Scene&)>;

struct StepRecord {
  int step = 0;
  ConfigState state;       // before the action
  Eigen::VectorXd action;  // q̈, rad/s²
  double reward = 0.0;     // after the step
  double min_clearance = 0.0;
};

enum class Termination { kHorizon, kCollision };
const char* TerminationName(Termination t);

struct EpisodeResult {
  Scene scene;
  std::vector<StepRecord> steps;
  ConfigState final_state;
  Termination terminated_by = Termination::kHorizon;
  double total_reward = 0.0;
  double final_goal_distance = 0.0;  // m
  double min_clearance = 0.0;        // over the whole episode, m
};

class EpisodeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Rolls out until the horizon or the first step whose clearance is <= 0.
// Controller errors are rethrown as EpisodeError with the step number.
EpisodeResult RunEpisode(const EnvConfig& cfg, const RobotModel& robot, const RewardParams& reward,
                         const Scene& scene, const Controller& controller);
EpisodeResult RunEpisode(const EnvConfig& cfg, const RobotModel& robot, const RewardParams& reward,
                         const Controller& controller, std::mt19937_64& rng);

// Hand-designed RMP stack: goal attractor on the end effector, collision
// avoidance on every control-point clearance, joint damping on q and a
// velocity limit per joint.
struct StackGains {
  AttractorParams attractor;
  CollisionParams collision;
  DampingParams damping;
  VelocityLimitParams velocity_limit;
};

struct RmpStack {
  TaskGraph graph{1};
  std::vector<RmpBinding> rmps;
};

RmpStack BuildRmpStack(const RobotModel& robot, const Scene& scene, const StackGains& gains,
                       bool tree = false);

enum class PolicyAlgorithm { kRmp2, kRmpflow, kNaive };
const char* PolicyAlgorithmName(PolicyAlgorithm a);
PolicyAlgorithm ParsePolicyAlgorithm(const std::string& name);

// Controller evaluating the stack with the chosen algorithm. The stack is
// rebuilt whenever the scene changes.
Controller MakeRmpController(const RobotModel& robot, const StackGains& gains,
                             PolicyAlgorithm algorithm);

struct SimConfig {
  EnvConfig env;
  RewardParams reward;
  StackGains gains;
  RobotModel robot;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Flat "key = value" text; '#' starts a comment. `env_id` resets the
// environment defaults, so it should come first. Unknown keys are errors.
SimConfig ParseSimConfig(std::istream& in, SimConfig base = {});
SimConfig LoadSimConfig(const std::string& path, SimConfig base = {});
void SetConfigValue(SimConfig& cfg, const std::string& key, const std::string& value);
std::vector<std::string> ConfigKeys();

// step,q0..,qd0..,action0..,reward,min_clearance
void WriteEpisodeCsv(std::ostream& out, const EpisodeResult& episode);

// Episode i uses its own generator seeded from (cfg.env.seed, i), so any
// subset of episodes can be reproduced on its own.
std::mt19937_64 EpisodeRng(std::uint64_t seed, int episode);
std::vector<EpisodeResult> RunEpisodes(
    const SimConfig& cfg, int episodes, PolicyAlgorithm algorithm,
    const std::function<void(int, const EpisodeResult&)>& on_episode = {});

struct SimSummary {
  int episodes = 0;
  double mean_reward = 0.0;
  double collision_free_fraction = 0.0;
  double goal_reached_fraction = 0.0;  // final distance < goal_tolerance
  double goal_tolerance = 0.05;        // m
  double mean_final_distance = 0.0;
  double min_clearance = 0.0;
  double min_step_reward = 0.0;
  double max_step_reward = 0.0;
  double max_abs_velocity = 0.0;
};

SimSummary Summarize(std::span<const EpisodeResult> episodes, double goal_tolerance = 0.05);

}  // namespace rmp2

#endif  // RMP2_SIM_H_
