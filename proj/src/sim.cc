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

#include "rmp2/sim.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "rmp2/naive.h"
#include "rmp2/rmp2.h"
#include "rmp2/rmpflow.h"

namespace rmp2 {

EnvConfig EnvConfig::ForEnv(int env_id) {
  EnvConfig cfg;
  cfg.env_id = env_id;
  switch (env_id) {
    case 1:
      break;
    case 2:
      cfg.num_obstacles = 3;
      break;
    case 3:
      cfg.num_obstacles = 3;
      cfg.goal_angle_min = 0.5 * std::numbers::pi;
      cfg.goal_angle_max = 1.5 * std::numbers::pi;
      cfg.goal_radius_min = 0.125;
      cfg.goal_radius_max = 0.625;
      break;
    default:
      throw ConfigError("env_id must be 1, 2 or 3, got " + std::to_string(env_id));
  }
  return cfg;
}

void EnvConfig::Validate() const {
  if (env_id < 1 || env_id > 3) throw ConfigError("env_id must be 1, 2 or 3");
  if (num_obstacles < 0) throw ConfigError("num_obstacles must be >= 0");
  if (!(goal_angle_min <= goal_angle_max)) throw ConfigError("goal angles out of order");
  if (!(0.0 <= goal_radius_min && goal_radius_min <= goal_radius_max)) {
    throw ConfigError("goal radii out of order");
  }
  if (!(0.0 <= obstacle_radius_inner && obstacle_radius_inner <= obstacle_radius_outer)) {
    throw ConfigError("obstacle annulus radii out of order");
  }
  if (!(0.0 < obstacle_size_min && obstacle_size_min <= obstacle_size_max)) {
    throw ConfigError("obstacle sizes out of order");
  }
  if (!(min_clearance >= 0.0)) throw ConfigError("min_clearance must be >= 0");
  if (!(init_q_range >= 0.0) || !(init_qd_range >= 0.0)) {
    throw ConfigError("initial state ranges must be >= 0");
  }
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (horizon < 1) throw ConfigError("horizon must be >= 1");
  if (max_attempts < 1) throw ConfigError("max_attempts must be >= 1");
}

void RewardParams::Validate() const {
  if (!(sigma > 0.0) || !(delta > 0.0) || !(lambda >= 0.0)) {
    throw ConfigError("reward scales must be positive");
  }
  if (!(clip_min <= 0.0)) throw ConfigError("reward clip_min must be <= 0");
}

namespace {

double Uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Area-uniform point in a sector of an annulus.
Eigen::Vector2d SampleAnnulus(std::mt19937_64& rng, double r_min, double r_max, double a_min,
                              double a_max) {
  const double r = std::sqrt(Uniform(rng, r_min * r_min, r_max * r_max));
  const double a = Uniform(rng, a_min, a_max);
  return r * Eigen::Vector2d(std::cos(a), std::sin(a));
}

}  // namespace

Scene SampleScene(const EnvConfig& cfg, const RobotModel& robot, std::mt19937_64& rng) {
  cfg.Validate();
  robot.Validate();
  const int n = robot.num_links;
  for (int attempt = 0; attempt < cfg.max_attempts; ++attempt) {
    Scene scene;
    scene.initial.q.resize(n);
    scene.initial.qd.resize(n);
    for (int i = 0; i < n; ++i) scene.initial.q(i) = Uniform(rng, -cfg.init_q_range, cfg.init_q_range);
    for (int i = 0; i < n; ++i) {
      scene.initial.qd(i) = Uniform(rng, -cfg.init_qd_range, cfg.init_qd_range);
    }
    scene.goal = SampleAnnulus(rng, cfg.goal_radius_min, cfg.goal_radius_max, cfg.goal_angle_min,
                               cfg.goal_angle_max);
    for (int k = 0; k < cfg.num_obstacles; ++k) {
      Obstacle o;
      o.center = SampleAnnulus(rng, cfg.obstacle_radius_inner, cfg.obstacle_radius_outer, 0.0,
                               2.0 * std::numbers::pi);
      o.radius = Uniform(rng, cfg.obstacle_size_min, cfg.obstacle_size_max);
      scene.obstacles.push_back(o);
    }
    bool ok = true;
    for (const Obstacle& o : scene.obstacles) {
      ok = ok && (scene.goal - o.center).norm() - o.radius >= cfg.min_clearance;
    }
    for (double d : ObstacleClearances(robot, scene.initial.q, scene.obstacles)) {
      ok = ok && d >= cfg.min_clearance;
    }
    if (ok) return scene;
  }
  throw SamplingError("no valid scene after " + std::to_string(cfg.max_attempts) + " attempts");
}

std::vector<double> ObstacleClearances(const RobotModel& robot, const Eigen::VectorXd& q,
                                       const ObstacleSet& obstacles) {
  const std::vector<Eigen::Vector2d> points = ControlPointPositions(robot, q);
  std::vector<double> out;
  out.reserve(obstacles.size());
  for (const Obstacle& o : obstacles) {
    double best = std::numeric_limits<double>::infinity();
    for (const Eigen::Vector2d& p : points) best = std::min(best, (p - o.center).norm() - o.radius);
    out.push_back(best);
  }
  return out;
}

double Reward(const Eigen::Vector2d& x_ee, const Eigen::Vector2d& goal,
              std::span<const double> clearances, double effort, const RewardParams& p) {
  double r = std::exp(-(x_ee - goal).squaredNorm() / (2.0 * p.sigma * p.sigma));
  for (double d : clearances) r -= std::max(0.0, 1.0 - d / p.delta);
  r -= p.lambda * effort;
  return std::isnan(r) ? p.clip_min : std::max(r, p.clip_min);
}

ConfigState Step(const ConfigState& state, const Eigen::VectorXd& qdd, const RobotModel& robot,
                 double dt) {
  if (qdd.size() != state.q.size()) throw std::invalid_argument("Step: action has wrong size");
  if (!qdd.allFinite()) throw std::invalid_argument("Step: non-finite acceleration");
  const double limit = robot.joint_velocity_limit;
  ConfigState next;
  next.qd = (state.qd + qdd * dt).cwiseMax(-limit).cwiseMin(limit);
  next.q = state.q + next.qd * dt;
  return next;
}

const char* TerminationName(Termination t) {
  return t == Termination::kCollision ? "collision" : "horizon";
}

EpisodeResult RunEpisode(const EnvConfig& cfg, const RobotModel& robot, const RewardParams& reward,
                         const Scene& scene, const Controller& controller) {
  cfg.Validate();
  reward.Validate();
  robot.Validate();
  scene.initial.Validate(robot.num_links);
  EpisodeResult result;
  result.scene = scene;
  result.min_clearance = std::numeric_limits<double>::infinity();
  ConfigState state = scene.initial;
  result.steps.reserve(cfg.horizon);
  for (int t = 0; t < cfg.horizon; ++t) {
    Eigen::VectorXd action;
    ConfigState next;
    try {
      action = controller(state, scene);
      next = Step(state, action, robot, cfg.dt);
    } catch (const std::exception& e) {
      throw EpisodeError("episode aborted at step " + std::to_string(t) + ": " + e.what());
    }
    const std::vector<double> clear = ObstacleClearances(robot, next.q, scene.obstacles);
    StepRecord rec;
    rec.step = t;
    rec.state = state;
    rec.action = action;
    rec.min_clearance = clear.empty() ? std::numeric_limits<double>::infinity()
                                      : *std::min_element(clear.begin(), clear.end());
    rec.reward = Reward(EndEffectorPosition(robot, next.q), scene.goal, clear,
                        action.squaredNorm(), reward);
    result.total_reward += rec.reward;
    result.min_clearance = std::min(result.min_clearance, rec.min_clearance);
    result.steps.push_back(std::move(rec));
    state = next;
    if (result.steps.back().min_clearance <= 0.0) {
      result.terminated_by = Termination::kCollision;
      break;
    }
  }
  result.final_state = state;
  result.final_goal_distance = (EndEffectorPosition(robot, state.q) - scene.goal).norm();
  return result;
}

EpisodeResult RunEpisode(const EnvConfig& cfg, const RobotModel& robot, const RewardParams& reward,
                         const Controller& controller, std::mt19937_64& rng) {
  return RunEpisode(cfg, robot, reward, SampleScene(cfg, robot, rng), controller);
}

RmpStack BuildRmpStack(const RobotModel& robot, const Scene& scene, const StackGains& gains,
                       bool tree) {
  RmpStack stack;
  stack.graph =
      JointLeaves(DistanceLeaves(tree ? PlanarFkTree(robot) : PlanarFkLeaves(robot), scene.obstacles));
  const int n = robot.num_links;
  stack.rmps.push_back(Bind(stack.graph, kEndEffector, GoalAttractor(scene.goal, gains.attractor)));
  for (int leaf : stack.graph.leaves()) {
    if (stack.graph.node(leaf).name.find("/o") != std::string::npos) {
      stack.rmps.push_back({leaf, CollisionAvoidance(gains.collision)});
    }
  }
  stack.rmps.push_back(Bind(stack.graph, kJoints, JointDamping(n, gains.damping)));
  for (int i = 0; i < n; ++i) {
    stack.rmps.push_back(Bind(stack.graph, JointName(i),
                              JointVelocityLimit(robot.joint_velocity_limit, gains.velocity_limit)));
  }
  return stack;
}

const char* PolicyAlgorithmName(PolicyAlgorithm a) {
  switch (a) {
    case PolicyAlgorithm::kRmp2: return "rmp2";
    case PolicyAlgorithm::kRmpflow: return "rmpflow";
    case PolicyAlgorithm::kNaive: return "naive";
  }
  return "unknown";
}

PolicyAlgorithm ParsePolicyAlgorithm(const std::string& name) {
  if (name == "rmp2") return PolicyAlgorithm::kRmp2;
  if (name == "rmpflow") return PolicyAlgorithm::kRmpflow;
  if (name == "naive") return PolicyAlgorithm::kNaive;
  throw std::invalid_argument("unknown policy '" + name + "' (rmp2, rmpflow, naive)");
}

namespace {

bool SameScene(const Scene& a, const Scene& b) {
  if (a.goal != b.goal || a.obstacles.size() != b.obstacles.size()) return false;
  for (std::size_t k = 0; k < a.obstacles.size(); ++k) {
    if (a.obstacles[k].center != b.obstacles[k].center ||
        a.obstacles[k].radius != b.obstacles[k].radius) {
      return false;
    }
  }
  return true;
}

struct ControllerCache {
  std::optional<Scene> scene;
  RmpStack stack;
  std::unique_ptr<RmpTree> tree;
};

}  // namespace

Controller MakeRmpController(const RobotModel& robot, const StackGains& gains,
                             PolicyAlgorithm algorithm) {
  robot.Validate();
  auto cache = std::make_shared<ControllerCache>();
  return [robot, gains, algorithm, cache](const ConfigState& state, const Scene& scene) {
    if (!cache->scene || !SameScene(*cache->scene, scene)) {
      const bool tree = algorithm == PolicyAlgorithm::kRmpflow;
      cache->stack = BuildRmpStack(robot, scene, gains, tree);
      cache->tree = tree ? std::make_unique<RmpTree>(cache->stack.graph, cache->stack.rmps)
                         : nullptr;
      cache->scene = scene;
    }
    switch (algorithm) {
      case PolicyAlgorithm::kRmp2:
        return Rmp2Policy(cache->stack.graph, cache->stack.rmps, state).accel;
      case PolicyAlgorithm::kRmpflow:
        return RmpflowPolicy(*cache->tree, state).accel;
      case PolicyAlgorithm::kNaive:
        return NaivePolicy(cache->stack.graph, cache->stack.rmps, state).accel;
    }
    throw std::logic_error("unreachable");
  };
}

// ---------------------------------------------------------------------------
// Configuration file.

namespace {

double ParseDouble(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
    throw ConfigError("key '" + key + "': expected a number, got '" + text + "'");
  }
  return v;
}

long long ParseInt(const std::string& key, const std::string& text) {
  long long v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("key '" + key + "': expected an integer, got '" + text + "'");
  }
  return v;
}

using Setter = std::function<void(SimConfig&, const std::string&, const std::string&)>;

template <typename Group>
Setter Number(Group SimConfig::*group, double Group::*field) {
  return [group, field](SimConfig& c, const std::string& k, const std::string& v) {
    (c.*group).*field = ParseDouble(k, v);
  };
}

template <typename Inner>
Setter Gain(Inner StackGains::*group, double Inner::*field) {
  return [group, field](SimConfig& c, const std::string& k, const std::string& v) {
    (c.gains.*group).*field = ParseDouble(k, v);
  };
}

const std::map<std::string, Setter>& Setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    t["env_id"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      const std::uint64_t seed = c.env.seed;
      c.env = EnvConfig::ForEnv(static_cast<int>(ParseInt(k, v)));
      c.env.seed = seed;
    };
    t["seed"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      const long long s = ParseInt(k, v);
      if (s < 0) throw ConfigError("seed must be >= 0");
      c.env.seed = static_cast<std::uint64_t>(s);
    };
    t["num_obstacles"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.env.num_obstacles = static_cast<int>(ParseInt(k, v));
    };
    t["horizon"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.env.horizon = static_cast<int>(ParseInt(k, v));
    };
    t["max_attempts"] = [](SimConfig& c, const std::string& k, const std::string& v) {
      c.env.max_attempts = static_cast<int>(ParseInt(k, v));
    };
    t["goal_angle_min"] = Number(&SimConfig::env, &EnvConfig::goal_angle_min);
    t["goal_angle_max"] = Number(&SimConfig::env, &EnvConfig::goal_angle_max);
    t["goal_radius_min"] = Number(&SimConfig::env, &EnvConfig::goal_radius_min);
    t["goal_radius_max"] = Number(&SimConfig::env, &EnvConfig::goal_radius_max);
    t["obstacle_radius_inner"] = Number(&SimConfig::env, &EnvConfig::obstacle_radius_inner);
    t["obstacle_radius_outer"] = Number(&SimConfig::env, &EnvConfig::obstacle_radius_outer);
    t["obstacle_size_min"] = Number(&SimConfig::env, &EnvConfig::obstacle_size_min);
    t["obstacle_size_max"] = Number(&SimConfig::env, &EnvConfig::obstacle_size_max);
    t["min_clearance"] = Number(&SimConfig::env, &EnvConfig::min_clearance);
    t["init_q_range"] = Number(&SimConfig::env, &EnvConfig::init_q_range);
    t["init_qd_range"] = Number(&SimConfig::env, &EnvConfig::init_qd_range);
    t["dt"] = Number(&SimConfig::env, &EnvConfig::dt);
    t["reward.sigma"] = Number(&SimConfig::reward, &RewardParams::sigma);
    t["reward.delta"] = Number(&SimConfig::reward, &RewardParams::delta);
    t["reward.lambda"] = Number(&SimConfig::reward, &RewardParams::lambda);
    t["reward.clip_min"] = Number(&SimConfig::reward, &RewardParams::clip_min);
    t["attractor.gain"] = Gain(&StackGains::attractor, &AttractorParams::gain);
    t["attractor.damping"] = Gain(&StackGains::attractor, &AttractorParams::damping);
    t["attractor.softness"] = Gain(&StackGains::attractor, &AttractorParams::softness);
    t["collision.gain"] = Gain(&StackGains::collision, &CollisionParams::gain);
    t["collision.epsilon"] = Gain(&StackGains::collision, &CollisionParams::epsilon);
    t["collision.activation"] =
        Gain(&StackGains::collision, &CollisionParams::activation);
    t["collision.damping"] = Gain(&StackGains::collision, &CollisionParams::damping);
    t["damping.damping"] = Gain(&StackGains::damping, &DampingParams::damping);
    t["damping.weight"] = Gain(&StackGains::damping, &DampingParams::weight);
    t["velocity_limit.gain"] =
        Gain(&StackGains::velocity_limit, &VelocityLimitParams::gain);
    t["velocity_limit.sigma"] =
        Gain(&StackGains::velocity_limit, &VelocityLimitParams::sigma);
    t["robot.joint_velocity_limit"] = Number(&SimConfig::robot, &RobotModel::joint_velocity_limit);
    return t;
  }();
  return table;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

void SetConfigValue(SimConfig& cfg, const std::string& key, const std::string& value) {
  auto it = Setters().find(key);
  if (it == Setters().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(cfg, key, value);
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const auto& [k, v] : Setters()) keys.push_back(k);
  return keys;
}

SimConfig ParseSimConfig(std::istream& in, SimConfig cfg) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = Trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    }
    try {
      SetConfigValue(cfg, Trim(line.substr(0, eq)), Trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.env.Validate();
  cfg.reward.Validate();
  cfg.robot.Validate();
  return cfg;
}

SimConfig LoadSimConfig(const std::string& path, SimConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return ParseSimConfig(in, std::move(base));
}

void WriteEpisodeCsv(std::ostream& out, const EpisodeResult& episode) {
  const Eigen::Index n = episode.scene.initial.q.size();
  out << "step";
  for (const char* prefix : {"q", "qd", "action"}) {
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << prefix << i;
  }
  out << ",reward,min_clearance\n";
  std::ostringstream row;
  row.precision(17);
  for (const StepRecord& r : episode.steps) {
    row.str("");
    row << r.step;
    for (Eigen::Index i = 0; i < n; ++i) row << ',' << r.state.q(i);
    for (Eigen::Index i = 0; i < n; ++i) row << ',' << r.state.qd(i);
    for (Eigen::Index i = 0; i < n; ++i) row << ',' << r.action(i);
    row << ',' << r.reward << ',' << r.min_clearance << '\n';
    out << row.str();
  }
}

std::mt19937_64 EpisodeRng(std::uint64_t seed, int episode) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(episode)};
  return std::mt19937_64(seq);
}

std::vector<EpisodeResult> RunEpisodes(
    const SimConfig& cfg, int episodes, PolicyAlgorithm algorithm,
    const std::function<void(int, const EpisodeResult&)>& on_episode) {
  if (episodes < 1) throw std::invalid_argument("episodes must be >= 1");
  const Controller controller = MakeRmpController(cfg.robot, cfg.gains, algorithm);
  std::vector<EpisodeResult> out;
  out.reserve(episodes);
  for (int i = 0; i < episodes; ++i) {
    std::mt19937_64 rng = EpisodeRng(cfg.env.seed, i);
    out.push_back(RunEpisode(cfg.env, cfg.robot, cfg.reward, controller, rng));
    if (on_episode) on_episode(i, out.back());
  }
  return out;
}

SimSummary Summarize(std::span<const EpisodeResult> episodes, double goal_tolerance) {
  SimSummary s;
  s.episodes = static_cast<int>(episodes.size());
  s.goal_tolerance = goal_tolerance;
  if (episodes.empty()) return s;
  s.min_clearance = std::numeric_limits<double>::infinity();
  s.min_step_reward = std::numeric_limits<double>::infinity();
  s.max_step_reward = -std::numeric_limits<double>::infinity();
  int safe = 0, reached = 0;
  for (const EpisodeResult& e : episodes) {
    s.mean_reward += e.total_reward;
    s.mean_final_distance += e.final_goal_distance;
    safe += e.terminated_by == Termination::kHorizon;
    reached += e.final_goal_distance < goal_tolerance;
    s.min_clearance = std::min(s.min_clearance, e.min_clearance);
    for (const StepRecord& r : e.steps) {
      s.min_step_reward = std::min(s.min_step_reward, r.reward);
      s.max_step_reward = std::max(s.max_step_reward, r.reward);
      s.max_abs_velocity = std::max(s.max_abs_velocity, r.state.qd.cwiseAbs().maxCoeff());
    }
    s.max_abs_velocity = std::max(s.max_abs_velocity, e.final_state.qd.cwiseAbs().maxCoeff());
  }
  s.mean_reward /= s.episodes;
  s.mean_final_distance /= s.episodes;
  s.collision_free_fraction = static_cast<double>(safe) / s.episodes;
  s.goal_reached_fraction = static_cast<double>(reached) / s.episodes;
  return s;
}

}  // namespace rmp2
