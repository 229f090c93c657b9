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

// Cross-checks of the policy implementations on random instances.

#ifndef RMP2_VERIFY_H_
#define RMP2_VERIFY_H_

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rmp2/policy.h"
#include "rmp2/taskmaps.h"

namespace rmp2 {

struct VerifyInstance {
  std::string family;  // "chain", "arm", "arm_tree" or "dag"
  TaskGraph graph{1};
  std::vector<RmpBinding> rmps;
  ConfigState state;
};

// Every instance has at most `kMaxVerifyNodes` nodes, root dim <= 5, and an
// identity leaf "reg" on the root carrying a weak constant RMP.
inline constexpr int kMaxVerifyNodes = 30;

VerifyInstance RandomChainInstance(std::mt19937_64& rng);
VerifyInstance RandomArmInstance(std::mt19937_64& rng, bool tree);
VerifyInstance RandomDagInstance(std::mt19937_64& rng);
// Cycles through the four families.
VerifyInstance RandomInstance(std::mt19937_64& rng, int index);

// Root RMP assembled from central-difference Jacobians (step 1e-6) and
// second directional differences for J̇ q̇ (step 1e-4). No autodiff.
RmpNatural FiniteDifferenceRootRmp(const TaskGraph& graph, std::span<const RmpBinding> rmps,
                                   const ConfigState& state);

struct CaseReport {
  int index = 0;
  std::string family;
  std::size_t nodes = 0;
  bool tree = false;
  // Relative errors against the RMP² output; rmpflow is NaN off trees.
  double naive = 0.0;
  double memory_safe = 0.0;
  double rmpflow = 0.0;
  // Worst relative error of any implementation against the finite-difference root RMP.
  double finite_difference = 0.0;
  bool passed = false;

  // Worst disagreement between the algorithms, finite differences excluded.
  double max_error() const;
};

CaseReport CheckInstance(const VerifyInstance& instance, double tol, double fd_tol);

struct VerifyOptions {
  int cases = 200;
  std::uint64_t seed = 0;
  double tol = 1e-8;
  double fd_tol = 1e-4;
};

std::vector<CaseReport> RunVerify(const VerifyOptions& options,
                                  const std::function<void(const CaseReport&)>& on_case = {});

// Parameter gradients of ‖π(q, q̇) - target‖² on sampled three-link scenes
// with the hand-designed stack, against central differences.
struct GradCheckOptions {
  int scenes = 20;
  std::uint64_t seed = 0;
  double tol = 1e-4;
  int env_id = 2;
  // Without the joint RMPs the root metric can be rank deficient; such
  // scenes are reported as skipped.
  bool joint_rmps = true;
};

struct GradCheckCase {
  int index = 0;
  bool skipped = false;
  std::string message;  // reason for a skip
  int active_collision = 0;  // collision leaves inside their activation distance
  // Worst per-binding relative error against central differences.
  double attractor_error = 0.0;
  double collision_error = 0.0;
  bool passed = false;
};

std::vector<GradCheckCase> RunGradCheck(
    const GradCheckOptions& options,
    const std::function<void(const GradCheckCase&)>& on_case = {});

}  // namespace rmp2

#endif  // RMP2_VERIFY_H_
