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

// Hand-designed leaf RMPs. Each maps a leaf state (x, ẋ) and a parameter
// vector to a metric M and desired acceleration a, recorded on the tape so
// that all three inputs are differentiable.

#ifndef RMP2_LEAF_RMPS_H_
#define RMP2_LEAF_RMPS_H_

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "rmp2/autodiff.h"

namespace rmp2 {

// Acceleration form (a, M).
struct RmpCanonical {
  Eigen::MatrixXd metric;
  Eigen::VectorXd accel;
};

struct RmpVars {
  ad::Var metric;  // m x m
  ad::Var accel;   // m
};

enum class RmpKind {
  kConstant,
  kGoalAttractor,
  kCollisionAvoidance,
  kJointDamping,
  kJointVelocityLimit,
};

const char* RmpKindName(RmpKind kind);

struct AttractorParams {
  double gain = 10.0;     // α
  double damping = 2.0;   // β
  double softness = 0.1;  // σ_w, m
};

struct CollisionParams {
  double gain = 1e-3;        // k_c
  double epsilon = 0.02;     // ε, m
  double activation = 0.2;   // d_act, m
  double damping = 1.0;      // γ
};

struct DampingParams {
  double damping = 1.0;  // β_d
  double weight = 1e-2;  // w_d
};

struct VelocityLimitParams {
  double gain = 10.0;   // k_v
  double sigma = 0.05;  // σ_v, rad/s
};

class LeafRmp {
 public:
  using Evaluator =
      std::function<RmpVars(const ad::Var& x, const ad::Var& xd, const ad::Var& params)>;

  LeafRmp(RmpKind kind, int dim, Eigen::VectorXd params, Evaluator evaluator);

  RmpKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Eigen::VectorXd& params() const { return params_; }
  LeafRmp WithParams(const Eigen::VectorXd& params) const;

  // `params` must live on x's tape and have the size of params().
  RmpVars Evaluate(const ad::Var& x, const ad::Var& xd, const ad::Var& params) const;
  // Records params() as a constant input.
  RmpVars Evaluate(const ad::Var& x, const ad::Var& xd) const;
  RmpCanonical Evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& xd) const;

 private:
  RmpKind kind_;
  int dim_;
  Eigen::VectorXd params_;
  Evaluator evaluator_;
};

// a = params, M fixed. M must be symmetric PSD.
LeafRmp ConstantRmp(const Eigen::MatrixXd& metric, const Eigen::VectorXd& accel);

// params [α, β, σ_w]; e = goal - x, a = α e / √(‖e‖² + σ_w²) - β ẋ, M = I.
LeafRmp GoalAttractor(const Eigen::VectorXd& goal, const AttractorParams& p = {});

// 1-D clearance leaf, params [k_c, ε, d_act, γ].
// w = (max(d_act - s, 0) / d_act)² / (s + ε), M = w,
// a = k_c / (s + ε)² - γ ṡ w for s < d_act and 0 otherwise.
// Throws DomainError for s <= -ε.
LeafRmp CollisionAvoidance(const CollisionParams& p = {});

// Identity leaf of dimension `dim`, params [β_d, w_d]; M = w_d I, a = -β_d q̇.
LeafRmp JointDamping(int dim, const DampingParams& p = {});

// 1-D joint leaf, params [k_v, σ_v].
// w = min(exp((|v| - L) / σ_v), w_max), a = -k_v sign(v) max(|v| - 0.9 L, 0).
inline constexpr double kVelocityLimitMaxWeight = 1e3;
LeafRmp JointVelocityLimit(double limit, const VelocityLimitParams& p = {});

}  // namespace rmp2

#endif  // RMP2_LEAF_RMPS_H_
