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

#include "rmp2/leaf_rmps.h"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace rmp2 {

using ad::Var;

const char* RmpKindName(RmpKind kind) {
  switch (kind) {
    case RmpKind::kConstant: return "constant";
    case RmpKind::kGoalAttractor: return "goal_attractor";
    case RmpKind::kCollisionAvoidance: return "collision_avoidance";
    case RmpKind::kJointDamping: return "joint_damping";
    case RmpKind::kJointVelocityLimit: return "joint_velocity_limit";
  }
  return "unknown";
}

LeafRmp::LeafRmp(RmpKind kind, int dim, Eigen::VectorXd params, Evaluator evaluator)
    : kind_(kind), dim_(dim), params_(std::move(params)), evaluator_(std::move(evaluator)) {
  if (dim_ < 1) throw std::invalid_argument("LeafRmp: dim must be >= 1");
  if (!params_.allFinite()) throw std::invalid_argument("LeafRmp: non-finite parameter");
}

LeafRmp LeafRmp::WithParams(const Eigen::VectorXd& params) const {
  if (params.size() != params_.size()) {
    throw std::invalid_argument("LeafRmp::WithParams: wrong parameter count");
  }
  return LeafRmp(kind_, dim_, params, evaluator_);
}

RmpVars LeafRmp::Evaluate(const Var& x, const Var& xd, const Var& params) const {
  if (x.rows() != dim_ || x.cols() != 1 || xd.rows() != dim_ || xd.cols() != 1) {
    throw ad::ShapeError(std::string(RmpKindName(kind_)) + ": state has the wrong dimension");
  }
  if (params.size() != params_.size()) {
    throw ad::ShapeError(std::string(RmpKindName(kind_)) + ": wrong parameter count");
  }
  RmpVars out = evaluator_(x, xd, params);
  if (out.metric.rows() != dim_ || out.metric.cols() != dim_ || out.accel.rows() != dim_ ||
      out.accel.cols() != 1) {
    throw ad::ShapeError(std::string(RmpKindName(kind_)) + ": evaluator returned a bad shape");
  }
  return out;
}

RmpVars LeafRmp::Evaluate(const Var& x, const Var& xd) const {
  return Evaluate(x, xd, x.tape().input(params_));
}

RmpCanonical LeafRmp::Evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& xd) const {
  ad::Tape tape;
  RmpVars v = Evaluate(tape.input(x), tape.input(xd));
  return {v.metric.value(), v.accel.vector()};
}

namespace {

void RequirePositive(const Eigen::VectorXd& p, const char* what) {
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!(p(i) > 0.0)) throw std::invalid_argument(std::string(what) + ": parameters must be > 0");
  }
}

Var Entry(const Var& params, Eigen::Index i) { return slice(params, i, 1); }

}  // namespace

LeafRmp ConstantRmp(const Eigen::MatrixXd& metric, const Eigen::VectorXd& accel) {
  const Eigen::Index m = accel.size();
  if (metric.rows() != m || metric.cols() != m) {
    throw std::invalid_argument("ConstantRmp: metric must be m x m");
  }
  if ((metric - metric.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument("ConstantRmp: metric must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(metric);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument("ConstantRmp: metric must be positive semidefinite");
  }
  return LeafRmp(RmpKind::kConstant, static_cast<int>(m), accel,
                 [metric](const Var& x, const Var&, const Var& params) {
                   return RmpVars{x.tape().input_matrix(metric), copy(params)};
                 });
}

LeafRmp GoalAttractor(const Eigen::VectorXd& goal, const AttractorParams& p) {
  Eigen::VectorXd params(3);
  params << p.gain, p.damping, p.softness;
  RequirePositive(params, "GoalAttractor");
  const Eigen::Index m = goal.size();
  return LeafRmp(RmpKind::kGoalAttractor, static_cast<int>(m), params,
                 [goal, m](const Var& x, const Var& xd, const Var& params) {
                   ad::Tape& t = x.tape();
                   Var e = t.input(goal) - x;
                   Var norm = sqrt(squared_norm(e) + square(Entry(params, 2)));
                   Var a = Entry(params, 0) * e / norm - Entry(params, 1) * xd;
                   return RmpVars{t.input_matrix(Eigen::MatrixXd::Identity(m, m)), a};
                 });
}

LeafRmp CollisionAvoidance(const CollisionParams& p) {
  Eigen::VectorXd params(4);
  params << p.gain, p.epsilon, p.activation, p.damping;
  RequirePositive(params, "CollisionAvoidance");
  return LeafRmp(RmpKind::kCollisionAvoidance, 1, params,
                 [](const Var& s, const Var& sd, const Var& params) {
                   Var gain = Entry(params, 0);
                   Var eps = Entry(params, 1);
                   Var act = Entry(params, 2);
                   Var damping = Entry(params, 3);
                   if (s.scalar() <= -eps.scalar()) {
                     throw ad::DomainError("collision_avoidance: clearance " +
                                           std::to_string(s.scalar()) + " <= -epsilon");
                   }
                   Var shifted = s + eps;
                   Var gap = max_const(act - s, 0.0);
                   Var w = square(gap / act) / shifted;
                   Var gate = step(act - s, 0.0, ad::StepMode::kGreater);
                   Var a = gate * (gain / square(shifted) - damping * sd * w);
                   return RmpVars{w, a};
                 });
}

LeafRmp JointDamping(int dim, const DampingParams& p) {
  Eigen::VectorXd params(2);
  params << p.damping, p.weight;
  RequirePositive(params, "JointDamping");
  return LeafRmp(RmpKind::kJointDamping, dim, params,
                 [dim](const Var& x, const Var& xd, const Var& params) {
                   Var eye = x.tape().input_matrix(Eigen::MatrixXd::Identity(dim, dim));
                   return RmpVars{Entry(params, 1) * eye, -(Entry(params, 0) * xd)};
                 });
}

LeafRmp JointVelocityLimit(double limit, const VelocityLimitParams& p) {
  if (!(limit > 0.0)) throw std::invalid_argument("JointVelocityLimit: limit must be > 0");
  Eigen::VectorXd params(2);
  params << p.gain, p.sigma;
  RequirePositive(params, "JointVelocityLimit");
  const double log_cap = std::log(kVelocityLimitMaxWeight);
  return LeafRmp(RmpKind::kJointVelocityLimit, 1, params,
                 [limit, log_cap](const Var&, const Var& v, const Var& params) {
                   Var speed = abs(v);
                   // min(exp(z), cap) == exp(min(z, log cap)) and cannot overflow.
                   Var w = exp(min_const((speed - limit) / Entry(params, 1), log_cap));
                   Var excess = max_const(speed - 0.9 * limit, 0.0);
                   Var dir = step(v, 0.0, ad::StepMode::kSign);
                   Var a = -(Entry(params, 0) * dir * excess);
                   return RmpVars{w, a};
                 });
}

}  // namespace rmp2
