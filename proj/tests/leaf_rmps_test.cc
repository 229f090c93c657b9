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
#include <random>

#include <gtest/gtest.h>

#include "test_util.h"

namespace rmp2 {
namespace {

using ad::Tape;
using ad::Var;
using testing::RandomVector;

RmpCanonical Eval(const LeafRmp& rmp, double x, double xd) {
  return rmp.Evaluate(Eigen::VectorXd::Constant(1, x), Eigen::VectorXd::Constant(1, xd));
}

TEST(GoalAttractor, Examples) {
  const Eigen::Vector2d goal(0.3, -0.2);
  LeafRmp rmp = GoalAttractor(goal);
  RmpCanonical at_goal = rmp.Evaluate(goal, Eigen::Vector2d::Zero());
  EXPECT_EQ(at_goal.accel, Eigen::VectorXd::Zero(2));
  EXPECT_EQ(at_goal.metric, Eigen::MatrixXd::Identity(2, 2));

  RmpCanonical unit = GoalAttractor(Eigen::Vector2d(1.0, 0.0)).Evaluate(
      Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero());
  EXPECT_NEAR(unit.accel(0), 9.9504, 1e-4);
  EXPECT_NEAR(unit.accel(0), 10.0 / std::sqrt(1.01), 1e-14);
  EXPECT_EQ(unit.accel(1), 0.0);

  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    RmpCanonical r = rmp.Evaluate(RandomVector(rng, 2), RandomVector(rng, 2));
    EXPECT_EQ(r.metric, Eigen::MatrixXd::Identity(2, 2));
  }
}

TEST(GoalAttractor, FormulaOracle) {
  std::mt19937_64 rng(2);
  AttractorParams p{3.0, 1.5, 0.2};
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd goal = RandomVector(rng, 2);
    Eigen::VectorXd x = RandomVector(rng, 2);
    Eigen::VectorXd xd = RandomVector(rng, 2);
    Eigen::VectorXd e = goal - x;
    Eigen::VectorXd expected = p.gain * e / std::sqrt(e.squaredNorm() + 0.04) - p.damping * xd;
    EXPECT_LT((GoalAttractor(goal, p).Evaluate(x, xd).accel - expected).norm(), 1e-14);
  }
  EXPECT_THROW(GoalAttractor(Eigen::Vector2d::Zero(), AttractorParams{0.0, 1.0, 1.0}),
               std::invalid_argument);
}

TEST(CollisionAvoidance, Examples) {
  LeafRmp rmp = CollisionAvoidance();
  RmpCanonical boundary = Eval(rmp, 0.2, -0.3);
  EXPECT_EQ(boundary.metric(0, 0), 0.0);
  EXPECT_EQ(boundary.accel(0), 0.0);
  EXPECT_EQ(Eval(rmp, 0.4, -1.0).metric(0, 0), 0.0);
  EXPECT_EQ(Eval(rmp, 0.4, -1.0).accel(0), 0.0);

  const double s = 0.05;
  const double w = std::pow((0.2 - s) / 0.2, 2) / (s + 0.02);
  RmpCanonical r = Eval(rmp, s, 0.0);
  EXPECT_NEAR(r.metric(0, 0), w, 1e-13);
  EXPECT_NEAR(r.accel(0), 1e-3 / std::pow(s + 0.02, 2), 1e-13);
  r = Eval(rmp, s, -0.4);
  EXPECT_NEAR(r.accel(0), 1e-3 / std::pow(s + 0.02, 2) + 0.4 * w, 1e-12);
}

TEST(CollisionAvoidance, DeepPenetrationIsADomainError) {
  LeafRmp rmp = CollisionAvoidance();
  EXPECT_THROW(Eval(rmp, -0.02, 0.0), ad::DomainError);
  EXPECT_THROW(Eval(rmp, -0.5, 0.0), ad::DomainError);
  EXPECT_NO_THROW(Eval(rmp, -0.019, 0.0));
}

TEST(CollisionAvoidance, WeightIsMonotone) {
  LeafRmp rmp = CollisionAvoidance();
  double prev = INFINITY;
  for (double s = -0.02 + 1e-3; s <= 0.2; s += 1e-3) {
    const double w = Eval(rmp, s, 0.0).metric(0, 0);
    EXPECT_LE(w, prev) << s;
    prev = w;
  }
}

TEST(JointDamping, Examples) {
  LeafRmp rmp = JointDamping(3);
  RmpCanonical r = rmp.Evaluate(Eigen::Vector3d(0.1, 0.2, 0.3), Eigen::Vector3d::Zero());
  EXPECT_EQ(r.accel, Eigen::VectorXd::Zero(3));
  EXPECT_EQ(r.metric, Eigen::MatrixXd(1e-2 * Eigen::MatrixXd::Identity(3, 3)));
  r = rmp.Evaluate(Eigen::Vector3d::Zero(), Eigen::Vector3d(1, -1, 0));
  EXPECT_EQ(r.accel, Eigen::VectorXd(Eigen::Vector3d(-1, 1, 0)));
}

TEST(JointVelocityLimit, Examples) {
  const double limit = 1.0;
  LeafRmp rmp = JointVelocityLimit(limit);
  RmpCanonical r = Eval(rmp, 0.3, 0.0);
  EXPECT_EQ(r.accel(0), 0.0);
  EXPECT_NEAR(r.metric(0, 0), std::exp(-limit / 0.05), 1e-20);
  EXPECT_EQ(Eval(rmp, 0.0, 0.9 * limit).accel(0), 0.0);
  EXPECT_EQ(Eval(rmp, 0.0, -0.9 * limit).accel(0), 0.0);

  for (double v : {1.05 * limit, -1.05 * limit}) {
    r = Eval(rmp, 0.0, v);
    const double sign = v > 0 ? 1.0 : -1.0;
    EXPECT_NEAR(r.metric(0, 0), std::exp((std::abs(v) - limit) / 0.05), 1e-12);
    EXPECT_NEAR(r.accel(0), -10.0 * sign * (std::abs(v) - 0.9 * limit), 1e-12);
  }
  EXPECT_NEAR(Eval(rmp, 0.0, 2.0).metric(0, 0), kVelocityLimitMaxWeight, 1e-9);
  EXPECT_NEAR(Eval(rmp, 0.0, 100.0).metric(0, 0), kVelocityLimitMaxWeight, 1e-9);
}

TEST(ConstantRmp, ValidatesMetric) {
  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;  // eigenvalue -1
  EXPECT_THROW(ConstantRmp(bad, Eigen::Vector2d::Zero()), std::invalid_argument);
  bad << 1, 0, 1, 1;
  EXPECT_THROW(ConstantRmp(bad, Eigen::Vector2d::Zero()), std::invalid_argument);
  RmpCanonical r = ConstantRmp(Eigen::Matrix2d::Identity(), Eigen::Vector2d(1, 2))
                       .Evaluate(Eigen::Vector2d::Zero(), Eigen::Vector2d::Zero());
  EXPECT_EQ(r.accel, Eigen::VectorXd(Eigen::Vector2d(1, 2)));
}

struct Case {
  LeafRmp rmp;
  double x_lo, x_hi, xd_lo, xd_hi;
};

std::vector<Case> AllKinds() {
  return {
      {GoalAttractor(Eigen::Vector2d(0.4, 0.1)), -1.0, 1.0, -1.0, 1.0},
      {CollisionAvoidance(), -0.015, 0.3, -1.0, 1.0},
      {JointDamping(3), -1.0, 1.0, -1.0, 1.0},
      {JointVelocityLimit(1.0), -1.0, 1.0, -1.2, 1.2},
      {ConstantRmp(Eigen::Matrix2d(Eigen::Vector2d(2.0, 0.5).asDiagonal()),
                   Eigen::Vector2d(0.3, -0.7)),
       -1.0, 1.0, -1.0, 1.0},
  };
}

TEST(LeafRmps, MetricsAreSymmetricPsd) {
  std::mt19937_64 rng(3);
  for (const Case& c : AllKinds()) {
    for (int trial = 0; trial < 1000; ++trial) {
      const int m = c.rmp.dim();
      RmpCanonical r = c.rmp.Evaluate(RandomVector(rng, m, c.x_lo, c.x_hi),
                                      RandomVector(rng, m, c.xd_lo, c.xd_hi));
      ASSERT_LT((r.metric - r.metric.transpose()).cwiseAbs().maxCoeff(), 1e-15);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(r.metric);
      ASSERT_GE(eig.eigenvalues().minCoeff(), -1e-10) << RmpKindName(c.rmp.kind());
    }
  }
}

TEST(LeafRmps, ParameterGradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (const Case& c : AllKinds()) {
    const int m = c.rmp.dim();
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd x = RandomVector(rng, m, c.x_lo, c.x_hi);
      Eigen::VectorXd xd = RandomVector(rng, m, c.xd_lo, c.xd_hi);
      // Keep away from the kinks of max/abs/min.
      if (c.rmp.kind() == RmpKind::kJointVelocityLimit) {
        const double v = std::abs(xd(0));
        if (std::abs(v - 0.9) < 1e-3 || std::abs(v - 1.0 - 0.05 * std::log(1e3)) < 1e-3) continue;
      }
      auto flat = [&](const Eigen::VectorXd& params) {
        RmpCanonical r = c.rmp.WithParams(params).Evaluate(x, xd);
        Eigen::VectorXd out(m * m + m);
        out << Eigen::Map<const Eigen::VectorXd>(r.metric.data(), m * m), r.accel;
        return out;
      };
      const Eigen::VectorXd params = c.rmp.params();
      const Eigen::MatrixXd fd = testing::FiniteDifferenceJacobian(flat, params);
      Tape tape;
      Var p = tape.input(params);
      RmpVars v = c.rmp.Evaluate(tape.input(x), tape.input(xd), p);
      Eigen::MatrixXd ad_jac(m * m + m, params.size());
      for (int i = 0; i < m * m; ++i) {
        Eigen::MatrixXd seed = Eigen::MatrixXd::Zero(m, m);
        seed(i % m, i / m) = 1.0;
        ad_jac.row(i) = ad::Backward(v.metric, seed, p).vector().transpose();
      }
      for (int i = 0; i < m; ++i) {
        ad_jac.row(m * m + i) =
            ad::Backward(v.accel, Eigen::VectorXd::Unit(m, i), p).vector().transpose();
      }
      EXPECT_LT(testing::RelativeError(ad_jac, fd), 1e-4) << RmpKindName(c.rmp.kind());
    }
  }
}

}  // namespace
}  // namespace rmp2
