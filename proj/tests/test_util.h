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

// Independent oracles shared by the test suites. Nothing here calls the
// reverse-mode engine: derivatives are central finite differences.

#ifndef RMP2_TESTS_TEST_UTIL_H_
#define RMP2_TESTS_TEST_UTIL_H_

#include <functional>
#include <random>

#include <Eigen/Dense>

namespace rmp2::testing {

using VectorFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Central differences, one column per input coordinate.
Eigen::MatrixXd FiniteDifferenceJacobian(const VectorFn& f, const Eigen::VectorXd& x,
                                         double h = 1e-6);

// d/dt f(x + t w) at t = 0.
Eigen::VectorXd FiniteDifferenceDirectional(const VectorFn& f, const Eigen::VectorXd& x,
                                            const Eigen::VectorXd& w, double h = 1e-6);

// d²/dt² f(x + t w) at t = 0.
Eigen::VectorXd FiniteDifferenceSecondDirectional(const VectorFn& f,
                                                  const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& w,
                                                  double h = 1e-4);

// ‖a - b‖ / max(‖a‖, ‖b‖, floor).
double RelativeError(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                     double floor = 1e-6);

Eigen::VectorXd RandomVector(std::mt19937_64& rng, Eigen::Index n, double lo = -1.0,
                             double hi = 1.0);
Eigen::MatrixXd RandomMatrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                             double lo = -1.0, double hi = 1.0);

}  // namespace rmp2::testing

#endif  // RMP2_TESTS_TEST_UTIL_H_
