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

// RMPflow policy computed with gradient, Jacobian and JVP oracles only.
//
// The root force and metric are the gradient and Hessian-like Jacobian of
// two auxiliary scalars built on mirrored copies q', q'' of q:
//   r = Σ x'ᵀ M x'',  s = Σ x'ᵀ M (a - c),
//   f = ∂s/∂q',  M_r = ∂/∂q'' (∂r/∂q'),
// with x = ψ(q), ẋ = J q̇ and c = J̇ q̇ obtained by two JVPs.

#ifndef RMP2_RMP2_H_
#define RMP2_RMP2_H_

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "rmp2/autodiff.h"
#include "rmp2/policy.h"
#include "rmp2/taskmaps.h"

namespace rmp2 {

struct RecordedPolicy {
  ad::Var q;
  ad::Var qd;
  ad::Var force;   // f_r
  ad::Var metric;  // M_r
};

// Records one evaluation on `tape`. With `record` every sweep is kept on
// the tape, so force and metric stay differentiable and `Tape::Replay`
// refreshes them after new inputs are set. `params`, if given, holds one
// parameter Var per binding.
RecordedPolicy RecordRmp2(ad::Tape& tape, const TaskGraph& graph,
                          std::span<const RmpBinding> rmps, const ConfigState& state,
                          bool record = false, std::span<const ad::Var> params = {});

PolicyResult Rmp2Policy(const TaskGraph& graph, std::span<const RmpBinding> rmps,
                        const ConfigState& state);

using PolicyLoss = std::function<ad::Var(const ad::Var& accel)>;

struct ParamGradientResult {
  double loss = 0.0;
  Eigen::VectorXd accel;
  std::vector<Eigen::VectorXd> grads;  // one per binding, shaped like its params
};

// d loss(π) / d params for every binding. Throws DomainError when M_r is
// rank deficient (relative eigenvalue below 1e-10).
ParamGradientResult ParameterGradient(const PolicyLoss& loss, std::span<const RmpBinding> rmps,
                                      const TaskGraph& graph, const ConfigState& state);

}  // namespace rmp2

#endif  // RMP2_RMP2_H_
