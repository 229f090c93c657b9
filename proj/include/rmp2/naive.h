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

// Reference policy built from explicit leaf Jacobians:
//   M_r = Σ J_kᵀ M_k J_k,  f_r = Σ J_kᵀ M_k (a_k - J̇_k q̇).

#ifndef RMP2_NAIVE_H_
#define RMP2_NAIVE_H_

#include <span>

#include "rmp2/autodiff.h"
#include "rmp2/policy.h"
#include "rmp2/rmp2.h"
#include "rmp2/taskmaps.h"

namespace rmp2 {

enum class NaiveVariant {
  // ẋ = J q̇ with J recorded for differentiation; curvature differentiates
  // through the materialized J.
  kDirect,
  // ẋ and the curvature by two JVPs on ψ; J is only used for the sums.
  kMemorySafe,
};

RecordedPolicy RecordNaive(ad::Tape& tape, const TaskGraph& graph,
                           std::span<const RmpBinding> rmps, const ConfigState& state,
                           NaiveVariant variant = NaiveVariant::kDirect, bool record = false);

PolicyResult NaivePolicy(const TaskGraph& graph, std::span<const RmpBinding> rmps,
                         const ConfigState& state);
PolicyResult NaivePolicyMemorySafe(const TaskGraph& graph, std::span<const RmpBinding> rmps,
                                   const ConfigState& state);

}  // namespace rmp2

#endif  // RMP2_NAIVE_H_
