# Copyright 2026 The RMP2 Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Python bindings for the RMP2 policy library."""

from rmp2._rmp2 import (
    DomainError,
    ShapeError,
    arm_parameter_gradient,
    arm_policy,
    chain_policy,
    control_points,
    end_effector,
    fit_loglog_slope,
    gradcheck,
    reward,
    run_benchmark,
    simulate,
    step,
    tape_footprint,
    verify,
)

__all__ = [
    "DomainError",
    "ShapeError",
    "arm_parameter_gradient",
    "arm_policy",
    "chain_policy",
    "control_points",
    "end_effector",
    "fit_loglog_slope",
    "gradcheck",
    "reward",
    "run_benchmark",
    "simulate",
    "step",
    "tape_footprint",
    "verify",
]
