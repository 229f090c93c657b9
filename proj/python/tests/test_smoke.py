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

import numpy as np
import pytest

import rmp2

Q = np.array([0.3, -0.4, 0.5])
QD = np.array([0.1, 0.2, -0.3])
GOAL = np.array([0.35, 0.1])
OBSTACLES = [(0.5, 0.45, 0.07)]


def test_algorithms_agree_on_arm():
    ref = rmp2.arm_policy(Q, QD, GOAL, OBSTACLES)
    assert ref["accel"].shape == (3,)
    assert ref["metric"].shape == (3, 3)
    for algo in ("naive", "naive_memory_safe", "rmpflow"):
        out = rmp2.arm_policy(Q, QD, GOAL, OBSTACLES, algorithm=algo)
        np.testing.assert_allclose(out["accel"], ref["accel"], rtol=1e-8, atol=1e-12)


def test_unknown_algorithm_raises():
    with pytest.raises(ValueError):
        rmp2.arm_policy(Q, QD, GOAL, algorithm="fast")


def test_parameter_gradient_matches_finite_difference_of_loss_shape():
    target = np.array([0.1, -0.2, 0.3])
    out = rmp2.arm_parameter_gradient(Q, QD, GOAL, OBSTACLES, target)
    assert out["loss"] == pytest.approx(np.sum((out["accel"] - target) ** 2))
    kinds = {leaf["kind"] for leaf in out["leaves"]}
    assert {"goal_attractor", "collision_avoidance"} <= kinds
    for leaf in out["leaves"]:
        assert leaf["grad"].shape == leaf["params"].shape


def test_chain_policy_and_footprint():
    q = np.array([0.1, -0.2, 0.3])
    a = rmp2.chain_policy(4, q=q, qd=-q)
    b = rmp2.chain_policy(4, q=q, qd=-q, algorithm="naive")
    assert a["nodes"] == 17
    np.testing.assert_allclose(a["accel"], b["accel"], rtol=1e-8)
    assert rmp2.tape_footprint(36) / rmp2.tape_footprint(4) < 12
    assert rmp2.tape_footprint(36, "naive") > rmp2.tape_footprint(36)


def test_verify_and_gradcheck():
    cases = rmp2.verify(cases=8, seed=1)
    assert len(cases) == 8 and all(c["passed"] for c in cases)
    checks = rmp2.gradcheck(scenes=2)
    assert all(c["passed"] for c in checks)


def test_fit_loglog_slope():
    n = np.array([17.0, 33.0, 49.0, 65.0])
    slope, _, r2 = rmp2.fit_loglog_slope(n, 2e-6 * n**2)
    assert slope == pytest.approx(2.0, abs=1e-12)
    assert r2 == pytest.approx(1.0)


def test_benchmark_rows():
    out = rmp2.run_benchmark([4, 8], trials=3, algorithms=["rmp2"])
    assert [r["N"] for r in out["rows"]] == [17, 33]
    assert "rmp2" in out["fits"]


def test_reward_and_step():
    g = np.array([0.3, 0.1])
    assert rmp2.reward(g, g, [0.2]) == pytest.approx(1.0)
    assert rmp2.reward(g, g, [0.025]) == pytest.approx(0.5)
    q, qd = rmp2.step(np.zeros(3), np.array([1.0, 0.0, 0.0]), np.array([50.0, 0.0, 0.0]))
    assert qd[0] == 1.0 and q[0] == pytest.approx(0.0125)


def test_simulate_is_deterministic():
    a = rmp2.simulate(env=1, episodes=2, seed=7)
    b = rmp2.simulate(env=1, episodes=2, seed=7)
    assert a["mean_reward"] == b["mean_reward"]
    assert a["collision_free_fraction"] == 1.0
    assert -5.0 <= a["min_step_reward"] <= a["max_step_reward"] <= 1.0
    with pytest.raises(ValueError):
        rmp2.simulate(env=4)


def test_kinematics():
    np.testing.assert_allclose(rmp2.end_effector(np.zeros(3)), [0.75, 0.0], atol=1e-15)
    assert len(rmp2.control_points(np.zeros(3))) == 9
