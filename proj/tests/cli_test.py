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
"""Exit codes and outputs of the rmp2 command-line tool."""

import csv
import os
import subprocess

import pytest

CLI = os.environ.get("RMP2_CLI", "rmp2")


def run(*args, env=None):
    full_env = dict(os.environ)
    full_env.pop("RMP2_SEED", None)
    full_env.update(env or {})
    return subprocess.run([CLI, *args], capture_output=True, text=True, env=full_env)


def test_help_exits_zero():
    assert run("--help").returncode == 0
    assert run("sim", "--help").returncode == 0


def test_missing_or_unknown_subcommand_is_usage_error():
    assert run().returncode == 2
    assert run("train").returncode == 2


def test_verify_passes_by_default():
    r = run("verify", "--cases", "12", "--quiet")
    assert r.returncode == 0, r.stdout + r.stderr
    assert "0 failed" in r.stdout


def test_verify_zero_tolerance_fails():
    assert run("verify", "--tol", "0", "--cases", "4").returncode == 1


def test_verify_zero_cases_is_usage_error():
    assert run("verify", "--cases", "0").returncode == 2


def test_verify_seed_falls_back_to_environment():
    r = run("verify", "--cases", "2", "--quiet", env={"RMP2_SEED": "31"})
    assert "seed 31" in r.stdout
    r = run("verify", "--cases", "2", "--quiet", "--seed", "5", env={"RMP2_SEED": "31"})
    assert "seed 5" in r.stdout
    assert run("verify", "--cases", "2", env={"RMP2_SEED": "x"}).returncode == 2


def test_bench_writes_two_rows_per_algorithm(tmp_path):
    out = tmp_path / "bench.csv"
    r = run("bench", "--lengths", "4,8", "--trials", "10", "--out", str(out))
    assert r.returncode == 0, r.stderr
    assert "slope rmp2" in r.stdout
    rows = list(csv.DictReader(out.open()))
    assert [(x["algorithm"], x["N"]) for x in rows] == [
        ("rmp2", "17"), ("naive", "17"), ("rmp2", "33"), ("naive", "33")]
    assert list(rows[0]) == ["algorithm", "length", "N", "trials", "mean_s", "std_s", "median_s"]


def test_bench_usage_errors():
    assert run("bench", "--algos", "").returncode == 2
    assert run("bench", "--algos", "fast").returncode == 2
    assert run("bench", "--lengths", "8,4").returncode == 2
    assert run("bench", "--trials", "0").returncode == 2


def test_sim_is_deterministic_and_logs(tmp_path):
    a = run("sim", "--env", "1", "--episodes", "3", "--seed", "7", "--quiet")
    b = run("sim", "--env", "1", "--episodes", "3", "--seed", "7", "--quiet",
            "--log", str(tmp_path))
    assert a.returncode == 0 and b.returncode == 0
    assert a.stdout == b.stdout
    assert (tmp_path / "summary.txt").read_text() == a.stdout
    header = (tmp_path / "episode_0000.csv").open().readline().strip()
    assert header.startswith("step,q0,q1,q2,qd0")
    assert header.endswith(",reward,min_clearance")


def test_sim_usage_errors():
    assert run("sim", "--env", "4").returncode == 2
    assert run("sim", "--policy", "tree").returncode == 2
    assert run("sim", "--episodes", "0").returncode == 2


def test_sim_reads_config(tmp_path):
    cfg = tmp_path / "scene.cfg"
    cfg.write_text("env_id = 2\nseed = 9\nhorizon = 20\n")
    r = run("--config", str(cfg), "sim", "--episodes", "1", "--quiet")
    assert r.returncode == 0, r.stderr
    assert r.stdout.startswith("env 2 policy rmp2 seed 9 episodes 1")
    cfg.write_text("nonsense = 1\n")
    assert run("--config", str(cfg), "sim").returncode == 2


def test_gradcheck_passes_and_reports_skips():
    r = run("gradcheck", "--scenes", "3", "--seed", "2")
    assert r.returncode == 0, r.stdout
    r = run("gradcheck", "--scenes", "8", "--without-joint-rmps")
    assert r.returncode == 0
    assert "SKIP" in r.stdout and "rank deficient" in r.stdout


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
