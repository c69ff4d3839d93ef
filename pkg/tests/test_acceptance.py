"""Acceptance criteria, one test each, run at the stated tolerances.

Every test prints a single ``PASS``/``FAIL`` line straight to the terminal
(bypassing capture) so ``pytest tests/test_acceptance.py`` doubles as a
report. Runtime limits exclude the one-off numba compilation, which is
triggered before the clock starts.
"""
import json
import math
import time
from contextlib import contextmanager

import numpy as np
import pytest

from trajent import cli
from trajent.core import MtpResult
from trajent.entropy import (
    EntropyConfig, NormalizationVariant, PairConvention, trajectory_entropy, trajectory_entropy_oracle,
)
from trajent.experiments import RunConfig, preset_thresholds, run_rows, summarize
from trajent.game import GateConfig, run_level_k_game, run_ungated
from trajent.policies import FanPolicy, fan_level0
from trajent.scenarios import gen_intersection, gen_mixed_suite, load_scene, save_scene

from .conftest import fan_pair_by_confidence, fan_pair_by_spread, make_mtp, random_mtp


@pytest.fixture(scope="module", autouse=True)
def _warm_up():
    trajectory_entropy(make_mtp((0, 0), [([(1, 0), (2, 0)], 0.5), ([(0, 1), (0, 2)], 0.5)]))


@contextmanager
def criterion(capsys, number, title, limit=None):
    start = time.perf_counter()
    status, note = "FAIL", ""
    try:
        yield
        elapsed = time.perf_counter() - start
        if limit is not None and elapsed >= limit:
            note = f" (runtime {elapsed:.2f} s exceeds {limit} s)"
            raise AssertionError(f"criterion {number} took {elapsed:.2f} s, limit {limit} s")
        status = "PASS"
        note = f" ({elapsed:.2f} s)"
    finally:
        with capsys.disabled():
            print(f"\n[{status}] criterion {number}: {title}{note}")


def _rel(a, b):
    a, b = float(a), float(b)
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


def test_criterion_1_golden_values(capsys):
    with criterion(capsys, 1, "golden entropy values", limit=1.0):
        a = make_mtp((0, 0), [([(1, 0)], 0.5), ([(0, 1)], 0.5)])
        b = make_mtp((0, 0), [([(1, 0), (2, 0)], 0.5), ([(0, 1), (0, 2)], 0.5)])
        single = make_mtp((3, 4), [([(4, 4), (5, 4), (6, 4)], 1.0)])
        confident = make_mtp((0, 0), [([(1, 0)], 0.9), ([(0, 1)], 0.1)])
        assert _rel(trajectory_entropy(a), 0.5) <= 1e-12
        assert _rel(trajectory_entropy(b), 2.5) <= 1e-12
        assert trajectory_entropy(single) == 0.0
        assert _rel(trajectory_entropy(confident), 0.18) <= 1e-12


def test_criterion_2_oracle_equivalence(capsys):
    with criterion(capsys, 2, "optimized entropy matches the brute-force oracle on 1000 cases", limit=10.0):
        rng = np.random.default_rng(2024)
        worst = 0.0
        for _ in range(1000):
            r = random_mtp(rng, max_modes=8, max_horizon=50)
            worst = max(worst, _rel(trajectory_entropy(r), trajectory_entropy_oracle(r)))
        assert worst <= 1e-12, worst


def _rigid(r, angle, shift, scale=1.0):
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    move = lambda p: (p @ rot.T) * scale + shift  # noqa: E731
    return MtpResult.from_arrays(move(r.origin_array), move(r.trajectories), r.confidences, r.dt)


def test_criterion_3_invariances(capsys):
    with criterion(capsys, 3, "rigid, scale, permutation and pair-convention invariances", limit=10.0):
        rng = np.random.default_rng(77)
        ordered = EntropyConfig(pair_convention=PairConvention.ORDERED)
        for _ in range(250):
            r = random_mtp(rng, max_modes=8, max_horizon=50)
            base = trajectory_entropy(r)
            moved = _rigid(r, rng.uniform(-math.pi, math.pi), rng.uniform(-100, 100, size=2))
            assert _rel(trajectory_entropy(moved), base) <= 1e-9
            for s in (0.5, 2.0, 10.0):
                assert _rel(trajectory_entropy(_rigid(r, 0.0, np.zeros(2), s)), base) <= 1e-9
            perm = rng.permutation(r.num_modes)
            shuffled = MtpResult.from_arrays(r.origin, r.trajectories[perm], r.confidences[perm], r.dt)
            for variant in NormalizationVariant:
                cfg = EntropyConfig(variant)
                assert trajectory_entropy(shuffled, cfg) == trajectory_entropy(r, cfg)
            assert trajectory_entropy(r, ordered) == 2 * base


def test_criterion_4_confidence_and_dispersion_orderings(capsys):
    with criterion(capsys, 4, "dispersed > concentrated fan; uniform > 0.9-dominant confidences"):
        for seed in range(100):
            wide, narrow = fan_pair_by_spread(seed)
            assert trajectory_entropy(wide) > trajectory_entropy(narrow)
            uniform, dominant = fan_pair_by_confidence(seed)
            assert trajectory_entropy(uniform) > trajectory_entropy(dominant)


def test_criterion_5_entropy_falls_with_level(capsys):
    with criterion(capsys, 5, "ungated mean entropy strictly decreasing over K=5 levels"):
        suite = gen_mixed_suite(50, seed=0)
        traces = [run_ungated(ns.scene, FanPolicy(), 5) for ns in suite]
        means = [np.mean([e for t in traces for e in t.entropies(k).values()]) for k in range(5)]
        with capsys.disabled():
            print("\n    level means: " + ", ".join(f"{m:.3f}" for m in means))
        assert all(b < a for a, b in zip(means, means[1:]))


def test_criterion_6_gate_semantics(capsys):
    with criterion(capsys, 6, "frozen-forever, first-gate monotonicity, ungated equivalence, eval bound"):
        suite = gen_mixed_suite(20, seed=6)
        policy = FanPolicy()
        schedule = preset_thresholds("synthetic")
        froze_any = False
        for ns in suite:
            ungated = run_ungated(ns.scene, policy, 3)
            gated = run_level_k_game(ns.scene, policy, GateConfig(schedule, 3))
            for agent, level in gated.frozen_at().items():
                froze_any = True
                frozen = gated.levels[level - 1][agent].mtp
                assert all(gated.levels[k][agent].mtp is frozen for k in range(level, 3))
            level0 = sorted(ungated.entropies(0).values())
            previous = set()
            for t in [0.0] + level0 + [math.inf]:
                frozen_now = set(run_level_k_game(ns.scene, policy, GateConfig((t,), 2)).frozen_at())
                assert previous <= frozen_now
                previous = frozen_now
            floor = min(e for k in range(3) for e in ungated.entropies(k).values())
            below = np.nextafter(floor, -math.inf)
            assert run_level_k_game(ns.scene, policy, GateConfig((below, below), 3)).same_outcome(ungated)
            assert gated.policy_eval_count <= ungated.policy_eval_count
            assert (gated.policy_eval_count == ungated.policy_eval_count) == (not gated.frozen_at())
        assert froze_any


def test_criterion_7_compute_reduction(capsys):
    with criterion(capsys, 7, "gated evals reduced >= 20% with minADE change <= +5%", limit=60.0):
        suite = gen_mixed_suite(100, seed=0, straight_fraction=0.7)
        summary = summarize(run_rows(RunConfig(suite, 3, preset_thresholds("synthetic"))), 3)
        with capsys.disabled():
            print(f"\n    eval reduction {summary['eval_reduction']:.4f}, "
                  f"minADE {summary['min_ade_gated']:.4f} gated vs {summary['min_ade_ungated']:.4f} ungated "
                  f"(change {summary['min_ade_change']:+.4f})")
        assert summary["eval_reduction"] >= 0.20
        assert summary["min_ade_change"] <= 0.05


def test_criterion_8_difficulty_separation(capsys):
    with criterion(capsys, 8, "intersection level-0 entropy exceeds straight-road entropy"):
        suite = gen_mixed_suite(100, seed=8)
        simple, hard = [], []
        for ns in suite:
            values = [float(trajectory_entropy(fan_level0(ns.scene, a))) for a in ns.scene.agent_ids]
            (simple if ns.difficulty == "simple" else hard).extend(values)
        margin = np.mean(hard) - np.mean(simple)
        with capsys.disabled():
            print(f"\n    straight {np.mean(simple):.3f}, intersection {np.mean(hard):.3f}, margin {margin:.3f}")
        assert simple and hard and margin > 0


def test_criterion_9_round_trip_and_determinism(capsys, tmp_path):
    with criterion(capsys, 9, "scene save/load identity and byte-identical CLI reruns"):
        for seed in range(20):
            scene = gen_intersection(2 + seed % 3, seed)
            save_scene(scene, tmp_path / "scene.json")
            assert load_scene(tmp_path / "scene.json") == scene
        outputs = {}
        for run in ("first", "second"):
            out = tmp_path / run
            assert cli.main(["run", "--suite", "mixed:10", "--seed", "5", "--jobs", "2", "--out", str(out)]) == 0
            assert cli.main(["entropy-profile", "--suite", "mixed:10", "--seed", "5", "--out", str(out)]) == 0
            assert cli.main(["sweep", "--suite", "mixed:10", "--seed", "5", "--grid-preset", "ab-thd",
                             "--out", str(out)]) == 0
            outputs[run] = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
        assert outputs["first"] == outputs["second"]
        assert set(outputs["first"]) == {"rows.csv", "summary.json", "entropy_profile.csv", "sweep.csv"}
        json.loads(outputs["first"]["summary.json"])
