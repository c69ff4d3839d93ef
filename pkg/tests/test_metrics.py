import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from trajent.core import ModeTrajectory, MtpResult
from trajent.errors import ContractViolation
from trajent.metrics import collision, ego_plan, evaluate, min_ade, min_fde, miss

from .conftest import make_mtp, random_mtp

T = 10
GT = ModeTrajectory(np.column_stack([np.arange(1.0, T + 1), np.zeros(T)]))


def _offset(dy, conf):
    return (GT.points + [0.0, dy], conf)


def test_min_ade_exact_match():
    pred = make_mtp((0, 0), [_offset(0.0, 0.3), _offset(5.0, 0.7)])
    assert min_ade(pred, GT) == 0.0 and min_fde(pred, GT) == 0.0


def test_min_ade_lateral_offsets():
    pred = make_mtp((0, 0), [_offset(1.0, 0.5), _offset(-3.0, 0.5)])
    assert min_ade(pred, GT) == pytest.approx(1.0, rel=1e-12)


def test_single_mode_ade():
    pts = GT.points.copy()
    pts[:, 1] = np.linspace(0.0, 2.0, T)
    pred = make_mtp((0, 0), [(pts, 1.0)])
    assert min_ade(pred, GT) == pytest.approx(np.mean(np.linspace(0.0, 2.0, T)), rel=1e-12)


def test_min_fde_final_offsets():
    a, b = GT.points.copy(), GT.points.copy()
    a[-1] += [0.0, 2.0]
    b[-1] += [3.0, 4.0]
    pred = make_mtp((0, 0), [(a, 0.5), (b, 0.5)])
    assert min_fde(pred, GT) == pytest.approx(2.0, rel=1e-12)


def test_horizon_mismatch():
    pred = make_mtp((0, 0), [(GT.points[:-1], 1.0)])
    with pytest.raises(ContractViolation):
        min_ade(pred, GT)
    with pytest.raises(ContractViolation):
        min_fde(pred, GT)
    with pytest.raises(ContractViolation):
        miss(pred, GT)


@pytest.mark.parametrize("final, expected", [(0.0, False), (2.0, False), (2.5, True)])
def test_miss_boundary(final, expected):
    pts = GT.points.copy()
    pts[-1] += [final, 0.0]
    assert miss(make_mtp((0, 0), [(pts, 1.0)]), GT) is expected


def test_collision_examples():
    t = np.arange(1.0, T + 1)
    lane_a = np.column_stack([t, np.zeros(T)])
    lane_b = np.column_stack([t, np.full(T, 4.0)])
    assert not collision(lane_a, lane_b)
    crossing_a = np.column_stack([t - 5.0, np.zeros(T)])
    crossing_b = np.column_stack([np.zeros(T), t - 5.0])
    assert collision(crossing_a, crossing_b)
    assert collision(GT, GT)


def test_collision_length_mismatch():
    with pytest.raises(ContractViolation):
        collision(GT.points, GT.points[:-1])


def test_ego_plan_is_argmax():
    pred = make_mtp((0, 0), [_offset(1.0, 0.2), _offset(2.0, 0.8)])
    assert ego_plan(pred) is pred.modes[1]


def test_evaluate_combines():
    pred = make_mtp((0, 0), [_offset(1.0, 0.5), _offset(3.0, 0.5)])
    other = make_mtp((0, 5), [_offset(2.0, 1.0)])
    m = evaluate(pred, GT, [other])
    assert m.min_ade == pytest.approx(1.0) and m.min_fde == pytest.approx(1.0)
    assert not m.miss and m.collision
    assert not evaluate(pred, GT).collision


def _random_case(seed):
    rng = np.random.default_rng(seed)
    pred = random_mtp(rng, max_horizon=30)
    gt = ModeTrajectory(pred.trajectories[0] + rng.normal(0, 2.0, size=pred.trajectories[0].shape))
    return pred, gt


@given(seed=st.integers(0, 2**32 - 1))
def test_min_bounds_every_mode(seed):
    pred, gt = _random_case(seed)
    for mode in pred.modes:
        err = np.hypot(*(mode.points - gt.points).T)
        assert min_ade(pred, gt) <= err.mean() + 1e-12
        assert min_fde(pred, gt) <= err[-1] + 1e-12


@given(seed=st.integers(0, 2**32 - 1), angle=st.floats(-math.pi, math.pi), shift=st.floats(-100, 100))
def test_rigid_motion_invariance(seed, angle, shift):
    pred, gt = _random_case(seed)
    rot = np.array([[math.cos(angle), -math.sin(angle)], [math.sin(angle), math.cos(angle)]])
    move = lambda p: p @ rot.T + shift  # noqa: E731
    pred2 = MtpResult.from_arrays(move(pred.origin_array), move(pred.trajectories), pred.confidences, pred.dt)
    gt2 = ModeTrajectory(move(gt.points))
    assert min_ade(pred2, gt2) == pytest.approx(min_ade(pred, gt), rel=1e-9, abs=1e-9)
    assert min_fde(pred2, gt2) == pytest.approx(min_fde(pred, gt), rel=1e-9, abs=1e-9)


@given(seed=st.integers(0, 2**32 - 1), a=st.floats(0, 20), b=st.floats(0, 20))
def test_miss_monotone(seed, a, b):
    pred, gt = _random_case(seed)
    lo, hi = sorted((a, b))
    assert miss(pred, gt, hi) <= miss(pred, gt, lo)


@given(seed=st.integers(0, 2**32 - 1), radius=st.floats(0.1, 10))
def test_collision_symmetric(seed, radius):
    rng = np.random.default_rng(seed)
    a, b = rng.normal(0, 5, size=(2, 15, 2))
    assert collision(a, b, radius) == collision(b, a, radius)
