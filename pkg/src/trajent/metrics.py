"""Displacement and safety metrics against single-mode ground truth."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ModeTrajectory, MtpResult
from .errors import ContractViolation

DEFAULT_MISS_THRESHOLD = 2.0
DEFAULT_COLLISION_RADIUS = 3.0


@dataclass(frozen=True)
class EvalMetrics:
    min_ade: float
    min_fde: float
    miss: bool
    collision: bool


def _errors(pred: MtpResult, gt: ModeTrajectory) -> np.ndarray:
    """Per-mode, per-step Euclidean error, shape ``(M, T)``."""
    if pred.horizon != len(gt):
        raise ContractViolation(f"prediction horizon {pred.horizon} != ground-truth length {len(gt)}")
    diff = pred.trajectories - gt.points[None]
    return np.hypot(diff[..., 0], diff[..., 1])


def min_ade(pred: MtpResult, gt: ModeTrajectory) -> float:
    return float(_errors(pred, gt).mean(axis=1).min())


def min_fde(pred: MtpResult, gt: ModeTrajectory) -> float:
    return float(_errors(pred, gt)[:, -1].min())


def miss(pred: MtpResult, gt: ModeTrajectory, threshold: float = DEFAULT_MISS_THRESHOLD) -> bool:
    """Best final displacement strictly above ``threshold``."""
    return min_fde(pred, gt) > threshold


def collision(traj_a: ModeTrajectory, traj_b: ModeTrajectory, radius: float = DEFAULT_COLLISION_RADIUS) -> bool:
    """Any same-step pair of centre points closer than ``radius``."""
    a = traj_a.points if isinstance(traj_a, ModeTrajectory) else np.asarray(traj_a, dtype=np.float64)
    b = traj_b.points if isinstance(traj_b, ModeTrajectory) else np.asarray(traj_b, dtype=np.float64)
    if a.shape != b.shape:
        raise ContractViolation(f"trajectory lengths differ: {len(a)} vs {len(b)}")
    return bool(np.any(np.hypot(a[:, 0] - b[:, 0], a[:, 1] - b[:, 1]) < radius))


def ego_plan(pred: MtpResult) -> ModeTrajectory:
    """Plan of an agent: its highest-confidence mode."""
    return pred.best_mode()


def evaluate(pred: MtpResult, gt: ModeTrajectory, others=(), miss_threshold: float = DEFAULT_MISS_THRESHOLD,
             radius: float = DEFAULT_COLLISION_RADIUS) -> EvalMetrics:
    """All metrics for one agent; ``others`` are the other agents' predictions."""
    errors = _errors(pred, gt)
    plan = ego_plan(pred)
    return EvalMetrics(
        min_ade=float(errors.mean(axis=1).min()),
        min_fde=float(errors[:, -1].min()),
        miss=bool(errors[:, -1].min() > miss_threshold),
        collision=any(collision(plan, ego_plan(o), radius) for o in others),
    )
