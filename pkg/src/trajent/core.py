"""Geometric and prediction value types.

Trajectories are stored as read-only ``(T, 2)`` float64 arrays. An
:class:`MtpResult` keeps its modes as separate arrays so that malformed
inputs (ragged horizons, bad confidences) can still be represented and
reported by :func:`validate_mtp` instead of failing at construction.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np

from .errors import ContractViolation

AgentId = int

CONFIDENCE_SUM_TOL = 1e-6


class Point2(NamedTuple):
    x: float
    y: float

    def is_finite(self) -> bool:
        return math.isfinite(self.x) and math.isfinite(self.y)


def _frozen_points(points) -> np.ndarray:
    arr = np.array(points, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        arr = arr.reshape(0, 2)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ContractViolation(f"trajectory points must have shape (T, 2), got {arr.shape}")
    arr.setflags(write=False)
    return arr


class ModeTrajectory:
    """One predicted future path with its confidence."""

    __slots__ = ("points", "confidence")

    def __init__(self, points, confidence: float = 1.0):
        object.__setattr__(self, "points", _frozen_points(points))
        object.__setattr__(self, "confidence", float(confidence))

    def __setattr__(self, name, value):
        raise AttributeError("ModeTrajectory is immutable")

    def __reduce__(self):
        return (ModeTrajectory, (np.array(self.points), self.confidence))

    def __len__(self) -> int:
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, ModeTrajectory):
            return NotImplemented
        return self.confidence == other.confidence and np.array_equal(self.points, other.points)

    def __hash__(self):
        return hash((self.confidence, self.points.tobytes()))

    def __repr__(self):
        return f"ModeTrajectory(T={len(self)}, confidence={self.confidence!r})"

    def point(self, t: int) -> Point2:
        """Point at 1-based timestep ``t``."""
        x, y = self.points[t - 1]
        return Point2(float(x), float(y))


@dataclass(frozen=True, eq=False)
class MtpResult:
    """M confidence-weighted future trajectories of one agent.

    ``origin`` is the agent position at t = 0, i.e. the predecessor of the
    first predicted point.
    """

    origin: Point2
    modes: tuple[ModeTrajectory, ...]
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "origin", Point2(float(self.origin[0]), float(self.origin[1])))
        object.__setattr__(self, "modes", tuple(self.modes))
        object.__setattr__(self, "dt", float(self.dt))

    @classmethod
    def from_arrays(cls, origin, trajectories, confidences, dt: float) -> "MtpResult":
        """Build from an ``(M, T, 2)`` array and an ``(M,)`` confidence vector."""
        trajectories = np.asarray(trajectories, dtype=np.float64)
        modes = tuple(ModeTrajectory(tr, c) for tr, c in zip(trajectories, np.asarray(confidences, dtype=np.float64)))
        return cls(Point2(*origin), modes, dt)

    @property
    def num_modes(self) -> int:
        return len(self.modes)

    @property
    def horizon(self) -> int:
        return len(self.modes[0]) if self.modes else 0

    @cached_property
    def trajectories(self) -> np.ndarray:
        """Stacked ``(M, T, 2)`` read-only array; requires equal horizons."""
        lengths = {len(m) for m in self.modes}
        if len(lengths) != 1:
            raise ContractViolation("ragged horizon: modes have different lengths")
        arr = np.stack([m.points for m in self.modes])
        arr.setflags(write=False)
        return arr

    @cached_property
    def confidences(self) -> np.ndarray:
        arr = np.array([m.confidence for m in self.modes], dtype=np.float64)
        arr.setflags(write=False)
        return arr

    @cached_property
    def origin_array(self) -> np.ndarray:
        arr = np.array(self.origin, dtype=np.float64)
        arr.setflags(write=False)
        return arr

    def best_mode(self) -> ModeTrajectory:
        """Highest-confidence mode; ties go to the lowest index."""
        return self.modes[int(np.argmax(self.confidences))]

    def __eq__(self, other):
        if not isinstance(other, MtpResult):
            return NotImplemented
        return self.origin == other.origin and self.dt == other.dt and self.modes == other.modes

    def __hash__(self):
        return hash((self.origin, self.dt, self.modes))


def validate_mtp(result: MtpResult) -> list[str]:
    """Return every violated MtpResult invariant; an empty list means valid."""
    violations = []
    if not result.origin.is_finite():
        violations.append("non-finite origin")
    if not (math.isfinite(result.dt) and result.dt > 0):
        violations.append("non-positive dt")
    if not result.modes:
        violations.append("no modes")
        return violations
    lengths = [len(m) for m in result.modes]
    if min(lengths) < 1:
        violations.append("empty trajectory")
    if len(set(lengths)) > 1:
        violations.append("ragged horizon")
    if any(not np.all(np.isfinite(m.points)) for m in result.modes):
        violations.append("non-finite point")
    confs = [m.confidence for m in result.modes]
    if any(not (math.isfinite(c) and 0.0 < c <= 1.0) for c in confs):
        violations.append("confidence out of (0, 1]")
    if not abs(math.fsum(confs) - 1.0) <= CONFIDENCE_SUM_TOL:
        violations.append("confidence sum")
    return violations


def require_valid(result: MtpResult, *, agent=None, level=None) -> None:
    violations = validate_mtp(result)
    if violations:
        raise ContractViolation(
            "invalid MtpResult: " + ", ".join(violations), agent=agent, level=level, violations=violations
        )


def displacement(traj: ModeTrajectory, origin: Point2, t: int) -> float:
    """Squared step length ``||p^t - p^(t-1)||^2`` at 1-based step ``t``.

    For ``t == 1`` the predecessor is ``origin``.
    """
    if not 1 <= t <= len(traj):
        raise IndexError(f"timestep {t} outside 1..{len(traj)}")
    px, py = traj.points[t - 1]
    if t == 1:
        qx, qy = origin
    else:
        qx, qy = traj.points[t - 2]
    dx = px - qx
    dy = py - qy
    return float(dx * dx + dy * dy)
