"""Trajectory Entropy: summed inter-mode SNR per step, normalised by expected travel.

For each step ``t`` the point set ``{p_j^t}`` contributes

    sum over pairs (i, j) of ||p_i^t - p_j^t||^2 * c_i * c_j

(squared distance as signal power over a noise variance of ``1 / (c_i c_j)``),
divided by a confidence-weighted expected length. The entropy is the sum of
those ratios over the horizon.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core import MtpResult, require_valid
from .errors import ConfigurationError, ContractViolation


class NormalizationVariant(enum.Enum):
    UNIT_STEP_SQUARED = "unit-step-squared"
    UNIT_STEP_LINEAR = "unit-step"
    CUMULATIVE_AT_STEP = "cumulative"
    FINAL_LENGTH = "final"

    @property
    def code(self) -> int:
        return _VARIANT_CODES[self]


_VARIANT_CODES = {
    NormalizationVariant.UNIT_STEP_SQUARED: _kernels.UNIT_STEP_SQUARED,
    NormalizationVariant.UNIT_STEP_LINEAR: _kernels.UNIT_STEP_LINEAR,
    NormalizationVariant.CUMULATIVE_AT_STEP: _kernels.CUMULATIVE_AT_STEP,
    NormalizationVariant.FINAL_LENGTH: _kernels.FINAL_LENGTH,
}


class PairConvention(enum.Enum):
    UNORDERED = "unordered"  # i < j
    ORDERED = "ordered"  # i != j, every pair counted twice

    @property
    def factor(self) -> float:
        return 2.0 if self is PairConvention.ORDERED else 1.0


@dataclass(frozen=True)
class EntropyConfig:
    variant: NormalizationVariant = NormalizationVariant.UNIT_STEP_SQUARED
    epsilon: float = 1e-9
    pair_convention: PairConvention = PairConvention.UNORDERED

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise ConfigurationError(f"epsilon must be a positive finite number, got {self.epsilon}")
        object.__setattr__(self, "variant", NormalizationVariant(self.variant))
        object.__setattr__(self, "pair_convention", PairConvention(self.pair_convention))


DEFAULT_CONFIG = EntropyConfig()


class TrajectoryEntropy(float):
    """Non-negative, finite entropy value (a ``float`` subclass)."""

    def __new__(cls, value):
        value = float(value)
        if not (math.isfinite(value) and value >= 0.0):
            raise ContractViolation(f"entropy must be finite and non-negative, got {value}")
        return super().__new__(cls, value)

    @property
    def value(self) -> float:
        return float(self)

    def __repr__(self):
        return f"TrajectoryEntropy({float(self)!r})"


def _check_point_set(points, confidences):
    pts = np.asarray(points, dtype=np.float64).reshape(-1, 2)
    conf = np.asarray(confidences, dtype=np.float64).reshape(-1)
    if pts.shape[0] != conf.shape[0]:
        raise ContractViolation(f"{pts.shape[0]} points but {conf.shape[0]} confidences")
    if pts.shape[0] < 1:
        raise ContractViolation("point set must contain at least one point")
    if np.any(~(conf > 0)):
        raise ContractViolation("confidences must be strictly positive")
    return pts, conf


def pairwise_snr(points, confidences, pair_convention=PairConvention.UNORDERED):
    """SNR ``||p_i - p_j||^2 * c_i * c_j`` for every pair under the given convention."""
    pts, conf = _check_point_set(points, confidences)
    ordered = PairConvention(pair_convention) is PairConvention.ORDERED
    out = []
    m = len(pts)
    for i in range(m):
        for j in range(m):
            if i == j or (not ordered and j < i):
                continue
            d = pts[i] - pts[j]
            out.append((i, j, float(d @ d) * conf[i] * conf[j]))
    return out


def point_set_entropy(points, confidences, pair_convention=PairConvention.UNORDERED) -> float:
    """Sum of pairwise SNRs of one step's point set."""
    pts, conf = _check_point_set(points, confidences)
    snr = _kernels.snr_per_step_numpy(pts[:, None, :], conf)[0]
    return float(snr) * PairConvention(pair_convention).factor


def normalization_factor(mtp: MtpResult, t: int, variant=NormalizationVariant.UNIT_STEP_SQUARED) -> float:
    """Confidence-weighted expected length at 1-based step ``t`` for ``variant``."""
    if not 1 <= t <= mtp.horizon:
        raise IndexError(f"timestep {t} outside 1..{mtp.horizon}")
    variant = NormalizationVariant(variant)
    norm = _kernels.normalization_numpy(mtp.trajectories, mtp.confidences, mtp.origin_array, variant.code)
    return float(norm[t - 1])


def _canonical_order(trajectories, confidences):
    # Sorting modes makes the summation order independent of mode order.
    flat = trajectories.reshape(trajectories.shape[0], -1)
    keys = [flat[:, k] for k in range(flat.shape[1] - 1, -1, -1)] + [confidences]
    return np.lexsort(keys)


def trajectory_entropy(mtp: MtpResult, config: EntropyConfig = DEFAULT_CONFIG) -> TrajectoryEntropy:
    """Trajectory Entropy of a validated prediction."""
    require_valid(mtp)
    traj = mtp.trajectories
    conf = mtp.confidences
    if traj.shape[0] < 2:
        return TrajectoryEntropy(0.0)
    order = _canonical_order(traj, conf)
    traj = np.ascontiguousarray(traj[order])
    conf = np.ascontiguousarray(conf[order])
    value = _kernels.entropy_kernel(traj, conf, mtp.origin_array, config.variant.code, config.epsilon)
    return TrajectoryEntropy(value * config.pair_convention.factor)


def trajectory_entropy_oracle(mtp: MtpResult, config: EntropyConfig = DEFAULT_CONFIG) -> TrajectoryEntropy:
    """Naive reference: explicit loops over steps and mode pairs, no vectorisation."""
    require_valid(mtp)
    modes = [[(float(x), float(y)) for x, y in m.points] for m in mtp.modes]
    conf = [m.confidence for m in mtp.modes]
    ox, oy = mtp.origin
    m_count = len(modes)
    horizon = len(modes[0])
    ordered = config.pair_convention is PairConvention.ORDERED
    variant = config.variant

    def length(j, t):
        px, py = modes[j][t]
        if variant is NormalizationVariant.FINAL_LENGTH:
            px, py = modes[j][horizon - 1]
            return math.sqrt((px - ox) ** 2 + (py - oy) ** 2)
        if variant is NormalizationVariant.CUMULATIVE_AT_STEP:
            return math.sqrt((px - ox) ** 2 + (py - oy) ** 2)
        qx, qy = (ox, oy) if t == 0 else modes[j][t - 1]
        sq = (px - qx) ** 2 + (py - qy) ** 2
        return sq if variant is NormalizationVariant.UNIT_STEP_SQUARED else math.sqrt(sq)

    total = 0.0
    for t in range(horizon):
        snr = 0.0
        for i in range(m_count):
            for j in range(m_count):
                if i == j or (not ordered and j < i):
                    continue
                xi, yi = modes[i][t]
                xj, yj = modes[j][t]
                signal = (xi - xj) ** 2 + (yi - yj) ** 2
                noise = 1.0 / (conf[i] * conf[j])
                snr += signal / noise
        norm = 0.0
        for j in range(m_count):
            norm += conf[j] * length(j, t)
        total += snr / max(norm, config.epsilon)
    return TrajectoryEntropy(total)
