"""Analytical stand-in decoders for the level-k game.

``fan_level0`` rolls out a fan of constant-speed modes that are held toward
the agent's lane while it is on the lane and released once they pass the
lane end (an intersection). ``contraction_refine`` pulls modes toward their
confidence-weighted mean, delays modes that conflict with a higher-priority
agent, and sharpens the confidences.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, fields
from typing import Mapping, Optional

import numpy as np

from .core import AgentId, MtpResult, require_valid
from .entropy import trajectory_entropy
from .errors import ConfigurationError, ContractViolation


@dataclass(frozen=True)
class FanPolicyParams:
    mode_count: int = 6
    heading_offsets: tuple = (0.0, -0.3, 0.3)
    speed_scalings: tuple = (1.0, 0.85)
    confidence_temperature: float = 2.0
    contraction_rate: float = 0.5
    conflict_time_gap: float = 2.0
    lane_adherence: float = 0.9
    conflict_radius: Optional[float] = None  # None: use the scene's radius
    heading_jitter: float = 0.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "heading_offsets", tuple(float(x) for x in self.heading_offsets))
        object.__setattr__(self, "speed_scalings", tuple(float(x) for x in self.speed_scalings))
        if self.mode_count < 1:
            raise ConfigurationError("mode_count must be at least 1")
        if len(self.heading_offsets) * len(self.speed_scalings) < self.mode_count:
            raise ConfigurationError("heading_offsets x speed_scalings must provide at least mode_count modes")
        if any(abs(o) >= math.pi / 2 for o in self.heading_offsets):
            raise ConfigurationError("heading offsets must lie strictly within +-pi/2")
        if any(not s > 0 for s in self.speed_scalings):
            raise ConfigurationError("speed scalings must be positive")
        if not self.confidence_temperature > 0:
            raise ConfigurationError("confidence_temperature must be positive")
        # 1.0 is accepted as the no-contraction sentinel.
        if not 0.0 < self.contraction_rate <= 1.0:
            raise ConfigurationError("contraction_rate must lie in (0, 1]")
        if not self.conflict_time_gap >= 0:
            raise ConfigurationError("conflict_time_gap must be non-negative")
        if not 0.0 <= self.lane_adherence <= 1.0:
            raise ConfigurationError("lane_adherence must lie in [0, 1]")
        if self.conflict_radius is not None and not self.conflict_radius > 0:
            raise ConfigurationError("conflict_radius must be positive")
        if not self.heading_jitter >= 0:
            raise ConfigurationError("heading_jitter must be non-negative")

    @classmethod
    def from_dict(cls, d: Mapping) -> "FanPolicyParams":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigurationError(f"unknown policy parameters: {sorted(unknown)}")
        return cls(**d)


_MIN_CONFIDENCE = 1e-12


def _softmax(scores):
    z = scores - np.max(scores)
    w = np.exp(z)
    w /= w.sum()
    # Strong sharpening can underflow to exactly 0, which is not a valid confidence.
    w = np.maximum(w, _MIN_CONFIDENCE)
    return w / w.sum()


def _lane_deviation(scene, agent, trajectories):
    lane = scene.polyline(scene.agent(agent).lane)
    _, lat = lane.project(trajectories.reshape(-1, 2))
    return np.abs(lat).reshape(trajectories.shape[:2]).mean(axis=1)


def _confidences(scene, agent, trajectories, temperature):
    return _softmax(-_lane_deviation(scene, agent, trajectories) / temperature)


def fan_level0(scene, agent: AgentId, params: FanPolicyParams = FanPolicyParams()) -> MtpResult:
    init = scene.agent(agent)
    if init.lane not in scene.centerlines:
        raise ConfigurationError(f"agent {agent} has no centerline")
    lane = scene.polyline(init.lane)
    pos = np.array(init.position)
    arc0, lat0 = lane.project(pos)
    lat0 = float(lat0[0])
    steps = np.arange(1, scene.horizon + 1) * scene.dt
    combos = list(itertools.product(params.heading_offsets, params.speed_scalings))[: params.mode_count]
    rng = np.random.default_rng([params.seed, agent])
    jitter = rng.normal(0.0, params.heading_jitter, size=len(combos)) if params.heading_jitter > 0 else np.zeros(len(combos))

    beta = params.lane_adherence
    modes = np.empty((len(combos), scene.horizon, 2))
    for m, ((offset, scale), jit) in enumerate(zip(combos, jitter)):
        heading = init.heading + offset + jit
        travel = init.speed * scale * steps
        raw = pos + travel[:, None] * np.array([math.cos(heading), math.sin(heading)])
        arc, lat = lane.project(raw)
        d = lane.direction_at(arc)
        normal = np.column_stack([-d[:, 1], d[:, 0]])
        held = lane.point_at(arc) + normal * (lat0 + (1.0 - beta) * (lat - lat0))[:, None]
        on_lane = arc <= lane.length
        out = held.copy()
        if not on_lane.all():
            # Past the lane end the mode is free: keep the offset it had on exit.
            last = int(np.argmin(on_lane)) - 1
            anchor_held = held[last] if last >= 0 else pos
            anchor_raw = raw[last] if last >= 0 else pos
            free = ~on_lane
            out[free] = anchor_held + (raw[free] - anchor_raw)
        modes[m] = out

    conf = _confidences(scene, agent, modes, params.confidence_temperature)
    result = MtpResult.from_arrays(init.position, modes, conf, scene.dt)
    require_valid(result, agent=agent, level=0)
    return result


def _delayed(path_with_origin, shift, horizon):
    idx = np.clip(np.arange(1, horizon + 1) - shift, 0, None)
    return path_with_origin[idx]


def _first_conflict(mode, blockers, radius):
    for best in blockers:
        dist = np.hypot(mode[:, 0] - best[:, 0], mode[:, 1] - best[:, 1])
        hits = np.nonzero(dist < radius)[0]
        if hits.size:
            return int(hits[0]), best
    return None


def resolve_conflicts(mode, origin, blockers, radius, gap_steps):
    """Delay ``mode`` (wait at ``origin``) until it clears every blocker path.

    The initial delay puts the mode at the conflict point ``gap_steps`` after
    the blocker passes it; further one-step delays are added until no step
    is within ``radius``. Returns the new path and the applied shift.
    """
    horizon = mode.shape[0]
    found = _first_conflict(mode, blockers, radius)
    if found is None:
        return mode, 0
    t_c, best = found
    point = mode[t_c]
    t_pass = int(np.argmin(np.hypot(best[:, 0] - point[0], best[:, 1] - point[1])))
    shift = max(1, t_pass + gap_steps - t_c)
    full = np.vstack([origin[None, :], mode])
    while shift < horizon:
        cand = _delayed(full, shift, horizon)
        if _first_conflict(cand, blockers, radius) is None:
            return cand, shift
        shift += 1
    return _delayed(full, horizon, horizon), horizon


def contraction_refine(
    scene,
    agent: AgentId,
    previous: Mapping[AgentId, MtpResult],
    level: int,
    params: FanPolicyParams = FanPolicyParams(),
) -> MtpResult:
    """Level-``level`` refinement from the level-(level-1) snapshot ``previous``.

    ``previous`` must hold every agent of the scene, including ``agent``
    itself (its own modes are what gets contracted).
    """
    missing = [a for a in scene.agent_ids if a not in previous]
    if missing:
        raise ContractViolation(f"level-{level - 1} snapshot lacks agents {missing}", agent=agent, level=level)
    own = previous[agent]
    traj = np.array(own.trajectories)
    conf = np.array(own.confidences)
    origin = own.origin_array

    lam = params.contraction_rate
    mean = np.einsum("m,mtk->tk", conf, traj) / conf.sum()
    traj = mean + lam * (traj - mean)

    radius = params.conflict_radius or scene.conflict_radius
    gap_steps = int(math.ceil(params.conflict_time_gap / scene.dt - 1e-9))
    blockers = [previous[a].best_mode().points for a in scene.agent_ids if a < agent]
    if blockers:
        for m in range(traj.shape[0]):
            traj[m], _ = resolve_conflicts(traj[m], origin, blockers, radius, gap_steps)

    sharpened = _confidences(scene, agent, traj, params.confidence_temperature * lam**level)
    candidate = MtpResult.from_arrays(own.origin, traj, sharpened, scene.dt)
    kept = MtpResult.from_arrays(own.origin, traj, conf, scene.dt)
    # Sharpening is only accepted when it does not raise the entropy.
    result = candidate if trajectory_entropy(candidate) <= trajectory_entropy(kept) else kept
    require_valid(result, agent=agent, level=level)
    return result


class FanPolicy:
    """Policy object bundling :func:`fan_level0` and :func:`contraction_refine`."""

    def __init__(self, params: FanPolicyParams = FanPolicyParams()):
        self.params = params

    def level0(self, scene, agent):
        return fan_level0(scene, agent, self.params)

    def refine(self, scene, agent, previous, level):
        return contraction_refine(scene, agent, previous, level, self.params)

    def __repr__(self):
        return f"FanPolicy({self.params!r})"
