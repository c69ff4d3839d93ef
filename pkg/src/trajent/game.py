"""Level-k game loop with an entropy gate that freezes stable agents.

Level 0 runs the policy's ``level0`` for every agent. Before each level
``k >= 1`` the gate computes the entropy of every still-active agent's
level-(k-1) result and freezes the agent when that entropy is strictly below
``thresholds[k-1]``. Frozen results are passed unchanged to all later levels
and remain visible to the other agents; only active agents are refined.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from types import MappingProxyType
from typing import Mapping, Optional, Protocol

from .core import AgentId, MtpResult, require_valid
from .entropy import DEFAULT_CONFIG, EntropyConfig, trajectory_entropy
from .errors import ConfigurationError, ContractViolation


class Policy(Protocol):
    def level0(self, scene, agent: AgentId) -> MtpResult: ...

    def refine(self, scene, agent: AgentId, previous: Mapping[AgentId, MtpResult], level: int) -> MtpResult: ...


@dataclass(frozen=True)
class GateConfig:
    thresholds: tuple
    levels: int

    def __post_init__(self):
        object.__setattr__(self, "thresholds", tuple(float(t) for t in self.thresholds))
        if self.levels < 1:
            raise ConfigurationError("a game needs at least one level")
        if len(self.thresholds) != self.levels - 1:
            raise ConfigurationError(
                f"{self.levels} levels need {self.levels - 1} thresholds, got {len(self.thresholds)}"
            )
        if any(math.isnan(t) for t in self.thresholds):
            raise ConfigurationError("thresholds must not be NaN")
        if any(b > a for a, b in zip(self.thresholds, self.thresholds[1:])):
            warnings.warn("gate thresholds increase with level; a non-increasing schedule is recommended",
                          stacklevel=2)

    @classmethod
    def disabled(cls, levels: int) -> "GateConfig":
        return cls((-math.inf,) * (levels - 1), levels)

    @property
    def is_disabled(self) -> bool:
        return all(t == -math.inf for t in self.thresholds)


@dataclass(frozen=True)
class AgentGameState:
    agent: AgentId
    active: bool
    current: MtpResult
    frozen_at_level: Optional[int] = None
    entropy: Optional[float] = None

    def __post_init__(self):
        if self.active != (self.frozen_at_level is None):
            raise ContractViolation("frozen_at_level must be set exactly when the agent is inactive", agent=self.agent)


@dataclass(frozen=True)
class LevelRecord:
    mtp: MtpResult
    entropy: float
    active_before_level: bool


@dataclass(frozen=True)
class GateDecision:
    level: int
    agent: AgentId
    entropy: float
    threshold: float
    frozen: bool


@dataclass(frozen=True)
class GameTrace:
    levels: tuple  # one read-only AgentId -> LevelRecord mapping per level
    policy_eval_count: int
    decisions: tuple

    def __post_init__(self):
        object.__setattr__(self, "levels", tuple(MappingProxyType(dict(lvl)) for lvl in self.levels))
        object.__setattr__(self, "decisions", tuple(self.decisions))

    def __reduce__(self):
        return (GameTrace, (tuple(dict(lvl) for lvl in self.levels), self.policy_eval_count, self.decisions))

    @property
    def num_levels(self) -> int:
        return len(self.levels)

    def final_results(self) -> dict:
        return {a: rec.mtp for a, rec in self.levels[-1].items()}

    def entropies(self, level: int) -> dict:
        return {a: rec.entropy for a, rec in self.levels[level].items()}

    def evals_at(self, level: int) -> int:
        return sum(rec.active_before_level for rec in self.levels[level].values())

    def frozen_at(self) -> dict:
        """Agent -> first level whose decoder was skipped for it."""
        out = {}
        for d in self.decisions:
            if d.frozen:
                out[d.agent] = d.level
        return out

    def same_outcome(self, other: "GameTrace") -> bool:
        return self.levels == other.levels and self.policy_eval_count == other.policy_eval_count


def gate_step(states: Mapping[AgentId, AgentGameState], threshold: float, entropy_config: EntropyConfig = DEFAULT_CONFIG,
              level: int = 1, entropies: Optional[Mapping[AgentId, float]] = None):
    """Freeze every active agent whose entropy is strictly below ``threshold``.

    ``entropies`` may carry already-computed values for the agents' current
    results. Returns ``(new_states, newly_frozen, decisions)``.
    """
    if math.isnan(threshold):
        raise ContractViolation("gate threshold must not be NaN", level=level)
    new_states, frozen, decisions = {}, set(), []
    for agent, state in states.items():
        if not state.active:
            new_states[agent] = state
            continue
        if entropies is not None and agent in entropies:
            e = float(entropies[agent])
        else:
            require_valid(state.current, agent=agent, level=level - 1)
            e = float(trajectory_entropy(state.current, entropy_config))
        freeze = e < threshold
        decisions.append(GateDecision(level, agent, e, threshold, freeze))
        if freeze:
            frozen.add(agent)
            new_states[agent] = replace(state, active=False, frozen_at_level=level, entropy=e)
        else:
            new_states[agent] = replace(state, entropy=e)
    return new_states, frozen, decisions


def _checked(result, agent, level):
    if not isinstance(result, MtpResult):
        raise ContractViolation(f"policy returned {type(result).__name__}, expected MtpResult", agent=agent, level=level)
    require_valid(result, agent=agent, level=level)
    return result


def run_level_k_game(scene, policy: Policy, gate: GateConfig, entropy_config: EntropyConfig = DEFAULT_CONFIG) -> GameTrace:
    agents = scene.agent_ids
    if not agents:
        raise ContractViolation("scene has no agents")
    evals = 0
    states = {}
    for a in agents:
        result = _checked(policy.level0(scene, a), a, 0)
        evals += 1
        states[a] = AgentGameState(a, True, result, entropy=float(trajectory_entropy(result, entropy_config)))
    levels = [{a: LevelRecord(s.current, s.entropy, True) for a, s in states.items()}]
    decisions = []

    for k in range(1, gate.levels):
        cached = {a: s.entropy for a, s in states.items()}
        states, _, step_decisions = gate_step(states, gate.thresholds[k - 1], entropy_config, k, cached)
        decisions.extend(step_decisions)
        snapshot = MappingProxyType({a: s.current for a, s in states.items()})
        updated = {}
        for a in agents:
            state = states[a]
            if not state.active:
                updated[a] = state
                continue
            result = _checked(policy.refine(scene, a, snapshot, k), a, k)
            evals += 1
            updated[a] = replace(state, current=result, entropy=float(trajectory_entropy(result, entropy_config)))
        levels.append({a: LevelRecord(updated[a].current, updated[a].entropy, states[a].active) for a in agents})
        states = updated

    return GameTrace(tuple(levels), evals, tuple(decisions))


def run_ungated(scene, policy: Policy, levels: int, entropy_config: EntropyConfig = DEFAULT_CONFIG) -> GameTrace:
    return run_level_k_game(scene, policy, GateConfig.disabled(levels), entropy_config)
