"""Suite-level experiments: gated vs. ungated runs, entropy profiles, threshold sweeps.

Every function returns plain rows/dicts; :mod:`trajent.cli` writes them out.
Scenes are processed independently (optionally in a process pool) and the
results are re-assembled in suite order, so output never depends on
completion order.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Optional, Sequence

import numpy as np

from .entropy import DEFAULT_CONFIG, EntropyConfig, trajectory_entropy
from .errors import ConfigurationError
from .game import GameTrace, GateConfig, run_level_k_game, run_ungated
from .metrics import DEFAULT_MISS_THRESHOLD, evaluate
from .policies import FanPolicy, FanPolicyParams
from .scenarios import ScenarioSuite

ROW_FIELDS = (
    "scene", "agent", "level", "entropy", "active", "min_ade", "min_fde", "miss", "collision",
    "eval_count_gated", "eval_count_ungated",
    "entropy_ungated", "min_ade_ungated", "min_fde_ungated", "miss_ungated", "collision_ungated",
)
PROFILE_FIELDS = ("level", "agents", "ungated_mean", "ungated_std", "gated_mean", "gated_std", "gated_active")
SWEEP_FIELDS = ("thresholds", "min_ade", "miss_rate", "eval_reduction", "frozen_first_gate", "min_ade_ungated")


def load_presets() -> dict:
    return json.loads(resources.files("trajent").joinpath("presets.json").read_text())


def preset_thresholds(name: str) -> tuple:
    presets = load_presets()["thresholds"]
    if name not in presets:
        raise ConfigurationError(f"unknown preset {name!r}; available: {', '.join(sorted(presets))}")
    return tuple(presets[name]["thresholds"])


def preset_grid(name: str) -> list:
    grids = load_presets()["grids"]
    if name not in grids:
        raise ConfigurationError(f"unknown grid {name!r}; available: {', '.join(sorted(grids))}")
    return [tuple(g) for g in grids[name]]


@dataclass(frozen=True)
class RunConfig:
    suite: ScenarioSuite
    levels: int = 3
    thresholds: Optional[tuple] = None  # None disables the gate
    entropy: EntropyConfig = DEFAULT_CONFIG
    policy: FanPolicyParams = field(default_factory=FanPolicyParams)
    seed: int = 0
    jobs: int = 1
    miss_threshold: float = DEFAULT_MISS_THRESHOLD

    def __post_init__(self):
        if self.levels < 1:
            raise ConfigurationError("levels must be at least 1")
        if self.thresholds is not None and len(self.thresholds) != self.levels - 1:
            raise ConfigurationError(
                f"--levels {self.levels} needs {self.levels - 1} thresholds, got {len(self.thresholds)}"
            )
        if self.jobs < 1:
            raise ConfigurationError("jobs must be at least 1")

    @property
    def gate(self) -> GateConfig:
        if self.thresholds is None:
            return GateConfig.disabled(self.levels)
        return GateConfig(tuple(self.thresholds), self.levels)


def _policy_for(config: RunConfig) -> FanPolicy:
    params = config.policy
    if params.seed != config.seed:
        params = replace(params, seed=config.seed)
    return FanPolicy(params)


def _play(args):
    scene, policy, gate, entropy_config, levels = args
    gated = run_level_k_game(scene, policy, gate, entropy_config)
    ungated = run_ungated(scene, policy, levels, entropy_config)
    return gated, ungated


def _map(fn, items, jobs):
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def play_suite(config: RunConfig, gate: Optional[GateConfig] = None):
    """(gated, ungated) trace pair for every scene, in suite order."""
    policy = _policy_for(config)
    gate = gate or config.gate
    work = [(ns.scene, policy, gate, config.entropy, config.levels) for ns in config.suite]
    return _map(_play, work, config.jobs)


def _level_metrics(scene, trace: GameTrace, level: int, miss_threshold: float):
    results = {a: rec.mtp for a, rec in trace.levels[level].items()}
    out = {}
    for a, pred in results.items():
        gt = scene.agent(a).ground_truth
        if gt is None:
            out[a] = None
            continue
        others = [r for b, r in results.items() if b != a]
        out[a] = evaluate(pred, gt, others, miss_threshold, scene.conflict_radius)
    return out


def run_rows(config: RunConfig, traces=None) -> list[dict]:
    """Per (scene, agent, level) rows comparing the gated and ungated games."""
    traces = traces if traces is not None else play_suite(config)
    rows = []
    for ns, (gated, ungated) in zip(config.suite, traces):
        mgs = [_level_metrics(ns.scene, gated, k, config.miss_threshold) for k in range(config.levels)]
        mus = [_level_metrics(ns.scene, ungated, k, config.miss_threshold) for k in range(config.levels)]
        for agent in ns.scene.agent_ids:
            for level in range(config.levels):
                mg, mu = mgs[level], mus[level]
                g = gated.levels[level][agent]
                u = ungated.levels[level][agent]
                row = {
                    "scene": ns.name,
                    "agent": agent,
                    "level": level,
                    "entropy": g.entropy,
                    "active": int(g.active_before_level),
                    "eval_count_gated": int(g.active_before_level),
                    "eval_count_ungated": int(u.active_before_level),
                    "entropy_ungated": u.entropy,
                }
                for suffix, m in (("", mg[agent]), ("_ungated", mu[agent])):
                    row["min_ade" + suffix] = None if m is None else m.min_ade
                    row["min_fde" + suffix] = None if m is None else m.min_fde
                    row["miss" + suffix] = None if m is None else int(m.miss)
                    row["collision" + suffix] = None if m is None else int(m.collision)
                rows.append(row)
    return rows


def _mean(values):
    values = [v for v in values if v is not None]
    return float(np.mean(values)) if values else None


def summarize(rows: Sequence[dict], levels: int) -> dict:
    """Aggregate counts and final-level accuracy; recomputable from the rows alone."""
    gated = sum(r["eval_count_gated"] for r in rows)
    ungated = sum(r["eval_count_ungated"] for r in rows)
    refine_g = sum(r["eval_count_gated"] for r in rows if r["level"] > 0)
    refine_u = sum(r["eval_count_ungated"] for r in rows if r["level"] > 0)
    final = [r for r in rows if r["level"] == levels - 1]
    ade_g = _mean(r["min_ade"] for r in final)
    ade_u = _mean(r["min_ade_ungated"] for r in final)
    return {
        "scenes": len({r["scene"] for r in rows}),
        "agents": len({(r["scene"], r["agent"]) for r in rows}),
        "levels": levels,
        "eval_count_gated": gated,
        "eval_count_ungated": ungated,
        "eval_reduction": 1.0 - gated / ungated if ungated else 0.0,
        "refinement_reduction": 1.0 - refine_g / refine_u if refine_u else 0.0,
        "min_ade_gated": ade_g,
        "min_ade_ungated": ade_u,
        "min_ade_change": (ade_g / ade_u - 1.0) if ade_g is not None and ade_u else None,
        "min_fde_gated": _mean(r["min_fde"] for r in final),
        "min_fde_ungated": _mean(r["min_fde_ungated"] for r in final),
        "miss_rate_gated": _mean(r["miss"] for r in final),
        "miss_rate_ungated": _mean(r["miss_ungated"] for r in final),
        "collision_rate_gated": _mean(r["collision"] for r in final),
        "collision_rate_ungated": _mean(r["collision_ungated"] for r in final),
    }


def entropy_profile(config: RunConfig, traces=None) -> list[dict]:
    """Mean/std entropy per level over all agents, gated and ungated."""
    traces = traces if traces is not None else play_suite(config)
    rows = []
    for level in range(config.levels):
        g = [rec.entropy for gated, _ in traces for rec in gated.levels[level].values()]
        u = [rec.entropy for _, ungated in traces for rec in ungated.levels[level].values()]
        active = sum(rec.active_before_level for gated, _ in traces for rec in gated.levels[level].values())
        rows.append({
            "level": level,
            "agents": len(u),
            "ungated_mean": float(np.mean(u)),
            "ungated_std": float(np.std(u)),
            "gated_mean": float(np.mean(g)),
            "gated_std": float(np.std(g)),
            "gated_active": active,
        })
    return rows


def sweep(config: RunConfig, grid: Sequence[Sequence[float]]) -> list[dict]:
    """One row per threshold schedule; scenes and policy identical across rows."""
    if not grid:
        raise ConfigurationError("threshold grid is empty")
    rows = []
    ungated_rows = None
    for schedule in grid:
        schedule = tuple(float(t) for t in schedule)
        cfg = RunConfig(config.suite, config.levels, schedule, config.entropy, config.policy, config.seed,
                        config.jobs, config.miss_threshold)
        traces = play_suite(cfg)
        run = run_rows(cfg, traces)
        summary = summarize(run, cfg.levels)
        frozen_first = sum(1 for r in run if r["level"] == 1 and not r["active"]) if cfg.levels > 1 else 0
        if ungated_rows is None:
            ungated_rows = summary["min_ade_ungated"]
        rows.append({
            "thresholds": ";".join(_fmt(t) for t in schedule),
            "min_ade": summary["min_ade_gated"],
            "miss_rate": summary["miss_rate_gated"],
            "eval_reduction": summary["eval_reduction"],
            "frozen_first_gate": frozen_first,
            "min_ade_ungated": ungated_rows,
        })
    return rows


@dataclass(frozen=True)
class AuditRow:
    agent: int
    entropy: float
    active: bool


def audit(results: dict, threshold: float, entropy_config: EntropyConfig = DEFAULT_CONFIG) -> list[AuditRow]:
    """Gate verdict for externally produced predictions."""
    out = []
    for agent in sorted(results):
        e = float(trajectory_entropy(results[agent], entropy_config))
        out.append(AuditRow(agent, e, not e < threshold))
    return out


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.9g}"


def format_row(row: dict, fields: Sequence[str]) -> list[str]:
    return [_fmt(row[f]) if not isinstance(row[f], str) else row[f] for f in fields]
