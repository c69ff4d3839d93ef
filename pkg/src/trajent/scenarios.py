"""Synthetic driving scenes, scenario suites, and their JSON file formats."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Optional

import numpy as np

from .core import AgentId, ModeTrajectory, MtpResult, Point2, validate_mtp
from .errors import ConfigurationError, SceneParseError, SceneSemanticError
from .geometry import Polyline

FORMAT_VERSION = 1
DEFAULT_HORIZON = 20
DEFAULT_DT = 0.25
DEFAULT_CONFLICT_RADIUS = 3.0
LANE_SPACING = 4.0
INTERSECTION_BOX = 6.0  # approach lanes stop this far before the conflict point

DIFFICULTIES = ("simple", "interactive", "hard")


@dataclass(frozen=True)
class AgentInit:
    id: AgentId
    position: Point2
    speed: float
    heading: float
    lane: str
    ground_truth: Optional[ModeTrajectory] = None

    def __post_init__(self):
        object.__setattr__(self, "position", Point2(float(self.position[0]), float(self.position[1])))


@dataclass(frozen=True)
class Scene:
    centerlines: dict
    agents: tuple
    horizon: int = DEFAULT_HORIZON
    dt: float = DEFAULT_DT
    conflict_radius: float = DEFAULT_CONFLICT_RADIUS

    def __post_init__(self):
        object.__setattr__(
            self,
            "centerlines",
            {str(k): tuple(Point2(float(x), float(y)) for x, y in v) for k, v in self.centerlines.items()},
        )
        object.__setattr__(self, "agents", tuple(self.agents))
        problems = scene_problems(self)
        if problems:
            raise SceneSemanticError("; ".join(problems))

    def __hash__(self):
        return id(self)

    @property
    def agent_ids(self) -> list[AgentId]:
        return [a.id for a in self.agents]

    def agent(self, agent_id: AgentId) -> AgentInit:
        return self._agents_by_id[agent_id]

    @cached_property
    def _agents_by_id(self):
        return {a.id: a for a in self.agents}

    @cached_property
    def _polylines(self):
        return {k: Polyline(v) for k, v in self.centerlines.items()}

    def polyline(self, lane: str) -> Polyline:
        return self._polylines[lane]


def scene_problems(scene: Scene) -> list[str]:
    problems = []
    if not scene.agents:
        problems.append("scene has no agents")
    if not (isinstance(scene.horizon, int) and scene.horizon >= 1):
        problems.append(f"horizon must be a positive integer, got {scene.horizon!r}")
    if not (math.isfinite(scene.dt) and scene.dt > 0):
        problems.append(f"dt must be positive, got {scene.dt}")
    if not (math.isfinite(scene.conflict_radius) and scene.conflict_radius > 0):
        problems.append(f"conflict_radius must be positive, got {scene.conflict_radius}")
    for lane, pts in scene.centerlines.items():
        if len(pts) < 2:
            problems.append(f"centerline {lane} has fewer than 2 points")
        elif not all(p.is_finite() for p in pts):
            problems.append(f"centerline {lane} has non-finite points")
    seen = set()
    for a in scene.agents:
        if a.id in seen:
            problems.append(f"duplicate agent id {a.id}")
        seen.add(a.id)
        if not (a.position.is_finite() and math.isfinite(a.speed) and math.isfinite(a.heading)):
            problems.append(f"agent {a.id} has non-finite kinematics")
        if not a.speed >= 0:
            problems.append(f"agent {a.id} has negative speed {a.speed}")
        if a.lane not in scene.centerlines:
            problems.append(f"agent {a.id} references unknown lane {a.lane!r}")
        gt = a.ground_truth
        if gt is not None:
            if len(gt) != scene.horizon:
                problems.append(f"agent {a.id} ground truth has {len(gt)} points, horizon is {scene.horizon}")
            if not np.all(np.isfinite(gt.points)):
                problems.append(f"agent {a.id} ground truth has non-finite points")
    return problems


@dataclass(frozen=True)
class NamedScene:
    name: str
    difficulty: str
    scene: Scene


@dataclass(frozen=True)
class ScenarioSuite:
    scenes: tuple
    seed: int = 0
    policy: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "scenes", tuple(self.scenes))
        names = [s.name for s in self.scenes]
        if len(set(names)) != len(names):
            raise ConfigurationError("scene names in a suite must be unique")
        for s in self.scenes:
            if s.difficulty not in DIFFICULTIES:
                raise ConfigurationError(f"unknown difficulty {s.difficulty!r} for scene {s.name}")

    def __len__(self):
        return len(self.scenes)

    def __iter__(self):
        return iter(self.scenes)


# --------------------------------------------------------------------- generators


def _rotation(angle):
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def _to_points(arr) -> tuple:
    return tuple(Point2(float(x), float(y)) for x, y in arr)


def gen_straight_road(n_agents: int, seed: int, T: int = DEFAULT_HORIZON, dt: float = DEFAULT_DT) -> Scene:
    """Parallel lanes, one agent per lane, free flow at constant speed.

    The whole scene is rotated by a seeded angle so that nothing depends on
    the road being axis-aligned.
    """
    if n_agents < 1:
        raise ConfigurationError("a straight-road scene needs at least one agent")
    rng = np.random.default_rng(seed)
    rot = _rotation(rng.uniform(-math.pi, math.pi))
    heading = math.atan2(rot[1, 0], rot[0, 0])
    steps = np.arange(1, T + 1) * dt
    centerlines, agents = {}, []
    for k in range(n_agents):
        y = LANE_SPACING * k
        x0 = rng.uniform(0.0, 20.0)
        speed = rng.uniform(6.0, 14.0)
        lane_end = x0 + 2.0 * speed * T * dt + 50.0
        lane = np.array([[-50.0, y], [lane_end, y]]) @ rot.T
        gt = np.column_stack([x0 + speed * steps, np.full(T, y)]) @ rot.T
        pos = np.array([x0, y]) @ rot.T
        lane_id = f"lane_{k}"
        centerlines[lane_id] = _to_points(lane)
        agents.append(AgentInit(k, Point2(*pos), float(speed), heading, lane_id, ModeTrajectory(gt, 1.0)))
    return Scene(centerlines, tuple(agents), T, dt)


def _smoothstep(x):
    x = np.clip(x, 0.0, 1.0)
    return x * x * (3.0 - 2.0 * x)


def _yield_profile(speed, natural_arrival, delay, times):
    # Arc length that slows smoothly so the conflict point is reached `delay` later.
    arrival = natural_arrival + delay
    return speed * (times - delay * _smoothstep(times / arrival))


def _min_separation(a, b):
    return float(np.min(np.hypot(a[:, 0] - b[:, 0], a[:, 1] - b[:, 1])))


def gen_intersection(
    n_agents: int,
    seed: int,
    T: int = DEFAULT_HORIZON,
    dt: float = DEFAULT_DT,
    time_gap: float = 2.0,
    radius: float = DEFAULT_CONFLICT_RADIUS,
) -> Scene:
    """2-4 agents on straight paths crossing at one conflict point (the origin).

    Agents 0 and 1 would reach the conflict point together; in the scripted
    ground truth agent 1 slows down and passes ``time_gap`` later. Later
    agents are scheduled behind them at their own constant speed.
    """
    if not 2 <= n_agents <= 4:
        raise ConfigurationError(f"intersection scenes support 2-4 agents, got {n_agents}")
    rng = np.random.default_rng(seed)
    base = rng.uniform(-math.pi, math.pi)
    times = np.arange(0, T + 1) * dt
    speeds = rng.uniform(6.0, 10.0, size=n_agents)
    first = rng.uniform(1.5, 2.5)
    natural = np.empty(n_agents)
    natural[0] = first
    natural[1] = first + rng.uniform(-0.1, 0.1)
    for k in range(2, n_agents):
        natural[k] = natural[k - 1] + time_gap + rng.uniform(0.0, 0.5) + (time_gap if k == 2 else 0.0)

    dirs = [np.array([math.cos(base + k * math.pi / n_agents), math.sin(base + k * math.pi / n_agents)])
            for k in range(n_agents)]
    delay = time_gap + rng.uniform(0.0, 0.3)

    def paths(delay, natural):
        out = []
        for k in range(n_agents):
            if k == 1:
                s = _yield_profile(speeds[k], natural[k], delay, times)
            else:
                s = speeds[k] * times
            out.append(np.outer(s - speeds[k] * natural[k], dirs[k]))
        return out

    # Push the yielder / later agents back until every pair keeps the radius.
    for _ in range(200):
        trajs = paths(delay, natural)
        clash = None
        for i in range(n_agents):
            for j in range(i + 1, n_agents):
                if _min_separation(trajs[i], trajs[j]) < radius:
                    clash = (i, j)
                    break
            if clash:
                break
        if clash is None:
            break
        if clash[1] == 1:
            delay += 0.1 * time_gap
        else:
            natural[clash[1]] += 0.1 * time_gap
    else:  # pragma: no cover - schedule always converges for the sampled ranges
        raise ConfigurationError("could not schedule a collision-free intersection")

    centerlines, agents = {}, []
    for k in range(n_agents):
        u = dirs[k]
        start_dist = speeds[k] * natural[k]
        back = start_dist + 30.0
        far = speeds[k] * times[-1] + 30.0
        centerlines[f"approach_{k}"] = _to_points([-back * u, -INTERSECTION_BOX * u])
        centerlines[f"through_{k}"] = _to_points([-back * u, far * u])
        heading = math.atan2(u[1], u[0])
        agents.append(
            AgentInit(k, Point2(*trajs[k][0]), float(speeds[k]), heading, f"approach_{k}",
                      ModeTrajectory(trajs[k][1:], 1.0))
        )
    return Scene(centerlines, tuple(agents), T, dt, radius)


def gen_mixed_suite(
    n_scenes: int,
    seed: int,
    straight_fraction: float = 0.7,
    T: int = DEFAULT_HORIZON,
    dt: float = DEFAULT_DT,
) -> ScenarioSuite:
    """Mixed-difficulty suite; ``round(straight_fraction * n)`` straight-road scenes."""
    if n_scenes < 1:
        raise ConfigurationError("suite needs at least one scene")
    if not 0.0 <= straight_fraction <= 1.0:
        raise ConfigurationError("straight_fraction must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    n_straight = int(round(straight_fraction * n_scenes))
    kinds = np.array(["straight"] * n_straight + ["intersection"] * (n_scenes - n_straight))
    kinds = kinds[rng.permutation(n_scenes)]
    scene_seeds = np.random.SeedSequence(seed).generate_state(n_scenes)
    scenes = []
    for i, (kind, s) in enumerate(zip(kinds, scene_seeds)):
        s = int(s)
        if kind == "straight":
            n = int(rng.integers(1, 5))
            scenes.append(NamedScene(f"straight-{i:03d}", "simple", gen_straight_road(n, s, T, dt)))
        else:
            n = int(rng.integers(2, 5))
            difficulty = "interactive" if n == 2 else "hard"
            scenes.append(NamedScene(f"intersection-{i:03d}", difficulty, gen_intersection(n, s, T, dt)))
    return ScenarioSuite(tuple(scenes), seed)


def gen_suite(kind: str, n_scenes: int, seed: int, T: int = DEFAULT_HORIZON, dt: float = DEFAULT_DT):
    fractions = {"mixed": 0.7, "straight": 1.0, "intersection": 0.0}
    if kind not in fractions:
        raise ConfigurationError(f"unknown suite kind {kind!r}; expected one of {sorted(fractions)}")
    return gen_mixed_suite(n_scenes, seed, fractions[kind], T, dt)


# ------------------------------------------------------------------------ file io


def _reject_constant(name):
    raise SceneParseError(f"non-finite number {name} is not allowed")


def read_json(path):
    """Parse a JSON file, rejecting NaN and Infinity literals."""
    text = Path(path).read_text()
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SceneParseError(f"{path}: invalid JSON: {exc}") from exc


def _field(obj, name, where=""):
    if not isinstance(obj, dict):
        raise SceneParseError(f"expected an object{where}, got {type(obj).__name__}")
    if name not in obj:
        raise SceneParseError(f"missing field {name}{where}")
    return obj[name]


def _number(value, name):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SceneParseError(f"field {name} must be a number, got {value!r}")
    return float(value)


def _integer(value, name):
    if isinstance(value, bool) or not isinstance(value, int):
        raise SceneParseError(f"field {name} must be an integer, got {value!r}")
    return value


def _xy(value, name):
    if not (isinstance(value, list) and len(value) == 2):
        raise SceneParseError(f"field {name} must be an [x, y] pair")
    return Point2(_number(value[0], name), _number(value[1], name))


def _xy_list(value, name):
    if not isinstance(value, list):
        raise SceneParseError(f"field {name} must be a list of [x, y] pairs")
    return [_xy(v, name) for v in value]


def _check_version(doc):
    version = _integer(_field(doc, "version"), "version")
    if version != FORMAT_VERSION:
        raise SceneParseError(f"unsupported version {version}")


def scene_to_dict(scene: Scene) -> dict:
    agents = []
    for a in scene.agents:
        entry = {
            "id": a.id,
            "position": [a.position.x, a.position.y],
            "speed": a.speed,
            "heading": a.heading,
            "lane": a.lane,
        }
        if a.ground_truth is not None:
            entry["ground_truth"] = a.ground_truth.points.tolist()
        agents.append(entry)
    doc = {
        "version": FORMAT_VERSION,
        "dt": scene.dt,
        "horizon": scene.horizon,
        "centerlines": [{"id": k, "points": [[p.x, p.y] for p in v]} for k, v in scene.centerlines.items()],
        "agents": agents,
    }
    if scene.conflict_radius != DEFAULT_CONFLICT_RADIUS:
        doc["conflict_radius"] = scene.conflict_radius
    return doc


def scene_from_dict(doc) -> Scene:
    _check_version(doc)
    dt = _number(_field(doc, "dt"), "dt")
    horizon = _integer(_field(doc, "horizon"), "horizon")
    radius = _number(doc.get("conflict_radius", DEFAULT_CONFLICT_RADIUS), "conflict_radius")
    raw_lines = _field(doc, "centerlines")
    if not isinstance(raw_lines, list):
        raise SceneParseError("field centerlines must be a list")
    centerlines = {}
    for i, line in enumerate(raw_lines):
        where = f" in centerlines[{i}]"
        lane_id = _field(line, "id", where)
        if not isinstance(lane_id, (str, int)) or isinstance(lane_id, bool):
            raise SceneParseError(f"field id{where} must be a string or integer")
        centerlines[str(lane_id)] = _xy_list(_field(line, "points", where), "points")
    raw_agents = _field(doc, "agents")
    if not isinstance(raw_agents, list):
        raise SceneParseError("field agents must be a list")
    agents = []
    for i, a in enumerate(raw_agents):
        where = f" in agents[{i}]"
        gt = a.get("ground_truth") if isinstance(a, dict) else None
        agents.append(
            AgentInit(
                id=_integer(_field(a, "id", where), "id"),
                position=_xy(_field(a, "position", where), "position"),
                speed=_number(_field(a, "speed", where), "speed"),
                heading=_number(_field(a, "heading", where), "heading"),
                lane=str(_field(a, "lane", where)),
                ground_truth=None if gt is None else ModeTrajectory(_xy_list(gt, "ground_truth"), 1.0),
            )
        )
    return Scene(centerlines, tuple(agents), horizon, dt, radius)


def save_scene(scene: Scene, path) -> None:
    Path(path).write_text(json.dumps(scene_to_dict(scene), indent=1) + "\n")


def load_scene(path) -> Scene:
    return scene_from_dict(read_json(path))


def suite_to_dict(suite: ScenarioSuite) -> dict:
    doc = {
        "version": FORMAT_VERSION,
        "seed": suite.seed,
        "scenes": [{"name": s.name, "difficulty": s.difficulty, "scene": scene_to_dict(s.scene)} for s in suite],
    }
    if suite.policy:
        doc["policy"] = dict(suite.policy)
    return doc


def suite_from_dict(doc) -> ScenarioSuite:
    _check_version(doc)
    raw = _field(doc, "scenes")
    if not isinstance(raw, list):
        raise SceneParseError("field scenes must be a list")
    scenes = []
    for i, entry in enumerate(raw):
        where = f" in scenes[{i}]"
        scenes.append(
            NamedScene(
                str(_field(entry, "name", where)),
                str(_field(entry, "difficulty", where)),
                scene_from_dict(_field(entry, "scene", where)),
            )
        )
    policy = doc.get("policy", {})
    if not isinstance(policy, dict):
        raise SceneParseError("field policy must be an object")
    return ScenarioSuite(tuple(scenes), int(doc.get("seed", 0)), policy)


def save_suite(suite: ScenarioSuite, path) -> None:
    Path(path).write_text(json.dumps(suite_to_dict(suite), indent=1) + "\n")


def load_suite(path) -> ScenarioSuite:
    return suite_from_dict(read_json(path))


def mtp_to_dict(results: dict, dt: float) -> dict:
    return {
        "version": FORMAT_VERSION,
        "dt": dt,
        "agents": [
            {
                "id": agent_id,
                "origin": [r.origin.x, r.origin.y],
                "modes": [{"confidence": m.confidence, "points": m.points.tolist()} for m in r.modes],
            }
            for agent_id, r in results.items()
        ],
    }


def load_external_mtp(path) -> dict:
    """Read third-party predictions; every result must pass validation."""
    doc = read_json(path)
    _check_version(doc)
    dt = _number(_field(doc, "dt"), "dt")
    raw = _field(doc, "agents")
    if not isinstance(raw, list):
        raise SceneParseError("field agents must be a list")
    results, problems = {}, []
    for i, a in enumerate(raw):
        where = f" in agents[{i}]"
        agent_id = _integer(_field(a, "id", where), "id")
        if agent_id in results:
            problems.append(f"agent {agent_id}: duplicate id")
            continue
        modes_raw = _field(a, "modes", where)
        if not isinstance(modes_raw, list):
            raise SceneParseError(f"field modes{where} must be a list")
        modes = []
        for j, m in enumerate(modes_raw):
            mwhere = f"{where}.modes[{j}]"
            modes.append(
                ModeTrajectory(
                    _xy_list(_field(m, "points", mwhere), "points"),
                    _number(_field(m, "confidence", mwhere), "confidence"),
                )
            )
        result = MtpResult(_xy(_field(a, "origin", where), "origin"), tuple(modes), dt)
        for v in validate_mtp(result):
            problems.append(f"agent {agent_id}: {v}")
        results[agent_id] = result
    if problems:
        raise SceneSemanticError("invalid predictions: " + "; ".join(problems))
    return results
