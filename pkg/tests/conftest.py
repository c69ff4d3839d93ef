import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from trajent.core import ModeTrajectory, MtpResult, Point2

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def make_mtp(origin, modes, dt=0.1):
    """``modes`` is a list of ``(points, confidence)``."""
    return MtpResult(Point2(*origin), tuple(ModeTrajectory(p, c) for p, c in modes), dt)


def random_mtp(rng, max_modes=8, max_horizon=50, scale=20.0):
    m = int(rng.integers(1, max_modes + 1))
    t = int(rng.integers(1, max_horizon + 1))
    origin = rng.uniform(-scale, scale, size=2)
    steps = rng.normal(0.0, 1.0, size=(m, t, 2)) + rng.uniform(-2, 2, size=(1, 1, 2))
    traj = origin + np.cumsum(steps, axis=1)
    conf = rng.dirichlet(np.ones(m))
    return MtpResult.from_arrays(origin, traj, conf, 0.1)


@pytest.fixture
def example_a():
    return make_mtp((0, 0), [([(1, 0)], 0.5), ([(0, 1)], 0.5)])


@pytest.fixture
def example_b():
    return make_mtp((0, 0), [([(1, 0), (2, 0)], 0.5), ([(0, 1), (0, 2)], 0.5)])


def fan_mtp(heading, spread, conf, speed=8.0, horizon=20, dt=0.25, origin=(0.0, 0.0)):
    """Constant-speed modes at headings evenly spaced over ``spread`` radians."""
    m = len(conf)
    offsets = np.linspace(-spread / 2, spread / 2, m) if m > 1 else np.zeros(1)
    t = np.arange(1, horizon + 1) * speed * dt
    traj = np.stack([np.outer(t, [np.cos(heading + o), np.sin(heading + o)]) for o in offsets])
    return MtpResult.from_arrays(origin, np.asarray(origin) + traj, conf, dt)


def fan_pair_by_spread(seed):
    """Same confidences, a wide and a narrow fan."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 7))
    conf = rng.dirichlet(np.ones(m))
    heading = rng.uniform(-np.pi, np.pi)
    spread = rng.uniform(0.5, 2.0)
    speed = rng.uniform(3.0, 15.0)
    return fan_mtp(heading, spread, conf, speed), fan_mtp(heading, 0.1 * spread, conf, speed)


def fan_pair_by_confidence(seed):
    """Same geometry, uniform confidences and a 0.9-dominant mode."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 7))
    heading = rng.uniform(-np.pi, np.pi)
    spread = rng.uniform(0.3, 2.0)
    speed = rng.uniform(3.0, 15.0)
    dominant = np.full(m, 0.1 / (m - 1))
    dominant[rng.integers(m)] = 0.9
    return fan_mtp(heading, spread, np.full(m, 1.0 / m), speed), fan_mtp(heading, spread, dominant, speed)
