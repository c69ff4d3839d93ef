import os
import subprocess
import sys

import numpy as np
import pytest

from trajent import _kernels

from .conftest import random_mtp

VARIANTS = (_kernels.UNIT_STEP_SQUARED, _kernels.UNIT_STEP_LINEAR, _kernels.CUMULATIVE_AT_STEP,
            _kernels.FINAL_LENGTH)

needs_numba = pytest.mark.skipif(not _kernels.HAVE_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("variant", VARIANTS)
def test_backends_agree(variant):
    rng = np.random.default_rng(11)
    for _ in range(200):
        mtp = random_mtp(rng)
        args = (mtp.trajectories, mtp.confidences, mtp.origin_array, variant, 1e-9)
        a = _kernels.entropy_numpy(*args)
        b = float(_kernels.entropy_numba(*args))
        assert b == pytest.approx(a, rel=1e-12, abs=1e-300)


@needs_numba
def test_backends_agree_on_stationary_modes():
    traj = np.zeros((3, 4, 2))
    traj[1] += 1.0
    conf = np.full(3, 1 / 3)
    origin = np.zeros(2)
    for variant in VARIANTS:
        a = _kernels.entropy_numpy(traj, conf, origin, variant, 1e-9)
        b = float(_kernels.entropy_numba(traj, conf, origin, variant, 1e-9))
        assert b == pytest.approx(a, rel=1e-12)


def test_numpy_single_mode_is_zero():
    traj = np.cumsum(np.ones((1, 5, 2)), axis=1)
    assert _kernels.entropy_numpy(traj, np.ones(1), np.zeros(2), _kernels.UNIT_STEP_SQUARED, 1e-9) == 0.0


def test_unknown_variant_rejected():
    with pytest.raises(ValueError):
        _kernels.normalization_numpy(np.zeros((2, 3, 2)), np.full(2, 0.5), np.zeros(2), 99)


def test_env_flag_selects_numpy():
    code = (
        "from trajent import _kernels; from trajent.entropy import trajectory_entropy;"
        "from trajent.core import MtpResult;"
        "m = MtpResult.from_arrays((0, 0), [[[1, 0], [2, 0]], [[0, 1], [0, 2]]], [0.5, 0.5], 0.1);"
        "print(_kernels.backend_name(), repr(float(trajectory_entropy(m))))"
    )
    env = dict(os.environ, TRAJENT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    name, value = out.stdout.split()
    assert name == "numpy"
    assert float(value) == 2.5


def test_active_backend_reported():
    expected = "numba" if _kernels.HAVE_NUMBA and not _kernels._env_disabled() else "numpy"
    assert _kernels.backend_name() == expected
