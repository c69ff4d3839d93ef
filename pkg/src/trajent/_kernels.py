"""Hot entropy kernels: numba-compiled loops with a pure-numpy fallback.

Set ``TRAJENT_DISABLE_NUMBA=1`` to force the numpy path (also used when
numba is not importable). Both paths compute the same sums in a different
order, so results agree to rounding, not bitwise.
"""
import os

import numpy as np

UNIT_STEP_SQUARED = 0
UNIT_STEP_LINEAR = 1
CUMULATIVE_AT_STEP = 2
FINAL_LENGTH = 3


def _env_disabled() -> bool:
    return os.environ.get("TRAJENT_DISABLE_NUMBA", "").strip().lower() in {"1", "true", "yes", "on"}


try:
    import numba
except ImportError:  # pragma: no cover - exercised only without numba
    numba = None

HAVE_NUMBA = numba is not None
USE_NUMBA = HAVE_NUMBA and not _env_disabled()


def snr_per_step_numpy(trajectories, confidences):
    """Unordered-pair SNR sum at each step, shape ``(T,)``."""
    m = trajectories.shape[0]
    if m < 2:
        return np.zeros(trajectories.shape[1])
    iu, ju = np.triu_indices(m, 1)
    diff = trajectories[iu] - trajectories[ju]
    d2 = np.einsum("ptk,ptk->pt", diff, diff)
    w = confidences[iu] * confidences[ju]
    return np.einsum("pt,p->t", d2, w)


def normalization_numpy(trajectories, confidences, origin, variant):
    """Confidence-weighted normalisation factor at each step, shape ``(T,)``."""
    if variant == UNIT_STEP_SQUARED or variant == UNIT_STEP_LINEAR:
        prev = np.empty_like(trajectories)
        prev[:, 0] = origin
        prev[:, 1:] = trajectories[:, :-1]
        diff = trajectories - prev
        lengths = np.einsum("mtk,mtk->mt", diff, diff)
        if variant == UNIT_STEP_LINEAR:
            lengths = np.sqrt(lengths)
    elif variant == CUMULATIVE_AT_STEP:
        lengths = np.hypot(trajectories[..., 0] - origin[0], trajectories[..., 1] - origin[1])
    elif variant == FINAL_LENGTH:
        final = np.hypot(trajectories[:, -1, 0] - origin[0], trajectories[:, -1, 1] - origin[1])
        return np.full(trajectories.shape[1], float(confidences @ final))
    else:
        raise ValueError(f"unknown normalization variant {variant}")
    return confidences @ lengths


def entropy_numpy(trajectories, confidences, origin, variant, epsilon):
    snr = snr_per_step_numpy(trajectories, confidences)
    norm = normalization_numpy(trajectories, confidences, origin, variant)
    return float(np.sum(snr / np.maximum(norm, epsilon)))


if HAVE_NUMBA:

    @numba.njit(cache=True)
    def _step_norm(trajectories, confidences, origin, variant, t, final_norm):
        if variant == FINAL_LENGTH:
            return final_norm
        m = trajectories.shape[0]
        acc = 0.0
        for j in range(m):
            if variant == CUMULATIVE_AT_STEP or t == 0:
                qx = origin[0]
                qy = origin[1]
            else:
                qx = trajectories[j, t - 1, 0]
                qy = trajectories[j, t - 1, 1]
            dx = trajectories[j, t, 0] - qx
            dy = trajectories[j, t, 1] - qy
            sq = dx * dx + dy * dy
            if variant == UNIT_STEP_SQUARED:
                acc += confidences[j] * sq
            else:
                acc += confidences[j] * np.sqrt(sq)
        return acc

    @numba.njit(cache=True)
    def entropy_numba(trajectories, confidences, origin, variant, epsilon):
        m = trajectories.shape[0]
        horizon = trajectories.shape[1]
        final_norm = 0.0
        if variant == FINAL_LENGTH:
            for j in range(m):
                dx = trajectories[j, horizon - 1, 0] - origin[0]
                dy = trajectories[j, horizon - 1, 1] - origin[1]
                final_norm += confidences[j] * np.sqrt(dx * dx + dy * dy)
        total = 0.0
        for t in range(horizon):
            snr = 0.0
            for i in range(m):
                xi = trajectories[i, t, 0]
                yi = trajectories[i, t, 1]
                ci = confidences[i]
                for j in range(i + 1, m):
                    dx = xi - trajectories[j, t, 0]
                    dy = yi - trajectories[j, t, 1]
                    snr += (dx * dx + dy * dy) * ci * confidences[j]
            norm = _step_norm(trajectories, confidences, origin, variant, t, final_norm)
            if norm < epsilon:
                norm = epsilon
            total += snr / norm
        return total

else:  # pragma: no cover
    entropy_numba = None


def entropy_kernel(trajectories, confidences, origin, variant, epsilon):
    """Unordered-pair entropy of one stacked prediction via the active backend."""
    if USE_NUMBA:
        return float(entropy_numba(trajectories, confidences, origin, variant, epsilon))
    return entropy_numpy(trajectories, confidences, origin, variant, epsilon)


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"
