"""Compare the numba and numpy entropy kernels.

    python3 benchmarks/bench_entropy.py [--repeat N]

Each case times the raw kernel on a batch of random predictions. The numba
kernel is compiled once before timing.
"""
import argparse
import time

import numpy as np

from trajent import _kernels

CASES = [(6, 20), (6, 80), (16, 80), (64, 80)]  # (modes, horizon)


def _batch(rng, modes, horizon, size=200):
    out = []
    for _ in range(size):
        traj = np.cumsum(rng.normal(0.5, 1.0, size=(modes, horizon, 2)), axis=1)
        out.append((traj, rng.dirichlet(np.ones(modes)), np.zeros(2)))
    return out


def _time(fn, batch, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        for traj, conf, origin in batch:
            fn(traj, conf, origin, _kernels.UNIT_STEP_SQUARED, 1e-9)
        best = min(best, time.perf_counter() - start)
    return best / len(batch)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    if not _kernels.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    warm = _batch(rng, 2, 2, size=1)[0]
    _kernels.entropy_numba(*warm, _kernels.UNIT_STEP_SQUARED, 1e-9)

    print(f"{'modes':>5} {'horizon':>7} {'numpy us':>10} {'numba us':>10} {'speedup':>8} {'max rel diff':>13}")
    for modes, horizon in CASES:
        batch = _batch(rng, modes, horizon)
        t_np = _time(_kernels.entropy_numpy, batch, args.repeat)
        t_nb = _time(_kernels.entropy_numba, batch, args.repeat)
        diff = max(
            abs(_kernels.entropy_numpy(*b, 0, 1e-9) - _kernels.entropy_numba(*b, 0, 1e-9))
            / max(_kernels.entropy_numpy(*b, 0, 1e-9), 1e-300)
            for b in batch
        )
        print(f"{modes:5d} {horizon:7d} {1e6 * t_np:10.1f} {1e6 * t_nb:10.1f} {t_np / t_nb:8.1f} {diff:13.2e}")


if __name__ == "__main__":
    main()
