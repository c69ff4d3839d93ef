"""Polyline helpers for lane centerlines."""
from __future__ import annotations

import numpy as np


class Polyline:
    """Piecewise-linear curve parameterised by arc length.

    Queries outside ``[0, length]`` extrapolate along the first or last
    segment, so a lane behaves like a straight ray past its ends.
    """

    def __init__(self, points):
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or len(pts) < 2:
            raise ValueError("polyline needs at least two 2D points")
        seg = np.diff(pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0):
            raise ValueError("polyline has repeated consecutive points")
        self.points = pts
        self._seg = seg
        self._seg_len = seg_len
        self._dirs = seg / seg_len[:, None]
        self._cum = np.concatenate([[0.0], np.cumsum(seg_len)])

    @property
    def length(self) -> float:
        return float(self._cum[-1])

    def _segment_index(self, s):
        idx = np.searchsorted(self._cum, s, side="right") - 1
        return np.clip(idx, 0, len(self._seg) - 1)

    def point_at(self, s):
        s = np.asarray(s, dtype=np.float64)
        idx = self._segment_index(s)
        local = s - self._cum[idx]
        return self.points[idx] + local[..., None] * self._dirs[idx]

    def direction_at(self, s):
        return self._dirs[self._segment_index(np.asarray(s, dtype=np.float64))]

    def project(self, points):
        """Arc length and signed lateral offset (left positive) of each point."""
        p = np.asarray(points, dtype=np.float64).reshape(-1, 2)
        rel = p[:, None, :] - self.points[None, :-1, :]
        along = np.einsum("nsk,sk->ns", rel, self._dirs)
        lo = np.zeros(len(self._seg))
        hi = self._seg_len.copy()
        lo[0] = -np.inf
        hi[-1] = np.inf
        along_c = np.clip(along, lo, hi)
        foot = self.points[None, :-1, :] + along_c[..., None] * self._dirs[None]
        dist = np.hypot(p[:, None, 0] - foot[..., 0], p[:, None, 1] - foot[..., 1])
        best = np.argmin(dist, axis=1)
        rows = np.arange(len(p))
        arc = self._cum[best] + along_c[rows, best]
        d = self._dirs[best]
        r = p - foot[rows, best]
        lateral = d[:, 0] * r[:, 1] - d[:, 1] * r[:, 0]
        return arc, lateral
