"""Axis-aligned geometry kernels shared by the ray tracer.

All coordinates are metres, z up, ground plane at z = 0. Buildings are
axis-aligned boxes. Blockage uses open-set semantics: a segment that only
touches a box face (grazing incidence) counts as unblocked, which keeps
tie-handling deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Tolerances: _EPS is a geometric length (m), _TOL a parametric overlap.
_EPS = 1e-9
_TOL = 1e-9


@dataclass(frozen=True)
class Boxes:
    """Structure-of-arrays AABB set (one row per building)."""

    lo: np.ndarray  # (n, 3) min corner
    hi: np.ndarray  # (n, 3) max corner

    @property
    def n(self) -> int:
        return self.lo.shape[0]


def boxes_from_buildings(buildings) -> Boxes:
    """Pack Building records into a Boxes struct for vectorized tests."""
    n = len(buildings)
    lo = np.empty((n, 3))
    hi = np.empty((n, 3))
    for i, b in enumerate(buildings):
        half = 0.5 * b.width
        lo[i] = (b.center[0] - half, b.center[1] - half, 0.0)
        hi[i] = (b.center[0] + half, b.center[1] + half, b.height)
    return Boxes(lo=lo, hi=hi)


def _slab_intervals(p0, d, lo, hi):
    """Entry/exit parameters of lines p0 + t*d through slabs [lo, hi].

    Parallel rays on or outside a slab boundary yield an empty interval
    (open-set semantics). Shapes broadcast; returns (tlo, thi).
    """
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - p0) / d
        t2 = (hi - p0) / d
    tlo = np.minimum(t1, t2)
    thi = np.maximum(t1, t2)
    parallel = np.abs(d) < _EPS
    if np.any(parallel):
        inside = (p0 > lo + _EPS) & (p0 < hi - _EPS)
        tlo = np.where(parallel, np.where(inside, -np.inf, np.inf), tlo)
        thi = np.where(parallel, np.where(inside, np.inf, -np.inf), thi)
    return tlo, thi


def segment_box_intervals(p0: np.ndarray, p1: np.ndarray, boxes: Boxes):
    """Clipped (t_enter, t_exit) of segments against every box.

    p0, p1: (..., 3). Returns (tmin, tmax) with shape (..., n_boxes);
    a box intersects the open segment interior iff tmax - tmin > tol
    after clipping to (0, 1).
    """
    p0 = np.asarray(p0, dtype=float)[..., None, :]
    p1 = np.asarray(p1, dtype=float)[..., None, :]
    d = p1 - p0
    tlo, thi = _slab_intervals(p0, d, boxes.lo, boxes.hi)
    tmin = np.max(tlo, axis=-1)
    tmax = np.min(thi, axis=-1)
    tmin = np.maximum(tmin, 0.0)
    tmax = np.minimum(tmax, 1.0)
    return tmin, tmax


def segments_blocked(p0: np.ndarray, p1: np.ndarray, boxes: Boxes) -> np.ndarray:
    """True where the open segment p0->p1 passes through any box interior."""
    if boxes.n == 0:
        return np.zeros(np.asarray(p0).shape[:-1], dtype=bool)
    tmin, tmax = segment_box_intervals(p0, p1, boxes)
    return np.any(tmax - tmin > _TOL, axis=-1)


def first_blocker(p0: np.ndarray, p1: np.ndarray, boxes: Boxes):
    """(blocked, index of the box entered first) for a single segment."""
    if boxes.n == 0:
        return False, None
    tmin, tmax = segment_box_intervals(p0, p1, boxes)
    hit = tmax - tmin > _TOL
    if not np.any(hit):
        return False, None
    tentry = np.where(hit, tmin, np.inf)
    return True, int(np.argmin(tentry))


def blocking_intervals(p0: np.ndarray, p1: np.ndarray, boxes: Boxes):
    """Indices and (t_enter, t_exit) of boxes crossed, ordered along the segment."""
    if boxes.n == 0:
        return []
    tmin, tmax = segment_box_intervals(p0, p1, boxes)
    hit = np.nonzero(tmax - tmin > _TOL)[0]
    order = hit[np.argsort(tmin[hit], kind="stable")]
    return [(int(i), float(tmin[i]), float(tmax[i])) for i in order]


def mirror_across_plane(p: np.ndarray, axis, coord):
    """Mirror points across the plane {x_axis = coord}. Vectorized in both."""
    p = np.asarray(p, dtype=float)
    out = np.array(p, copy=True)
    out[..., axis] = 2.0 * np.asarray(coord) - p[..., axis]
    return out


def points_in_footprint(xy: np.ndarray, boxes: Boxes) -> np.ndarray:
    """True where 2D points fall strictly inside any building footprint."""
    if boxes.n == 0:
        return np.zeros(np.asarray(xy).shape[:-1], dtype=bool)
    xy = np.asarray(xy, dtype=float)[..., None, :]
    inside = np.all(
        (xy > boxes.lo[:, :2] + _EPS) & (xy < boxes.hi[:, :2] - _EPS), axis=-1
    )
    return np.any(inside, axis=-1)


def unit(v: np.ndarray) -> np.ndarray:
    """Normalize the last axis; zero vectors raise."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(n < _EPS):
        raise ValueError("cannot normalize zero-length vector")
    return v / n
