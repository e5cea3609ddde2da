"""Deterministic geometric ray tracer over axis-aligned city layouts.

Path families per link:
  * the direct path when unobstructed,
  * specular reflections off building walls and the ground, found by the
    image method (mirror-source enumeration with visibility validation),
  * single knife-edge diffraction over roof edges and around vertical
    corners when the direct path is blocked,
  * straight-line slab transmissions through blocking buildings.

Path geometry is frequency independent; amplitudes, phases and knife-edge
losses are resolved per carrier afterwards, so multi-band studies can
share one geometric trace per link.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.constants import speed_of_light
from scipy.special import fresnel

from .city import CityLayout
from .geometry import (
    Boxes,
    blocking_intervals,
    first_blocker,
    segments_blocked,
)
from .materials import (
    DEFAULT_SLAB_THICKNESS_M,
    GROUND_MATERIAL,
    get_material,
    reflection_coefficient,
    slab_transmission_coefficient,
)

_EPS = 1e-9

GROUND_ID = -1
_FACE_NORMALS = {0: (0, 1.0), 1: (0, -1.0), 2: (1, 1.0), 3: (1, -1.0)}


@dataclass(frozen=True)
class TraceConfig:
    """Ray tracing budget plus performance knobs.

    corridor_margin_m limits reflection / diffraction candidates to
    buildings near the tx-rx corridor; max_order3_buildings further caps
    the candidate set for reflection orders >= 3 (image enumeration grows
    exponentially with order). None disables a knob; blockage checks
    always use the full layout, so culling only narrows the search, never
    changes a surviving path.
    """

    max_reflections: int = 3
    max_diffractions: int = 1
    max_transmissions: int = 1
    max_paths: int = 25
    power_threshold_dbm: float = -250.0
    corridor_margin_m: float | None = None
    max_order3_buildings: int | None = None
    slab_thickness_m: float = DEFAULT_SLAB_THICKNESS_M

    def __post_init__(self):
        if min(self.max_reflections, self.max_diffractions, self.max_transmissions) < 0:
            raise ValueError("interaction budgets must be >= 0")
        if self.max_paths < 1:
            raise ValueError("max_paths must be >= 1")


@dataclass(frozen=True)
class Reflection:
    building: int  # GROUND_ID for the ground plane
    face: int      # 0:+x 1:-x 2:+y 3:-y walls, 4: horizontal plane
    material: str
    incidence_deg: float


@dataclass(frozen=True)
class Diffraction:
    building: int
    edge: int           # 0..3 roof edges, 4..7 vertical corners
    d1_m: float
    d2_m: float
    clearance_m: float  # offset of the edge point from the direct line


@dataclass(frozen=True)
class Transmission:
    building: int
    face: int
    material: str
    incidence_deg: float


@dataclass(frozen=True)
class GeometricPath:
    """Frequency-independent path skeleton."""

    vertices: tuple          # of (x, y, z)
    interactions: tuple
    length_m: float
    aod: tuple               # unit vector, departure direction at tx
    aoa: tuple               # unit vector, rx -> incoming wave source

    @property
    def n_reflections(self) -> int:
        return sum(isinstance(i, Reflection) for i in self.interactions)

    @property
    def n_diffractions(self) -> int:
        return sum(isinstance(i, Diffraction) for i in self.interactions)

    @property
    def n_transmissions(self) -> int:
        return sum(isinstance(i, Transmission) for i in self.interactions)


@dataclass(frozen=True)
class PropagationPath:
    """One multipath component resolved at a carrier."""

    vertices: tuple
    interactions: tuple
    length_m: float
    delay_s: float
    amplitude: float     # linear, relative to unit transmit amplitude
    phase_rad: float
    aod: tuple
    aoa: tuple
    power_dbm: float     # received power for 1 W transmitted, element to element

    @property
    def n_reflections(self) -> int:
        return sum(isinstance(i, Reflection) for i in self.interactions)

    @property
    def n_diffractions(self) -> int:
        return sum(isinstance(i, Diffraction) for i in self.interactions)

    @property
    def n_transmissions(self) -> int:
        return sum(isinstance(i, Transmission) for i in self.interactions)


@dataclass(frozen=True)
class LosResult:
    blocked: bool
    first_blocker: int | None


def line_of_sight(tx, rx, layout: CityLayout) -> LosResult:
    """Blockage of the open segment tx->rx; grazing contact is unblocked."""
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    if np.allclose(tx, rx):
        raise ValueError("tx and rx must be distinct points")
    blocked, idx = first_blocker(tx, rx, layout.boxes())
    return LosResult(blocked=blocked, first_blocker=idx)


# --------------------------------------------------------------------------
# knife-edge diffraction
# --------------------------------------------------------------------------

def knife_edge_loss_db(nu) -> float | np.ndarray:
    """Exact single knife-edge loss J(nu) in dB, clamped at 0 (no gain).

    J = -20 log10 |(1+j)/2 * integral_nu^inf exp(-j pi t^2 / 2) dt|;
    J(0) = 6.0206 dB, J -> 0 for nu -> -inf.
    """
    nu = np.asarray(nu, dtype=float)
    s, c = fresnel(nu)
    mag_sq = 0.5 * ((0.5 - c) ** 2 + (0.5 - s) ** 2)
    loss = -10.0 * np.log10(np.maximum(mag_sq, 1e-300))
    loss = np.maximum(loss, 0.0)
    return float(loss) if loss.ndim == 0 else loss


def fresnel_parameter(d1_m: float, d2_m: float, clearance_m: float, carrier_hz: float) -> float:
    lam = speed_of_light / carrier_hz
    return clearance_m * math.sqrt(2.0 * (d1_m + d2_m) / (lam * d1_m * d2_m))


def _edge_stationary_point(a, b, tx, rx):
    """Point on segment a-b minimizing |tx-p| + |p-rx| (unfolded-plane formula)."""
    a = np.asarray(a, dtype=float)
    e = np.asarray(b, dtype=float) - a
    elen = np.linalg.norm(e)
    if elen < _EPS:
        return None
    ehat = e / elen
    t_par = float(np.dot(tx - a, ehat))
    r_par = float(np.dot(rx - a, ehat))
    t_perp = float(np.linalg.norm(tx - a - t_par * ehat))
    r_perp = float(np.linalg.norm(rx - a - r_par * ehat))
    if t_perp + r_perp < _EPS:
        return None
    u = (t_par * r_perp + r_par * t_perp) / (t_perp + r_perp)
    u = min(max(u, 0.0), elen)
    return a + u * ehat


def diffraction_loss(edge_a, edge_b, tx, rx, carrier_hz: float) -> float:
    """Knife-edge loss (dB) of a straight edge between tx and rx.

    The knife extends downward from the edge: an edge above the direct
    ray obstructs it (positive Fresnel parameter), an edge below leaves
    it clear (loss -> 0).
    """
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    p = _edge_stationary_point(edge_a, edge_b, tx, rx)
    if p is None:
        raise ValueError("degenerate edge geometry")
    d_hat = rx - tx
    d_hat = d_hat / np.linalg.norm(d_hat)
    q = tx + float(np.dot(p - tx, d_hat)) * d_hat
    h = float(np.linalg.norm(p - q))
    if p[2] < q[2]:
        h = -h
    d1 = float(np.linalg.norm(p - tx))
    d2 = float(np.linalg.norm(rx - p))
    if d1 < _EPS or d2 < _EPS:
        raise ValueError("edge coincides with an endpoint")
    return knife_edge_loss_db(fresnel_parameter(d1, d2, h, carrier_hz))


# --------------------------------------------------------------------------
# wall surface table
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class _Surfaces:
    """Structure-of-arrays wall set plus the ground plane (last row)."""

    axis: np.ndarray    # plane normal axis, 0/1 walls, 2 ground
    coord: np.ndarray   # plane coordinate along axis
    sign: np.ndarray    # outward normal direction
    u_lo: np.ndarray    # bounds along the other horizontal axis
    u_hi: np.ndarray
    z_hi: np.ndarray    # vertical extent (0..z_hi); inf for ground
    bld: np.ndarray     # owning building, GROUND_ID for ground
    face: np.ndarray    # face id on the owner

    @property
    def n(self) -> int:
        return self.axis.shape[0]


def _build_surfaces(boxes: Boxes, bld_indices: np.ndarray) -> _Surfaces:
    m = len(bld_indices)
    n = 4 * m + 1
    axis = np.empty(n, dtype=np.int64)
    coord = np.empty(n)
    sign = np.empty(n)
    u_lo = np.empty(n)
    u_hi = np.empty(n)
    z_hi = np.empty(n)
    bld = np.empty(n, dtype=np.int64)
    face = np.empty(n, dtype=np.int64)
    lo = boxes.lo[bld_indices]
    hi = boxes.hi[bld_indices]
    specs = (
        (0, 0, hi[:, 0], 1.0, 1),  # +x wall, bounded in y
        (1, 0, lo[:, 0], -1.0, 1),
        (2, 1, hi[:, 1], 1.0, 0),
        (3, 1, lo[:, 1], -1.0, 0),
    )
    for f, ax, coords, sgn, u_ax in specs:
        sl = slice(f * m, (f + 1) * m)
        axis[sl] = ax
        coord[sl] = coords
        sign[sl] = sgn
        u_lo[sl] = lo[:, u_ax]
        u_hi[sl] = hi[:, u_ax]
        z_hi[sl] = hi[:, 2]
        bld[sl] = bld_indices
        face[sl] = f
    # ground plane
    axis[-1], coord[-1], sign[-1] = 2, 0.0, 1.0
    u_lo[-1], u_hi[-1], z_hi[-1] = -np.inf, np.inf, np.inf
    bld[-1], face[-1] = GROUND_ID, 4
    return _Surfaces(axis, coord, sign, u_lo, u_hi, z_hi, bld, face)


def _front_mask(surf: _Surfaces, point: np.ndarray) -> np.ndarray:
    return surf.sign * (point[surf.axis] - surf.coord) > _EPS


def _can_follow(surf: _Surfaces) -> np.ndarray:
    """can[i, j]: a ray reflected at face i may next reflect at face j.

    Necessary geometric condition: each face has some part strictly on the
    front side of the other's plane.
    """
    n = surf.n
    # extent of face j along axis a: walls are degenerate along their own
    # axis, spread over u along the other horizontal axis, 0..z_hi in z.
    ext_lo = np.empty((n, 3))
    ext_hi = np.empty((n, 3))
    for a in range(2):
        own = surf.axis == a
        ext_lo[:, a] = np.where(own, surf.coord, surf.u_lo)
        ext_hi[:, a] = np.where(own, surf.coord, surf.u_hi)
    ext_lo[:, 2] = np.where(surf.axis == 2, surf.coord, 0.0)
    ext_hi[:, 2] = np.where(surf.axis == 2, surf.coord, surf.z_hi)
    # ground is unbounded horizontally
    ground = surf.axis == 2
    ext_lo[ground, 0:2] = -np.inf
    ext_hi[ground, 0:2] = np.inf

    axis_i = surf.axis[:, None]
    sign_i = surf.sign[:, None]
    coord_i = surf.coord[:, None]
    hi_j = np.take_along_axis(ext_hi.T, axis_i, axis=0)
    lo_j = np.take_along_axis(ext_lo.T, axis_i, axis=0)
    j_front_of_i = np.where(sign_i > 0, hi_j > coord_i + _EPS, lo_j < coord_i - _EPS)
    can = j_front_of_i & j_front_of_i.T
    np.fill_diagonal(can, False)
    return can


def _corridor_buildings(tx, rx, boxes: Boxes, margin: float | None) -> np.ndarray:
    """Indices of buildings whose expanded 2D box meets the tx-rx segment."""
    if boxes.n == 0:
        return np.empty(0, dtype=np.int64)
    if margin is None:
        return np.arange(boxes.n, dtype=np.int64)
    p0 = np.array([tx[0], tx[1]])
    d = np.array([rx[0] - tx[0], rx[1] - tx[1]])
    lo = boxes.lo[:, :2] - margin
    hi = boxes.hi[:, :2] + margin
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (lo - p0) / d
        t2 = (hi - p0) / d
    tlo = np.minimum(t1, t2)
    thi = np.maximum(t1, t2)
    par = np.abs(d) < _EPS
    inside = (p0 > lo) & (p0 < hi)
    tlo = np.where(par, np.where(inside, -np.inf, np.inf), tlo)
    thi = np.where(par, np.where(inside, np.inf, -np.inf), thi)
    tmin = np.maximum(np.max(tlo, axis=1), 0.0)
    tmax = np.minimum(np.min(thi, axis=1), 1.0)
    return np.nonzero(tmax >= tmin)[0].astype(np.int64)


def _segment_distance_2d(tx, rx, points: np.ndarray) -> np.ndarray:
    p0 = np.array([tx[0], tx[1]])
    d = np.array([rx[0] - tx[0], rx[1] - tx[1]])
    dd = float(d @ d)
    if dd < _EPS:
        return np.linalg.norm(points - p0, axis=1)
    t = np.clip((points - p0) @ d / dd, 0.0, 1.0)
    proj = p0 + t[:, None] * d
    return np.linalg.norm(points - proj, axis=1)


# --------------------------------------------------------------------------
# image-method reflection search
# --------------------------------------------------------------------------

def _mirror_many(points: np.ndarray, axis: np.ndarray, coord: np.ndarray) -> np.ndarray:
    out = points.copy()
    rows = np.arange(points.shape[0])
    out[rows, axis] = 2.0 * coord - points[rows, axis]
    return out


def _validate_sequences(tx, rx, seq: np.ndarray, surf: _Surfaces, boxes: Boxes):
    """Backtrace candidate mirror sequences; returns surviving path data.

    seq: (M, k) surface indices. Returns a list of
    (vertices (k+2, 3), incidence angles (k,), surface indices (k,)).
    """
    m, k = seq.shape
    if m == 0:
        return []
    axis = surf.axis[seq]          # (M, k)
    coord = surf.coord[seq]
    sign = surf.sign[seq]

    # forward image chain
    images = np.empty((m, k, 3))
    cur = np.broadcast_to(tx, (m, 3)).copy()
    for s in range(k):
        cur = _mirror_many(cur, axis[:, s], coord[:, s])
        images[:, s] = cur

    # backtrace from rx through planes k-1 .. 0
    valid = np.ones(m, dtype=bool)
    pts = np.empty((m, k, 3))
    q = np.broadcast_to(rx, (m, 3)).copy()
    rows = np.arange(m)
    for s in range(k - 1, -1, -1):
        img = images[:, s]
        denom = q[rows, axis[:, s]] - img[rows, axis[:, s]]
        ok = np.abs(denom) > _EPS
        t = np.where(ok, (coord[:, s] - img[rows, axis[:, s]]) / np.where(ok, denom, 1.0), -1.0)
        ok &= (t > _EPS) & (t < 1.0 - _EPS)
        p = img + t[:, None] * (q - img)
        # face bounds: walls bounded in u and z, ground unbounded
        u_axis = 1 - axis[:, s]
        is_wall = axis[:, s] != 2
        u = p[rows, np.where(is_wall, u_axis, 0)]
        in_u = (u >= surf.u_lo[seq[:, s]] - _EPS) & (u <= surf.u_hi[seq[:, s]] + _EPS)
        in_z = (p[:, 2] >= -_EPS) & (p[:, 2] <= surf.z_hi[seq[:, s]] + _EPS)
        ok &= np.where(is_wall, in_u & in_z, True)
        valid &= ok
        pts[:, s] = p
        q = np.where(ok[:, None], p, q)

    if not np.any(valid):
        return []
    idx = np.nonzero(valid)[0]
    pts = pts[idx]
    seq = seq[idx]
    axis = axis[idx]
    coord = coord[idx]
    sign = sign[idx]
    m = idx.shape[0]

    # vertices tx, p_0..p_{k-1}, rx and front-side checks at every bounce
    verts = np.empty((m, k + 2, 3))
    verts[:, 0] = tx
    verts[:, 1:-1] = pts
    verts[:, -1] = rx
    ok = np.ones(m, dtype=bool)
    rows = np.arange(m)
    for s in range(k):
        prev = verts[:, s]
        nxt = verts[:, s + 2]
        ok &= sign[:, s] * (prev[rows, axis[:, s]] - coord[:, s]) > _EPS
        ok &= sign[:, s] * (nxt[rows, axis[:, s]] - coord[:, s]) > _EPS
    if not np.any(ok):
        return []
    verts = verts[ok]
    seq = seq[ok]
    axis = axis[ok]
    sign_ok = sign[ok]
    m = verts.shape[0]

    # blockage of every segment against the full layout
    segs_p0 = verts[:, :-1].reshape(-1, 3)
    segs_p1 = verts[:, 1:].reshape(-1, 3)
    blocked = segments_blocked(segs_p0, segs_p1, boxes).reshape(m, k + 1)
    clear = ~np.any(blocked, axis=1)
    if not np.any(clear):
        return []
    verts = verts[clear]
    seq = seq[clear]
    axis = axis[clear]

    out = []
    for i in range(verts.shape[0]):
        v = verts[i]
        angles = []
        for s in range(k):
            inc = v[s] - v[s + 1]
            norm = np.linalg.norm(inc)
            cos_i = abs(inc[axis[i, s]]) / norm
            angles.append(math.degrees(math.acos(min(max(cos_i, 0.0), 1.0))))
        out.append((v, angles, seq[i]))
    return out


def _enumerate_orders(surf: _Surfaces, faces_tx, faces_rx, can, order: int,
                      allowed: np.ndarray | None):
    """Index tuples (M, order) of candidate mirror sequences."""
    n = surf.n
    first = np.nonzero(faces_tx)[0]
    if order == 1:
        seq = first[faces_rx[first]]
        return seq.reshape(-1, 1)
    if allowed is not None:
        allow_mask = np.zeros(n, dtype=bool)
        allow_mask[allowed] = True
    else:
        allow_mask = np.ones(n, dtype=bool)
    partial = first[allow_mask[first]].reshape(-1, 1) if order >= 3 else first.reshape(-1, 1)
    for depth in range(1, order):
        last = partial[:, -1]
        nxt = can[last]  # (P, n)
        if depth == order - 1:
            nxt = nxt & faces_rx[None, :]
        elif order >= 3:
            nxt = nxt & allow_mask[None, :]
        rows, cols = np.nonzero(nxt)
        partial = np.hstack([partial[rows], cols.reshape(-1, 1)])
        if partial.shape[0] == 0:
            break
    return partial


def _reflection_paths(tx, rx, layout, config: TraceConfig):
    boxes = layout.boxes()
    cand = _corridor_buildings(tx, rx, boxes, config.corridor_margin_m)
    surf = _build_surfaces(boxes, cand)
    faces_tx = _front_mask(surf, tx)
    faces_rx = _front_mask(surf, rx)
    can = _can_follow(surf)

    allowed = None
    if config.max_order3_buildings is not None and config.max_reflections >= 3:
        centers = 0.5 * (boxes.lo[cand, :2] + boxes.hi[cand, :2])
        dist = _segment_distance_2d(tx, rx, centers)
        order = np.lexsort((cand, dist))[: config.max_order3_buildings]
        keep = set(cand[order].tolist())
        allowed = np.nonzero(np.isin(surf.bld, list(keep)) | (surf.bld == GROUND_ID))[0]

    paths = []
    for order in range(1, config.max_reflections + 1):
        seq = _enumerate_orders(surf, faces_tx, faces_rx, can, order, allowed)
        if seq.shape[0] == 0:
            continue
        for verts, angles, sidx in _validate_sequences(tx, rx, seq, surf, boxes):
            inters = []
            for s, surf_i in enumerate(sidx):
                b = int(surf.bld[surf_i])
                fc = int(surf.face[surf_i])
                mat = GROUND_MATERIAL if b == GROUND_ID else layout.buildings[b].material
                inters.append(
                    Reflection(building=b, face=fc, material=mat,
                               incidence_deg=angles[s])
                )
            paths.append(_make_path(verts, tuple(inters)))
    return paths


# --------------------------------------------------------------------------
# diffraction and transmission path construction
# --------------------------------------------------------------------------

def _building_edges(lo, hi):
    """(a, b) endpoints of the 4 roof edges then 4 vertical corners."""
    x0, y0 = lo[0], lo[1]
    x1, y1 = hi[0], hi[1]
    h = hi[2]
    return [
        ((x0, y0, h), (x1, y0, h)),
        ((x1, y0, h), (x1, y1, h)),
        ((x1, y1, h), (x0, y1, h)),
        ((x0, y1, h), (x0, y0, h)),
        ((x0, y0, 0.0), (x0, y0, h)),
        ((x1, y0, 0.0), (x1, y0, h)),
        ((x1, y1, 0.0), (x1, y1, h)),
        ((x0, y1, 0.0), (x0, y1, h)),
    ]


def _all_edges(boxes: Boxes, cand: np.ndarray):
    """Endpoint arrays (E, 3) of roof edges and vertical corners, with owners."""
    lo = boxes.lo[cand]
    hi = boxes.hi[cand]
    m = len(cand)
    a = np.empty((8 * m, 3))
    b = np.empty((8 * m, 3))
    x0, y0, x1, y1, h = lo[:, 0], lo[:, 1], hi[:, 0], hi[:, 1], hi[:, 2]
    z0 = np.zeros(m)
    corners = ((x0, y0), (x1, y0), (x1, y1), (x0, y1))
    for e, ((ax, ay), (bx, by)) in enumerate(zip(corners, corners[1:] + corners[:1])):
        a[e * m:(e + 1) * m] = np.column_stack([ax, ay, h])
        b[e * m:(e + 1) * m] = np.column_stack([bx, by, h])
    for e, (cx, cy) in enumerate(corners):
        sl = slice((4 + e) * m, (5 + e) * m)
        a[sl] = np.column_stack([cx, cy, z0])
        b[sl] = np.column_stack([cx, cy, h])
    owner = np.tile(cand, 8)
    edge_id = np.repeat(np.arange(8), m)
    return a, b, owner, edge_id


def _diffraction_paths(tx, rx, layout, config: TraceConfig):
    boxes = layout.boxes()
    cand = _corridor_buildings(tx, rx, boxes, config.corridor_margin_m)
    if len(cand) == 0:
        return []
    a, b, owner, edge_id = _all_edges(boxes, cand)

    # stationary point on every edge (unfolded-plane formula, vectorized)
    e = b - a
    elen = np.linalg.norm(e, axis=1)
    ok = elen > _EPS
    ehat = e / np.where(ok, elen, 1.0)[:, None]
    t_par = np.einsum("ij,ij->i", tx - a, ehat)
    r_par = np.einsum("ij,ij->i", rx - a, ehat)
    t_perp = np.linalg.norm(tx - a - t_par[:, None] * ehat, axis=1)
    r_perp = np.linalg.norm(rx - a - r_par[:, None] * ehat, axis=1)
    denom = t_perp + r_perp
    ok &= denom > _EPS
    u = np.clip((t_par * r_perp + r_par * t_perp) / np.where(ok, denom, 1.0), 0.0, elen)
    p = a + u[:, None] * ehat
    d1 = np.linalg.norm(p - tx, axis=1)
    d2 = np.linalg.norm(rx - p, axis=1)
    ok &= (d1 > _EPS) & (d2 > _EPS)

    idx = np.nonzero(ok)[0]
    if idx.size == 0:
        return []

    # drop duplicate stationary points (shared corners), keep lowest edge key
    key = np.round(p[idx], 6)
    order = np.lexsort((edge_id[idx], owner[idx]))
    _, first = np.unique(key[order], axis=0, return_index=True)
    idx = idx[np.sort(order[np.sort(first)])]

    pts = p[idx]
    n = len(idx)
    blocked = segments_blocked(
        np.concatenate([np.broadcast_to(tx, pts.shape), pts]),
        np.concatenate([pts, np.broadcast_to(rx, pts.shape)]),
        boxes,
    )
    idx = idx[~(blocked[:n] | blocked[n:])]
    if idx.size == 0:
        return []

    d_hat = rx - tx
    d_hat = d_hat / np.linalg.norm(d_hat)
    paths = []
    for i in idx:
        pi = p[i]
        q = tx + float(np.dot(pi - tx, d_hat)) * d_hat
        inter = Diffraction(
            building=int(owner[i]),
            edge=int(edge_id[i]),
            d1_m=float(d1[i]),
            d2_m=float(d2[i]),
            clearance_m=float(np.linalg.norm(pi - q)),
        )
        paths.append(_make_path(np.stack([tx, pi, rx]), (inter,)))
    paths.sort(key=lambda g: (g.length_m, g.interactions[0].building, g.interactions[0].edge))
    return paths


def _entry_face(p_entry, direction, lo, hi):
    """Face id hit first when entering a box at p_entry moving along direction."""
    dists = [
        abs(p_entry[0] - hi[0]),
        abs(p_entry[0] - lo[0]),
        abs(p_entry[1] - hi[1]),
        abs(p_entry[1] - lo[1]),
        abs(p_entry[2] - hi[2]),
    ]
    face = int(np.argmin(dists))
    ax = (0, 0, 1, 1, 2)[face]
    cos_i = abs(direction[ax]) / np.linalg.norm(direction)
    return face if face < 4 else 4, math.degrees(math.acos(min(max(cos_i, 0.0), 1.0)))


def _transmission_paths(tx, rx, layout, config: TraceConfig):
    boxes = layout.boxes()
    crossings = blocking_intervals(tx, rx, boxes)
    if not crossings or len(crossings) > config.max_transmissions:
        return []
    # evaluate each slab at a canonical crossing face (lexicographically
    # ordered endpoints) so corner-clipping crossings stay reciprocal
    swap = tuple(rx.tolist()) < tuple(tx.tolist())
    p0c, p1c = (rx, tx) if swap else (tx, rx)
    dc = p1c - p0c
    inters = []
    for b, t_in, t_out in crossings:
        tc_in = (1.0 - t_out) if swap else t_in
        p_entry = p0c + tc_in * dc
        face, inc = _entry_face(p_entry, dc, boxes.lo[b], boxes.hi[b])
        inters.append(
            Transmission(
                building=b, face=face,
                material=layout.buildings[b].material, incidence_deg=inc,
            )
        )
    verts = np.stack([tx, rx])
    return [_make_path(verts, tuple(inters))]


def _make_path(verts: np.ndarray, interactions: tuple) -> GeometricPath:
    segs = np.diff(verts, axis=0)
    length = float(np.sum(np.linalg.norm(segs, axis=1)))
    aod = segs[0] / np.linalg.norm(segs[0])
    aoa = -segs[-1] / np.linalg.norm(segs[-1])
    return GeometricPath(
        vertices=tuple(map(tuple, verts)),
        interactions=interactions,
        length_m=length,
        aod=tuple(aod),
        aoa=tuple(aoa),
    )


# --------------------------------------------------------------------------
# per-carrier resolution
# --------------------------------------------------------------------------

def _interaction_coefficient(inter, carrier_hz: float, config: TraceConfig) -> complex:
    """Complex amplitude factor of one interaction at a carrier.

    Vertical end-to-end polarization: TE against vertical walls, TM
    against horizontal surfaces (ground, roofs). Knife-edge diffraction
    contributes magnitude only.
    """
    if isinstance(inter, Reflection):
        pol = "TM" if inter.face == 4 else "TE"
        return reflection_coefficient(
            get_material(inter.material), carrier_hz, inter.incidence_deg, pol
        )
    if isinstance(inter, Transmission):
        pol = "TM" if inter.face == 4 else "TE"
        return slab_transmission_coefficient(
            get_material(inter.material), carrier_hz, inter.incidence_deg, pol,
            thickness_m=config.slab_thickness_m,
        )
    if isinstance(inter, Diffraction):
        nu = fresnel_parameter(inter.d1_m, inter.d2_m, inter.clearance_m, carrier_hz)
        return complex(10.0 ** (-knife_edge_loss_db(nu) / 20.0))
    raise TypeError(f"unknown interaction {inter!r}")


def resolve_path(
    path: GeometricPath,
    carrier_hz: float,
    tx_element_gain_dbi: float = 0.0,
    rx_element_gain_dbi: float = 0.0,
    config: TraceConfig | None = None,
) -> PropagationPath:
    """Amplitude, phase and delay of a geometric path at a carrier.

    |A|^2 is the element-to-element received/transmit power ratio:
    Friis spreading at the unfolded length times the squared magnitudes of
    every interaction coefficient and the endpoint element gains. The
    phase accumulates the electrical length plus interaction arguments.
    """
    if path.length_m <= 0.0:
        raise ValueError("zero-length path")
    cfg = config or TraceConfig()
    lam = speed_of_light / carrier_hz
    coeff = 1.0 + 0.0j
    for inter in path.interactions:
        coeff *= _interaction_coefficient(inter, carrier_hz, cfg)
    gain_lin = 10.0 ** ((tx_element_gain_dbi + rx_element_gain_dbi) / 20.0)
    amplitude = gain_lin * (lam / (4.0 * math.pi * path.length_m)) * abs(coeff)
    phase = -2.0 * math.pi * path.length_m / lam + np.angle(coeff)
    phase = math.remainder(phase, 2.0 * math.pi)
    power_dbm = 10.0 * math.log10(max(amplitude**2, 1e-300)) + 30.0
    return PropagationPath(
        vertices=path.vertices,
        interactions=path.interactions,
        length_m=path.length_m,
        delay_s=path.length_m / speed_of_light,
        amplitude=amplitude,
        phase_rad=phase,
        aod=path.aod,
        aoa=path.aoa,
        power_dbm=power_dbm,
    )


def _interaction_sort_key(path: PropagationPath):
    kinds = {Reflection: 0, Diffraction: 1, Transmission: 2}
    return tuple(
        (kinds[type(i)], i.building, getattr(i, "face", getattr(i, "edge", 0)))
        for i in path.interactions
    )


def finalize_paths(paths: list[PropagationPath], config: TraceConfig) -> list[PropagationPath]:
    """Threshold, sort (power desc, length, interactions) and cap the path list."""
    kept = [p for p in paths if p.power_dbm >= config.power_threshold_dbm]
    kept.sort(key=lambda p: (-p.power_dbm, p.length_m, _interaction_sort_key(p)))
    return kept[: config.max_paths]


def trace_geometry(tx, rx, layout: CityLayout, config: TraceConfig) -> list[GeometricPath]:
    """Frequency-independent path skeletons for one link."""
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    if np.allclose(tx, rx):
        raise ValueError("tx and rx must be distinct points")
    los = line_of_sight(tx, rx, layout)
    paths = []
    if not los.blocked:
        paths.append(_make_path(np.stack([tx, rx]), ()))
    if config.max_reflections >= 1:
        paths.extend(_reflection_paths(tx, rx, layout, config))
    if los.blocked:
        if config.max_diffractions >= 1:
            paths.extend(_diffraction_paths(tx, rx, layout, config))
        if config.max_transmissions >= 1:
            paths.extend(_transmission_paths(tx, rx, layout, config))
    return paths


def trace_paths(
    tx, rx, layout: CityLayout, carrier_hz: float, config: TraceConfig
) -> list[PropagationPath]:
    """Multipath components of one link at a carrier, strongest first.

    Amplitudes here are element-to-element with isotropic endpoints;
    directional element gains enter during channel assembly at the
    path angles. An empty list is a legal outcome (total outage).
    """
    geo = trace_geometry(tx, rx, layout, config)
    resolved = [resolve_path(g, carrier_hz, config=config) for g in geo]
    return finalize_paths(resolved, config)
