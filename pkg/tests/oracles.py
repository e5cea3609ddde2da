"""Independent brute-force oracles for the ray tracer tests.

Deliberately simple scalar implementations: exhaustive mirror-image
enumeration over all surfaces with per-segment visibility loops, and a
quadrature evaluation of the knife-edge integral. No code is shared with
the production tracer beyond numpy.
"""

import itertools
import math

import numpy as np


def make_surfaces(layout):
    """All reflecting surfaces: 4 walls per building plus the ground plane."""
    surfaces = []
    for b_idx, b in enumerate(layout.buildings):
        cx, cy = b.center
        half = b.width / 2.0
        surfaces.append({"axis": 0, "coord": cx + half, "sign": 1.0, "bld": b_idx,
                         "u": (cy - half, cy + half), "z": (0.0, b.height)})
        surfaces.append({"axis": 0, "coord": cx - half, "sign": -1.0, "bld": b_idx,
                         "u": (cy - half, cy + half), "z": (0.0, b.height)})
        surfaces.append({"axis": 1, "coord": cy + half, "sign": 1.0, "bld": b_idx,
                         "u": (cx - half, cx + half), "z": (0.0, b.height)})
        surfaces.append({"axis": 1, "coord": cy - half, "sign": -1.0, "bld": b_idx,
                         "u": (cx - half, cx + half), "z": (0.0, b.height)})
    surfaces.append({"axis": 2, "coord": 0.0, "sign": 1.0, "bld": -1,
                     "u": (-math.inf, math.inf), "z": None})
    return surfaces


def segment_hits_box(p0, p1, lo, hi, eps=1e-9):
    """Open-segment vs open-box intersection, scalar slab method."""
    tmin, tmax = 0.0, 1.0
    for a in range(3):
        d = p1[a] - p0[a]
        if abs(d) < eps:
            if not (lo[a] + eps < p0[a] < hi[a] - eps):
                return False
        else:
            t1 = (lo[a] - p0[a]) / d
            t2 = (hi[a] - p0[a]) / d
            tmin = max(tmin, min(t1, t2))
            tmax = min(tmax, max(t1, t2))
    return tmax - tmin > eps


def segment_blocked(p0, p1, layout, eps=1e-9):
    for b in layout.buildings:
        cx, cy = b.center
        half = b.width / 2.0
        lo = (cx - half, cy - half, 0.0)
        hi = (cx + half, cy + half, b.height)
        if segment_hits_box(p0, p1, lo, hi, eps):
            return True
    return False


def mirror(point, surface):
    out = list(point)
    out[surface["axis"]] = 2.0 * surface["coord"] - point[surface["axis"]]
    return np.array(out)


def reflection_paths_bruteforce(tx, rx, layout, max_order, eps=1e-9):
    """Exhaustive image-method specular paths up to max_order bounces.

    Returns a list of dicts with 'length' and 'vertices'. Every ordered
    surface tuple is tried; validity requires in-bounds specular points,
    front-side geometry at each bounce and unblocked segments.
    """
    tx = np.asarray(tx, dtype=float)
    rx = np.asarray(rx, dtype=float)
    surfaces = make_surfaces(layout)
    paths = []
    for order in range(1, max_order + 1):
        for combo in itertools.product(range(len(surfaces)), repeat=order):
            if any(combo[i] == combo[i + 1] for i in range(order - 1)):
                continue
            seq = [surfaces[i] for i in combo]
            images = [tx]
            for s in seq:
                images.append(mirror(images[-1], s))
            # backtrace
            pts = [None] * order
            q = rx
            valid = True
            for i in range(order - 1, -1, -1):
                s = seq[i]
                img = images[i + 1]
                denom = q[s["axis"]] - img[s["axis"]]
                if abs(denom) < eps:
                    valid = False
                    break
                t = (s["coord"] - img[s["axis"]]) / denom
                if not (eps < t < 1.0 - eps):
                    valid = False
                    break
                p = img + t * (q - img)
                if s["axis"] == 2:
                    pass  # ground: unbounded
                else:
                    u_axis = 1 - s["axis"]
                    if not (s["u"][0] - eps <= p[u_axis] <= s["u"][1] + eps):
                        valid = False
                        break
                    if not (-eps <= p[2] <= s["z"][1] + eps):
                        valid = False
                        break
                pts[i] = p
                q = p
            if not valid:
                continue
            verts = [tx] + pts + [rx]
            for i, s in enumerate(seq):
                prev, nxt = verts[i], verts[i + 2]
                if s["sign"] * (prev[s["axis"]] - s["coord"]) <= eps:
                    valid = False
                    break
                if s["sign"] * (nxt[s["axis"]] - s["coord"]) <= eps:
                    valid = False
                    break
            if not valid:
                continue
            if any(
                segment_blocked(verts[i], verts[i + 1], layout, eps)
                for i in range(len(verts) - 1)
            ):
                continue
            length = sum(
                float(np.linalg.norm(verts[i + 1] - verts[i]))
                for i in range(len(verts) - 1)
            )
            paths.append({"length": length, "vertices": verts, "surfaces": combo})
    return paths


def knife_edge_loss_quadrature(nu, n=400_000, upper=60.0):
    """Knife-edge loss by direct numerical quadrature of the Fresnel integral.

    The truncated tail integral from `upper` to infinity is added with its
    leading asymptotic term exp(-j pi U^2/2) / (j pi U).
    """
    t = np.linspace(nu, upper, n)
    f = np.exp(-1j * math.pi * t**2 / 2.0)
    integral = np.trapezoid(f, t)
    integral += np.exp(-1j * math.pi * upper**2 / 2.0) / (1j * math.pi * upper)
    field = (1.0 + 1.0j) / 2.0 * integral
    return max(-20.0 * math.log10(abs(field)), 0.0)


def interference_sum_reference(entries, n_r):
    """Term-by-term evaluation of the average-interference formula."""
    total = 0.0
    for cir, p_t in entries:
        acc = 0.0
        for h, _delay in cir.taps:
            for u in range(h.shape[1]):
                for m in range(h.shape[0]):
                    acc += abs(h[m, u]) ** 2
        total += p_t / cir.n_t * acc / n_r
    return total
