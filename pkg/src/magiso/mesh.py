"""Structured polar meshes of star-shaped domains and P1 level-set geometry."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .geom import PlanarDomain, StarDescriptor
from .validation import DomainError, check_scalar


@dataclass(frozen=True)
class TriMesh:
    nodes: np.ndarray
    triangles: np.ndarray
    boundary: np.ndarray
    h: float
    star: StarDescriptor | None = None

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        tris = np.array(self.triangles, dtype=np.int64)
        bnd = np.array(self.boundary, dtype=bool)
        if nodes.ndim != 2 or nodes.shape[1] != 2 or tris.ndim != 2 or tris.shape[1] != 3:
            raise DomainError("mesh needs (n, 2) nodes and (m, 3) triangles")
        if bnd.shape != (len(nodes),):
            raise DomainError("boundary flags must have one entry per node")
        if tris.size and (tris.min() < 0 or tris.max() >= len(nodes)):
            raise DomainError("triangle refers to a missing node")
        _check_orientation(nodes, tris)
        for name, arr in (("nodes", nodes), ("triangles", tris), ("boundary", bnd)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_nodes(self):
        return len(self.nodes)

    @property
    def n_triangles(self):
        return len(self.triangles)

    def triangle_areas(self):
        return signed_areas(self.nodes, self.triangles)

    def area(self):
        return float(np.sum(self.triangle_areas()))

    def interior(self):
        return np.flatnonzero(~self.boundary)

    def to_dict(self):
        return {"nodes": self.nodes.tolist(), "triangles": self.triangles.tolist(),
                "boundary_flags": self.boundary.tolist()}

    def to_json(self):
        return json.dumps(self.to_dict())


def signed_areas(nodes, triangles):
    p = nodes[triangles]
    e1 = p[:, 1] - p[:, 0]
    e2 = p[:, 2] - p[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _check_orientation(nodes, triangles):
    a = signed_areas(nodes, triangles)
    bad = np.flatnonzero(a <= 0)
    if bad.size:
        raise DomainError(f"triangle {bad[0]} has non-positive area {a[bad[0]]:.3e}")


def mesh_star_domain(domain: PlanarDomain, target_h):
    """Polar mesh: center node plus rings of 8j nodes mapped by r(theta).

    Ring j sits at fraction j/n of the boundary radius along each ray.  Every
    ring contains the angles k*pi/4, so corners of squares are nodes.
    """
    if domain.star is None:
        raise DomainError(f"{domain.label}: meshing needs a star descriptor")
    target_h = check_scalar(target_h, "target_h", min_val=0.0, strict=True)
    star = domain.star
    n = int(round(float(np.mean(star.radii)) / target_h))
    if n < 3:
        raise DomainError(f"target_h={target_h} gives {n} rings; at least 3 are required")

    pts = [star.center[None, :]]
    starts = [0]
    for j in range(1, n + 1):
        phi = 2 * np.pi * np.arange(8 * j) / (8 * j)
        r = star.radius(phi) * (j / n)
        starts.append(starts[-1] + len(pts[-1]))
        pts.append(star.center + r[:, None] * np.column_stack([np.cos(phi), np.sin(phi)]))
    nodes = np.vstack(pts)

    tris = []
    for i in range(8):
        tris.append((0, 1 + i, 1 + (i + 1) % 8))
    for j in range(2, n + 1):
        m, M = 8 * (j - 1), 8 * j
        si, so = starts[j - 1], starts[j]
        a = b = 0
        while a < m or b < M:
            # advance whichever ring has the next smaller angle; ties advance outer
            adv_outer = a == m or (b < M and (b + 1) * m <= (a + 1) * M)
            if adv_outer:
                tris.append((si + a % m, so + b % M, so + (b + 1) % M))
                b += 1
            else:
                tris.append((si + a % m, so + b % M, si + (a + 1) % m))
                a += 1
    triangles = np.asarray(tris, dtype=np.int64)
    boundary = np.zeros(len(nodes), dtype=bool)
    boundary[starts[n]:] = True
    _check_orientation(nodes, triangles)
    return TriMesh(nodes, triangles, boundary, float(np.mean(star.radii)) / n, star)


def _edges(triangles):
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    return np.sort(e, axis=1)


def refine(mesh: TriMesh):
    """Split every triangle into four; boundary midpoints go onto the curve."""
    T = mesh.triangles
    nt = len(T)
    e = _edges(T)
    uniq, inv, counts = np.unique(e, axis=0, return_inverse=True, return_counts=True)
    inv = inv.ravel()
    mids = 0.5 * (mesh.nodes[uniq[:, 0]] + mesh.nodes[uniq[:, 1]])
    on_bd = counts == 1
    if mesh.star is not None and np.any(on_bd):
        d = mids[on_bd] - mesh.star.center
        th = np.arctan2(d[:, 1], d[:, 0])
        r = mesh.star.radius(th)
        mids[on_bd] = mesh.star.center + r[:, None] * np.column_stack([np.cos(th), np.sin(th)])
    N = mesh.n_nodes
    nodes = np.vstack([mesh.nodes, mids])
    boundary = np.concatenate([mesh.boundary, on_bd])
    m01 = N + inv[:nt]
    m12 = N + inv[nt:2 * nt]
    m20 = N + inv[2 * nt:]
    v0, v1, v2 = T[:, 0], T[:, 1], T[:, 2]
    tris = np.concatenate([
        np.column_stack([v0, m01, m20]),
        np.column_stack([m01, v1, m12]),
        np.column_stack([m20, m12, v2]),
        np.column_stack([m01, m12, m20]),
    ])
    _check_orientation(nodes, tris)
    return TriMesh(nodes, tris, boundary, mesh.h / 2, mesh.star)


# ---------------------------------------------------------------------------
# level sets of P1 fields


@dataclass
class LevelSetSlice:
    threshold: float
    superlevel_area: float
    contour_polygons: list = field(default_factory=list)
    closed: list = field(default_factory=list)
    gradient_line_integral: float = 0.0
    inverse_gradient_integral: float = 0.0
    contour_length: float = 0.0

    def closed_loops(self):
        return [p for p, c in zip(self.contour_polygons, self.closed) if c]


def gradient_norms(mesh, values):
    """|grad u| per triangle for the P1 interpolant of nodal ``values``."""
    p = mesh.nodes[mesh.triangles]
    v = np.asarray(values)[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    gx = ((v[:, 1] - v[:, 0]) * (y[:, 2] - y[:, 0]) - (v[:, 2] - v[:, 0]) * (y[:, 1] - y[:, 0])) / det
    gy = ((v[:, 2] - v[:, 0]) * (x[:, 1] - x[:, 0]) - (v[:, 1] - v[:, 0]) * (x[:, 2] - x[:, 0])) / det
    return np.hypot(gx, gy)


class DistributionFunction:
    """Exact F(z) = |{u > z}| and F'(z) for a P1 field on a mesh."""

    def __init__(self, mesh, values):
        v = np.sort(np.asarray(values, dtype=float)[mesh.triangles], axis=1)
        self.s0, self.s1, self.s2 = v[:, 0], v[:, 1], v[:, 2]
        self.areas = mesh.triangle_areas()
        self.total = float(np.sum(self.areas))
        self.vmax = float(np.max(values))
        order = np.argsort(self.s0, kind="stable")
        self._s0_sorted = self.s0[order]
        self._tail = np.concatenate([np.cumsum(self.areas[order][::-1])[::-1], [0.0]])

    def _parts(self, z):
        k = np.searchsorted(self._s0_sorted, z, side="right")
        full = self._tail[k]
        part = (self.s0 <= z) & (self.s2 > z)
        s0, s1, s2, A = self.s0[part], self.s1[part], self.s2[part], self.areas[part]
        low = z < s1
        return full, low, s0, s1, s2, A

    def __call__(self, z):
        if z < 0:
            return self.total
        full, low, s0, s1, s2, A = self._parts(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = A * (1 - (z - s0) ** 2 / ((s1 - s0) * (s2 - s0)))
            hi = A * (s2 - z) ** 2 / ((s2 - s0) * (s2 - s1))
        return float(full + np.sum(np.where(low, lo, hi)))

    def derivative(self, z):
        """F'(z) = -(integral over {u = z} of 1/|grad u|)."""
        _, low, s0, s1, s2, A = self._parts(z)
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = -2 * A * (z - s0) / ((s1 - s0) * (s2 - s0))
            hi = -2 * A * (s2 - z) / ((s2 - s0) * (s2 - s1))
        return float(np.sum(np.where(low, lo, hi)))


def _clip_area(A, s0, s1, s2, z):
    with np.errstate(divide="ignore", invalid="ignore"):
        lo = A * (1 - (z - s0) ** 2 / ((s1 - s0) * (s2 - s0)))
        hi = A * (s2 - z) ** 2 / ((s2 - s0) * (s2 - s1))
    return np.where(z < s1, lo, hi)


def superlevel_geometry(mesh: TriMesh, values, z, *, with_contours=True):
    """Area, contour loops and line integrals of {u > z} for the P1 field ``u``."""
    u = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(u)):
        raise ValueError("nodal values must be finite")
    vmin, vmax = float(np.min(u)), float(np.max(u))
    if z < 0:
        z = -np.inf
    elif z >= vmax:
        return LevelSetSlice(float(z), 0.0)
    elif np.any(u == z):
        z = z + 1e-14 * max(vmax - vmin, 1e-300)

    T = mesh.triangles
    A = mesh.triangle_areas()
    v = u[T]
    above = v > z
    na = above.sum(axis=1)
    sv = np.sort(v, axis=1)
    area_full = float(np.sum(A[na == 3]))
    part = (na == 1) | (na == 2)
    area_part = float(np.sum(_clip_area(A[part], sv[part, 0], sv[part, 1], sv[part, 2], z)))
    sl = LevelSetSlice(float(z), area_full + area_part)
    if not np.isfinite(z) or not np.any(part):
        if not np.isfinite(z):
            sl.superlevel_area = float(np.sum(A))
        return sl

    idx = np.flatnonzero(part)
    tv = v[idx]
    tn = T[idx]
    tp = mesh.nodes[tn]
    ab = above[idx]
    # crossing points on the edges (0,1), (1,2), (2,0)
    pairs = ((0, 1), (1, 2), (2, 0))
    cross = np.stack([ab[:, i] != ab[:, j] for i, j in pairs], axis=1)
    pts = np.empty((len(idx), 3, 2))
    keys = np.empty((len(idx), 3), dtype=np.int64)
    N = mesh.n_nodes
    for k, (i, j) in enumerate(pairs):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = (z - tv[:, i]) / (tv[:, j] - tv[:, i])
        t = np.where(cross[:, k], t, 0.0)
        pts[:, k] = tp[:, i] + t[:, None] * (tp[:, j] - tp[:, i])
        lo = np.minimum(tn[:, i], tn[:, j])
        hi = np.maximum(tn[:, i], tn[:, j])
        keys[:, k] = lo * N + hi
    order = np.argsort(~cross, axis=1, kind="stable")[:, :2]
    rows = np.arange(len(idx))
    P, Q = pts[rows, order[:, 0]], pts[rows, order[:, 1]]
    kP, kQ = keys[rows, order[:, 0]], keys[rows, order[:, 1]]
    # orient so the superlevel side is on the left
    a_idx = np.argmax(ab, axis=1)
    ref = tp[rows, a_idx]
    d = Q - P
    w = ref - P
    flip = d[:, 0] * w[:, 1] - d[:, 1] * w[:, 0] < 0
    P[flip], Q[flip] = Q[flip].copy(), P[flip].copy()
    kP[flip], kQ[flip] = kQ[flip].copy(), kP[flip].copy()

    seg_len = np.linalg.norm(Q - P, axis=1)
    g = gradient_norms(mesh, u)[idx]
    sl.contour_length = float(np.sum(seg_len))
    sl.gradient_line_integral = float(np.sum(seg_len * g))
    sl.inverse_gradient_integral = float(np.sum(seg_len / g))
    if with_contours:
        sl.contour_polygons, sl.closed = _chain(P, Q, kP, kQ)
    return sl


def _chain(P, Q, kP, kQ):
    """Link oriented segments end-to-start into polylines."""
    start_of = {int(k): i for i, k in enumerate(kP)}
    ends = set(int(k) for k in kQ)
    used = np.zeros(len(P), dtype=bool)
    loops, closed = [], []
    # open chains first: segments whose start edge is nobody's end
    heads = [i for i, k in enumerate(kP) if int(k) not in ends]
    for first in heads + list(range(len(P))):
        if used[first]:
            continue
        path = []
        i = first
        is_closed = False
        while True:
            used[i] = True
            path.append(P[i])
            nxt = start_of.get(int(kQ[i]))
            if nxt is None:
                break
            if used[nxt]:
                is_closed = nxt == first
                break
            i = nxt
        if not is_closed:
            path.append(Q[i])
        loops.append(np.asarray(path))
        closed.append(is_closed)
    return loops, closed
