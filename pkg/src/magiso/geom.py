"""Planar domains, their measures, and the two asymmetry functionals.

A region is handled internally as a list of closed polygonal loops
(counterclockwise outer boundaries, clockwise holes).  ``PlanarDomain`` is
the single-loop, star-shaped case used for the domain corpus; the level
sets of eigenfunctions reuse the loop-level functions directly.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import shapely
from scipy.optimize import minimize

from .validation import DomainError, check_asymmetry_kind, check_points, check_scalar

TWO_SQRT_PI = 2.0 * math.sqrt(math.pi)


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class StarDescriptor:
    """Boundary radius samples ``theta_i -> r(theta_i)`` about ``center``.

    Between samples the boundary is the straight chord, so :meth:`radius`
    is the exact ray/polygon intersection distance.
    """

    center: np.ndarray
    thetas: np.ndarray
    radii: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.center, dtype=float).reshape(2)
        t = np.asarray(self.thetas, dtype=float).ravel()
        r = np.asarray(self.radii, dtype=float).ravel()
        if t.size != r.size or t.size < 3:
            raise DomainError("star descriptor needs matching thetas/radii of length >= 3")
        if np.any(np.diff(t) <= 0) or t[-1] - t[0] >= 2 * np.pi:
            raise DomainError("star thetas must increase strictly within one turn")
        if np.any(r <= 0) or not np.all(np.isfinite(r)):
            raise DomainError("star radii must be positive and finite")
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "thetas", t)
        object.__setattr__(self, "radii", r)

    def points(self):
        return self.center + self.radii[:, None] * np.column_stack(
            [np.cos(self.thetas), np.sin(self.thetas)]
        )

    def radius(self, theta):
        """Distance from the center to the boundary along direction ``theta``."""
        theta = np.asarray(theta, dtype=float)
        t0 = self.thetas[0]
        tw = t0 + np.mod(theta - t0, 2 * np.pi)
        n = self.thetas.size
        i = np.searchsorted(self.thetas, tw, side="right") - 1
        i = np.clip(i, 0, n - 1)
        pts = self.points() - self.center
        p = pts[i]
        q = pts[(i + 1) % n]
        e = q - p
        d = np.stack([np.cos(tw), np.sin(tw)], axis=-1)
        num = p[..., 0] * e[..., 1] - p[..., 1] * e[..., 0]
        den = d[..., 0] * e[..., 1] - d[..., 1] * e[..., 0]
        return num / den


@dataclass(frozen=True)
class PlanarDomain:
    """Simple counterclockwise polygon, optionally with a star descriptor."""

    vertices: np.ndarray
    star: StarDescriptor | None = None
    label: str = "domain"

    def __post_init__(self):
        v = check_points(self.vertices, "vertices", min_rows=3)
        if _signed_area(v) <= 0:
            raise DomainError(f"{self.label}: polygon must be counterclockwise with positive area")
        if not shapely.LinearRing(v).is_simple:
            raise DomainError(f"{self.label}: polygon is not simple (self-intersecting)")
        if self.star is not None:
            sp = self.star.points()
            if sp.shape != v.shape or not np.allclose(sp, v, rtol=0, atol=1e-9 * _scale(v)):
                raise DomainError(f"{self.label}: vertices do not match the star descriptor")
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    @property
    def loops(self):
        return [self.vertices]

    def scaled(self, t):
        t = check_scalar(t, "t", min_val=0.0, strict=True)
        star = None
        if self.star is not None:
            star = StarDescriptor(t * self.star.center, self.star.thetas, t * self.star.radii)
        return PlanarDomain(t * self.vertices, star, f"{self.label}*{t:g}")

    def translated(self, shift):
        shift = np.asarray(shift, dtype=float).reshape(2)
        star = None
        if self.star is not None:
            star = StarDescriptor(self.star.center + shift, self.star.thetas, self.star.radii)
        return PlanarDomain(self.vertices + shift, star, self.label)

    def to_dict(self):
        out = {"label": self.label, "vertices": self.vertices.tolist()}
        if self.star is not None:
            out["star"] = {
                "center": self.star.center.tolist(),
                "thetas": self.star.thetas.tolist(),
                "radii": self.star.radii.tolist(),
            }
        return out

    @classmethod
    def from_dict(cls, data):
        star = None
        if data.get("star"):
            s = data["star"]
            star = StarDescriptor(s["center"], s["thetas"], s["radii"])
        return cls(np.asarray(data["vertices"], dtype=float), star, data.get("label", "domain"))

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class DiskSpec:
    radius: float
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        check_scalar(self.radius, "radius", min_val=0.0, strict=True)


@dataclass
class AsymmetryReport:
    fraenkel: float
    interior: float
    inscribed_radius: float
    best_fraenkel_center: np.ndarray
    inscribed_center: np.ndarray = field(default_factory=lambda: np.zeros(2))
    fraenkel_raw: float = 0.0
    interior_raw: float = 0.0
    converged: bool = True


# ---------------------------------------------------------------------------
# domain factories


def star_domain(radius_fn: Callable, n=4096, center=(0.0, 0.0), label="star"):
    """Sample ``r(theta)`` at ``n`` uniform angles starting at 0."""
    thetas = 2 * np.pi * np.arange(n) / n
    radii = np.asarray(radius_fn(thetas), dtype=float)
    star = StarDescriptor(center, thetas, radii)
    return PlanarDomain(star.points(), star, label)


def disk(R=1.0, center=(0.0, 0.0), n=4096, label=None):
    return star_domain(lambda t: np.full_like(t, R), n, center, label or f"disk(R={R:g})")


def perturbed_disk(R0=1.0, eps=0.1, k=3, n=4096, label=None):
    """r(theta) = R0 (1 + eps cos(k theta))."""
    if eps == 0:
        return disk(R0, n=n, label=label)
    return star_domain(lambda t: R0 * (1 + eps * np.cos(k * t)), n,
                       label=label or f"pdisk(eps={eps:g},k={k})")


def ellipse(a=2.0, b=0.5, n=4096, label=None):
    return star_domain(
        lambda t: a * b / np.sqrt((b * np.cos(t)) ** 2 + (a * np.sin(t)) ** 2),
        n, label=label or f"ellipse({a:g},{b:g})",
    )


def square(side=1.0, n=4096, label=None):
    if n % 8:
        raise DomainError("square sampling must be a multiple of 8 to hit the corners")
    return star_domain(
        lambda t: 0.5 * side / np.maximum(np.abs(np.cos(t)), np.abs(np.sin(t))),
        n, label=label or f"square({side:g})",
    )


def stadium(length=1.0, rho=0.5, n=4096, label=None):
    """Rectangle ``length x 2 rho`` capped by half-disks of radius ``rho``."""
    half = 0.5 * length

    def r(t):
        c, s = np.abs(np.cos(t)), np.abs(np.sin(t))
        with np.errstate(divide="ignore"):
            flat = np.where(s > 0, rho / np.where(s > 0, s, 1.0), np.inf)
        cap = half * c + np.sqrt(np.maximum(rho**2 - (half * s) ** 2, 0.0))
        return np.where(flat * c <= half, flat, cap)

    return star_domain(r, n, label=label or f"stadium({length:g},{rho:g})")


# ---------------------------------------------------------------------------
# measures


def _scale(v):
    return float(np.max(np.abs(v))) or 1.0


def _signed_area(v):
    x, y = v[:, 0], v[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))


def _loops(obj):
    if isinstance(obj, PlanarDomain):
        return obj.loops
    if isinstance(obj, np.ndarray) and obj.ndim == 2:
        return [obj]
    return [np.asarray(lp, dtype=float) for lp in obj]


def area(domain):
    """Signed shoelace area (sum over loops, holes count negative)."""
    return sum(_signed_area(lp) for lp in _loops(domain))


def perimeter(domain):
    total = 0.0
    for lp in _loops(domain):
        total += float(np.sum(np.linalg.norm(np.roll(lp, -1, axis=0) - lp, axis=1)))
    return total


def centroid(domain):
    num = np.zeros(2)
    den = 0.0
    for lp in _loops(domain):
        x, y = lp[:, 0], lp[:, 1]
        xn, yn = np.roll(x, -1), np.roll(y, -1)
        cr = x * yn - xn * y
        num += [np.sum((x + xn) * cr) / 6.0, np.sum((y + yn) * cr) / 6.0]
        den += 0.5 * np.sum(cr)
    return num / den


def equivalent_radius(domain):
    return math.sqrt(area(domain) / math.pi)


# ---------------------------------------------------------------------------
# distance and disk intersection


def _segments(loops):
    a = np.concatenate([lp for lp in loops])
    b = np.concatenate([np.roll(lp, -1, axis=0) for lp in loops])
    return a, b


def distance_to_boundary(domain, points):
    """Exact Euclidean distance from each point to the nearest boundary edge."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    a, b = _segments(_loops(domain))
    out = np.empty(len(pts))
    e = b - a
    ee = np.einsum("ij,ij->i", e, e)
    ee = np.where(ee > 0, ee, 1.0)
    chunk = max(1, 2_000_000 // max(len(a), 1))
    for s in range(0, len(pts), chunk):
        p = pts[s:s + chunk, None, :]
        t = np.clip(np.einsum("kij,ij->ki", p - a, e) / ee, 0.0, 1.0)
        d = p - (a + t[..., None] * e)
        out[s:s + chunk] = np.sqrt(np.min(np.einsum("kij,kij->ki", d, d), axis=1))
    return out


def contains(domain, points):
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    loops = _loops(domain)
    inside = np.zeros(len(pts), dtype=bool)
    for lp in loops:
        hit = shapely.contains_xy(shapely.Polygon(lp), pts[:, 0], pts[:, 1])
        inside ^= hit
    return inside


def disk_intersection_area(domain, center, radius):
    """Exact area of (region) ∩ disk, summed edge by edge.

    Each edge contributes the signed area of (disk ∩ triangle(center, a, b)):
    the chord piece inside the circle as a triangle, the outside pieces as
    circular sectors.
    """
    c = np.asarray(center, dtype=float)
    a, b = _segments(_loops(domain))
    a = a - c
    b = b - c
    d = b - a
    dd = np.einsum("ij,ij->i", d, d)
    ad = np.einsum("ij,ij->i", a, d)
    aa = np.einsum("ij,ij->i", a, a)
    disc = ad**2 - dd * (aa - radius**2)
    ok = (disc > 0) & (dd > 0)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    safe = np.where(dd > 0, dd, 1.0)
    s1 = np.where(ok, np.clip((-ad - sq) / safe, 0.0, 1.0), 0.0)
    s2 = np.where(ok, np.clip((-ad + sq) / safe, 0.0, 1.0), 0.0)
    p1 = a + s1[:, None] * d
    p2 = a + s2[:, None] * d

    def ang(u, v):
        return np.arctan2(u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0], np.einsum("ij,ij->i", u, v))

    tri = 0.5 * (p1[:, 0] * p2[:, 1] - p1[:, 1] * p2[:, 0])
    sec = 0.5 * radius**2 * (ang(a, p1) + ang(p2, b))
    return float(np.sum(tri + sec))


# ---------------------------------------------------------------------------
# asymmetries


def _outer_components(loops):
    """Hole-filled components: the counterclockwise loops."""
    outer = [lp for lp in loops if _signed_area(lp) > 0]
    return outer or list(loops)


def inscribed_circle(domain, n_seeds=24):
    """Largest disk contained in the region: (radius, center).

    Seeds on an interior grid, then simplex descent on the exact
    point-to-boundary distance.  Holes are ignored (filled).
    """
    best_r, best_c = 0.0, None
    for lp in _outer_components(_loops(domain)):
        comp = [lp]
        lo, hi = lp.min(axis=0), lp.max(axis=0)
        gx = np.linspace(lo[0], hi[0], n_seeds + 2)[1:-1]
        gy = np.linspace(lo[1], hi[1], n_seeds + 2)[1:-1]
        grid = np.column_stack([g.ravel() for g in np.meshgrid(gx, gy)])
        grid = np.vstack([grid, centroid(comp)])
        grid = grid[contains(comp, grid)]
        if len(grid) == 0:
            grid = lp.mean(axis=0, keepdims=True)
        dist = distance_to_boundary(comp, grid)
        poly = shapely.Polygon(lp)

        def neg(x):
            d = distance_to_boundary(comp, x[None, :])[0]
            return -d if shapely.contains_xy(poly, x[0], x[1]) else d

        span = float(np.max(hi - lo))
        for k in np.argsort(-dist, kind="stable")[:3]:
            x0 = grid[k]
            res = minimize(neg, x0, method="Nelder-Mead",
                           options={"xatol": 1e-9 * span, "fatol": 1e-13 * span,
                                    "initial_simplex": x0 + np.array([[0, 0], [1, 0], [0, 1]]) * 0.05 * span,
                                    "maxiter": 4000})
            r = -float(res.fun) if res.fun < 0 else 0.0
            if r > best_r:
                best_r, best_c = r, np.asarray(res.x)
    if best_c is None:
        best_c = centroid(domain)
    return best_r, best_c


def interior_asymmetry(domain):
    """(A_I, A_I raw, rho_minus, center) with A_I = (R - rho_minus)/R."""
    comps = _outer_components(_loops(domain))
    R = math.sqrt(area(comps) / math.pi)
    rho, c = inscribed_circle(comps)
    raw = (R - rho) / R
    return min(max(raw, 0.0), np.nextafter(1.0, 0.0)), raw, rho, c


def fraenkel_asymmetry(domain, grid_n=9, center_tol=1e-6):
    """(A_F, A_F raw, best center, converged).

    Objective: overlap area with a disk of equal area; coarse grid over a box
    of half-width R about the centroid, then simplex refinement.
    """
    loops = _loops(domain)
    A = area(loops)
    R = math.sqrt(A / math.pi)
    c0 = centroid(loops)
    ticks = np.linspace(-R, R, grid_n)
    cands = np.array([[c0[0] + dx, c0[1] + dy] for dx in ticks for dy in ticks])
    vals = np.array([disk_intersection_area(loops, c, R) for c in cands])
    best = np.max(vals)
    tied = cands[vals >= best - 1e-14 * A]
    start = tied[np.lexsort((tied[:, 1], tied[:, 0]))][0]
    res = minimize(lambda x: -disk_intersection_area(loops, x, R), start, method="Nelder-Mead",
                   options={"xatol": center_tol * R, "fatol": 1e-15 * A,
                            "initial_simplex": start + np.array([[0, 0], [1, 0], [0, 1]]) * 0.25 * R,
                            "maxiter": 4000})
    overlap = -float(res.fun)
    center = np.asarray(res.x)
    if overlap < best:
        overlap, center = best, start
    raw = 1.0 - overlap / A
    return min(max(raw, 0.0), np.nextafter(1.0, 0.0)), raw, center, bool(res.success)


def asymmetry(domain, kind):
    check_asymmetry_kind(kind)
    if kind == "fraenkel":
        return fraenkel_asymmetry(domain)[0]
    return interior_asymmetry(domain)[0]


def asymmetry_report(domain):
    af, af_raw, fc, conv = fraenkel_asymmetry(domain)
    ai, ai_raw, rho, ic = interior_asymmetry(domain)
    return AsymmetryReport(af, ai, rho, fc, ic, af_raw, ai_raw, conv)


# ---------------------------------------------------------------------------
# isoperimetric checks


@dataclass
class IsoCheck:
    perimeter_lhs: float
    isoperimetric_base: float
    deficit: float
    asymmetry: float
    c_empirical: float | None
    holds: bool
    flag: str = ""


def quant_iso_check(domain, asymmetry_kind="interior", slack=1e-9):
    """Isoperimetric floor P >= 2 sqrt(pi |U|) and the empirical Bonnesen constant."""
    P = perimeter(domain)
    base = TWO_SQRT_PI * math.sqrt(area(domain))
    deficit = P / base - 1.0
    A = asymmetry(domain, asymmetry_kind)
    holds = P >= base * (1 - slack)
    if A > 0:
        return IsoCheck(P, base, deficit, A, deficit / A**2, holds)
    flag = "equality case" if deficit <= slack else "zero asymmetry with positive deficit"
    return IsoCheck(P, base, deficit, A, None, holds, flag)


@dataclass
class SubsetCheck:
    applicable: bool
    lhs: float  # r A(U)
    rhs: float  # R A(Omega) / 2
    holds: bool | None
    reason: str = ""


def subset_asymmetry_check(U, Omega, asymmetry_kind="interior", n_probe=4000):
    """Large-subset asymmetry comparison r A(U) >= R A(Omega) / 2."""
    aU, aO = area(U), area(Omega)
    A_O = asymmetry(Omega, asymmetry_kind)
    probe = np.concatenate(_loops(U))
    if len(probe) > n_probe:
        probe = probe[:: len(probe) // n_probe]
    d = distance_to_boundary(Omega, probe)
    inside = contains(Omega, probe) | (d <= 1e-9 * math.sqrt(aO))
    if not np.all(inside):
        return SubsetCheck(False, math.nan, math.nan, None, "U is not contained in Omega")
    if aU < aO * (1 - 0.5 * A_O) * (1 - 1e-12):
        return SubsetCheck(False, math.nan, math.nan, None, "area precondition fails")
    r, R = math.sqrt(aU / math.pi), math.sqrt(aO / math.pi)
    lhs = r * asymmetry(U, asymmetry_kind)
    rhs = 0.5 * R * A_O
    return SubsetCheck(True, lhs, rhs, lhs >= rhs)


def ensure_domain(domain_or_loops: PlanarDomain | Sequence) -> list:
    return _loops(domain_or_loops)
