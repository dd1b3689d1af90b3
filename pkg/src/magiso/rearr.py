"""Symmetric decreasing rearrangement of a computed eigenfunction modulus.

Given |f| on a mesh, the profile q(r) = F^{-1}(pi r^2) is sampled on a
uniform r-grid (equal steps in radius, so the boundary annulus is resolved).
On each level set {|f| = z} the marching-triangle contour supplies

    G = int |grad|f||,   H = int 1/|grad|f|| = -F'(z),   L = length,

from which q'(r) = -2 pi r / H and the induced potential
a(r) = 2 pi r B F / (G H).  Since G H >= L^2 >= 4 pi F, 0 <= a <= B r / 2.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq

from . import geom
from .magfem import EigenResult
from .mesh import DistributionFunction, superlevel_geometry
from .radial import PotentialProfile, RadialGrid, RadialState, disk_energy
from .validation import check_asymmetry_kind, check_scalar

TOPOLOGY_FLAGS = ("simple", "multiple", "annular", "open", "empty")


@dataclass
class RearrangementProfile:
    r: np.ndarray
    q: np.ndarray
    F: np.ndarray  # F(q(r)) as measured on the mesh (approximately pi r^2)
    a: np.ndarray
    dq: np.ndarray  # q'(r)
    level_asym: np.ndarray
    topology: list
    iso_deficit: np.ndarray  # L / (2 sqrt(pi F)) - 1 per level
    B: float
    R: float
    area: float
    asymmetry_kind: str
    norm_defect: float = 0.0  # int (interp |f|)^2 - 1 before renormalization
    skipped: list = field(default_factory=list)

    @property
    def n_levels(self):
        return len(self.r) - 1

    def layer_cake(self):
        """2 pi int q^2 r dr (Simpson on the profile grid)."""
        return float(2 * math.pi * simpson(self.q**2 * self.r, x=self.r))

    def defect_integrand(self):
        """(q' + a q)^2 per node."""
        return (self.dq + self.a * self.q) ** 2

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["r", "q", "a", "F", "level_asym", "topology_flag"])
        for row in zip(self.r, self.q, self.a, self.F, self.level_asym, self.topology):
            w.writerow([f"{row[0]:.12g}", f"{row[1]:.12g}", f"{row[2]:.12g}",
                        f"{row[3]:.12g}", f"{row[4]:.12g}", row[5]])
        return buf.getvalue()


def _topology(slice_):
    loops = slice_.contour_polygons
    if not loops:
        return "empty"
    if not all(slice_.closed):
        return "open"
    signs = [geom._signed_area(lp) > 0 for lp in loops]
    if not all(signs):
        return "annular"
    return "simple" if len(loops) == 1 else "multiple"


def _level_asymmetry(loops, kind):
    loops = [lp for lp in loops if len(lp) >= 3]
    if not loops or geom.area(loops) <= 0:
        return math.nan
    if kind == "fraenkel":
        return geom.fraenkel_asymmetry(loops)[0]
    return geom.interior_asymmetry(loops)[0]


def build_profile(result: EigenResult, n_levels=256, asymmetry_kind="fraenkel",
                  asym_every=1):
    """Rearranged profile, induced potential and level-set asymmetries.

    ``asym_every`` > 1 evaluates the (costly) level asymmetry on every k-th
    level only and fills the rest by linear interpolation in r.  Levels with
    r below the mesh spacing take the asymmetry of the first level above it.
    """
    check_asymmetry_kind(asymmetry_kind)
    if int(n_levels) < 8:
        raise ValueError("n_levels must be at least 8")
    mesh = result.mesh
    B = result.B
    v = np.abs(result.eigenfunction).astype(float)
    mass = result_mass_norm(mesh, v)
    v = v / math.sqrt(mass)
    total = mesh.area()
    R = math.sqrt(total / math.pi)
    n = int(n_levels)
    r = R * np.arange(n + 1) / n
    dist = DistributionFunction(mesh, v)
    vmax = float(np.max(v))

    q = np.empty(n + 1)
    Fm = np.empty(n + 1)
    a = np.zeros(n + 1)
    dq = np.zeros(n + 1)
    asym = np.full(n + 1, np.nan)
    deficit = np.zeros(n + 1)
    topo = ["simple"] * (n + 1)
    skipped = []
    q[0], Fm[0] = vmax, 0.0
    q[n] = 0.0
    tiny = 1e-12 * vmax
    F0 = dist(tiny)
    for k in range(1, n + 1):
        target = math.pi * r[k] ** 2
        if k == n or target >= F0:
            z = tiny
        else:
            z = brentq(lambda t: dist(t) - target, tiny, vmax, xtol=1e-15 * vmax, rtol=1e-15)
        if k < n:
            q[k] = z
        want_asym = (k % asym_every == 0) or k == n
        sl = superlevel_geometry(mesh, v, z, with_contours=want_asym)
        Fm[k] = sl.superlevel_area
        G, H, L = sl.gradient_line_integral, sl.inverse_gradient_integral, sl.contour_length
        if G <= 0 or H <= 0:
            skipped.append(k)
            continue
        F = Fm[k]
        dq[k] = -2 * math.pi * r[k] / H
        a[k] = 2 * math.pi * r[k] * B * F / (G * H)
        deficit[k] = L / (2 * math.sqrt(math.pi * F)) - 1.0 if F > 0 else 0.0
        if want_asym:
            topo[k] = _topology(sl)
            asym[k] = _level_asymmetry(sl.contour_polygons, asymmetry_kind)
    good = np.setdiff1d(np.arange(1, n + 1), skipped)
    if skipped and good.size:
        for arr in (a, dq, deficit):
            arr[skipped] = np.interp(r[skipped], r[good], arr[good])
    known = np.isfinite(asym)
    known[0] = False
    if np.any(known):
        asym[~known] = np.interp(r[~known], r[known], asym[known])
    # contours smaller than one mesh cell are polygons of the first triangle
    # ring, not level sets; carry the first resolved value inward
    first = int(np.searchsorted(r, mesh.h)) if mesh.h else 1
    first = min(max(first, 1), n)
    asym[:first] = asym[first]
    topo[0] = topo[1]
    return RearrangementProfile(r, q, Fm, a, dq, asym, topo, deficit, B, R, total,
                                asymmetry_kind, mass - 1.0, skipped)


def result_mass_norm(mesh, v):
    """int v^2 for the P1 interpolant of nodal v."""
    T = mesh.triangles
    A = mesh.triangle_areas()
    w = v[T]
    return float(np.sum(A / 12.0 * (np.sum(w**2, axis=1) + np.sum(w, axis=1) ** 2)))


# ---------------------------------------------------------------------------
# bounds


def rearrangement_lower_bound(profile: RearrangementProfile, with_asymmetry=False, c=0.0):
    """B + 2 pi int (q' + a q)^2 (1 + c A^2)^2 r dr."""
    c = check_scalar(c, "c", min_val=0.0) if with_asymmetry else 0.0
    w = (1 + c * profile.level_asym**2) ** 2
    return profile.B + 2 * math.pi * float(np.trapezoid(profile.defect_integrand() * w * profile.r,
                                                        profile.r))


@dataclass
class SandwichReport:
    holds: bool
    min_a: float
    worst_excess: float  # max(a - B r / 2 (1 + delta)^-2), relative to B R / 2
    slack: float


def potential_sandwich(profile: RearrangementProfile, slack=1e-8):
    """0 <= a(r) <= (B r / 2)(1 + delta(r))^{-2} <= B r / 2 per node.

    delta is the isoperimetric deficit of the level contour, i.e. the
    Bonnesen-type factor 1 + c A^2 with the empirical c of that level.
    """
    top = 0.5 * profile.B * profile.r / (1 + np.maximum(profile.iso_deficit, 0.0)) ** 2
    scale = max(0.5 * profile.B * profile.R, 1e-300)
    excess = float(np.max(profile.a - top)) / scale
    min_a = float(np.min(profile.a))
    holds = min_a >= -slack * scale and excess <= slack
    return SandwichReport(holds, min_a, excess, slack)


def induced_potential(profile: RearrangementProfile):
    return PotentialProfile(profile.R, profile.a)


def radial_state_for(profile: RearrangementProfile, N=2048):
    g = RadialGrid(profile.R, N)
    return disk_energy(induced_potential(profile), g)


@dataclass
class CorollaryBounds:
    lambda_disk: float
    bound_rearrange: float
    bound_compare: float
    remainder_rearrange: float  # coefficient of c
    remainder_compare: float

    def c_max(self, lam):
        """Largest c for which lam >= each bound (None when the remainder is 0)."""
        gap = lam - self.lambda_disk
        out = []
        for rem in (self.remainder_rearrange, self.remainder_compare):
            out.append(gap / rem if rem > 0 else None)
        return tuple(out)


def compare_remainder(profile: RearrangementProfile, state: RadialState):
    """B int p|p'| e^{-Br^2/2} A^2 r^2 dr / int p^2 e^{-Br^2/2} r dr."""
    g = state.grid
    rm = state.r_mid
    B = profile.B
    pm = 0.5 * (state.p[1:] + state.p[:-1])
    A2 = np.interp(rm, profile.r, profile.level_asym) ** 2
    lw = -0.5 * B * rm**2
    ref = np.max(lw)
    num = np.sum(pm * np.abs(state.p_prime) * np.exp(lw - ref) * A2 * rm**2) * g.dr
    den = np.sum(pm**2 * np.exp(lw - ref) * rm) * g.dr
    return float(B * num / den)


def corollary_bounds(profile: RearrangementProfile, state: RadialState, lambda_disk, c=1.0):
    """Both asymmetry-corrected lower bounds for lambda(B, Omega)."""
    c = check_scalar(c, "c", min_val=0.0)
    rem_r = float(np.trapezoid(profile.defect_integrand() * profile.level_asym**2 * profile.r,
                               profile.r))
    rem_c = compare_remainder(profile, state)
    return CorollaryBounds(lambda_disk, lambda_disk + c * rem_r, lambda_disk + c * rem_c,
                           rem_r, rem_c)


def threshold_s(profile: RearrangementProfile, A_domain, tol=1e-14):
    """s with |{q > s}| = |Omega| (1 - A / 2), by bisection."""
    A_domain = check_scalar(A_domain, "A", min_val=0.0, max_val=1.0)
    target = profile.area * (1 - 0.5 * A_domain)
    r, q = profile.r, profile.q

    def measure(s):  # pi r(s)^2 with r(s) the crossing of the decreasing q
        if s >= q[0]:
            return 0.0
        if s < 0:
            return profile.area
        k = int(np.searchsorted(-q, -s, side="left"))  # first index with q <= s
        k = min(max(k, 1), len(q) - 1)
        t = (q[k - 1] - s) / (q[k - 1] - q[k]) if q[k - 1] != q[k] else 1.0
        rr = r[k - 1] + t * (r[k] - r[k - 1])
        return profile.area * (rr / profile.R) ** 2

    lo, hi = 0.0, float(q[0])
    if measure(lo) <= target:
        return 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if measure(mid) > target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol * q[0]:
            break
    return 0.5 * (lo + hi)


def annulus_asym_inf(profile: RearrangementProfile, eps):
    """min of level_asym^2 over nodes with R (1 - eps) < r < R."""
    check_scalar(eps, "eps", min_val=0.0, max_val=1.0, strict=True)
    m = (profile.r > profile.R * (1 - eps)) & (profile.r < profile.R)
    if not np.any(m):
        raise ValueError(f"no profile nodes in the annulus for eps={eps}")
    return float(np.min(profile.level_asym[m] ** 2))
