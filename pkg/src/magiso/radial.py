"""Radial ground states on the disk for potentials a(r).

The energy is minimized in the substituted form

    e(a) = min  int p'^2 u r dr / int p^2 u r dr,   u = exp(-2 int_0^r a),

with p(R) = 0 and a natural condition at r = 0, discretized by P1 elements
on a uniform grid.  The inverse iteration solves the stiffness system by
summing fluxes from the center outward: every term is nonnegative, so the
(tiny) energies of strong fields keep full relative precision.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .validation import ConvergenceError, check_potential, check_scalar

_GX, _GW = np.polynomial.legendre.leggauss(5)
GAUSS_S = 0.5 * (_GX + 1.0)
GAUSS_W = 0.5 * _GW

J01 = 2.404825557695773


@dataclass(frozen=True)
class RadialGrid:
    R: float
    N: int = 2048

    def __post_init__(self):
        check_scalar(self.R, "R", min_val=0.0, strict=True)
        if int(self.N) != self.N or self.N < 64:
            raise ValueError(f"grid needs N >= 64 cells, got {self.N}")

    @property
    def r(self):
        return np.linspace(0.0, self.R, self.N + 1)

    @property
    def dr(self):
        return self.R / self.N

    def refined(self):
        return RadialGrid(self.R, 2 * self.N)


@dataclass(frozen=True)
class PotentialProfile:
    """Nodal samples of a(r) on a uniform grid over [0, R]; linear in between."""

    R: float
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", check_potential(self.samples))
        if self.samples.size < 2:
            raise ValueError("potential needs at least two samples")

    @classmethod
    def homogeneous(cls, B, R, n=2049):
        r = np.linspace(0.0, R, n)
        return cls(R, 0.5 * B * r)

    @classmethod
    def from_function(cls, fn, R, n=2049):
        return cls(R, np.asarray(fn(np.linspace(0.0, R, n)), dtype=float))

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        return cls(float(d["R"]), np.asarray(d["samples"], dtype=float))

    def to_json(self):
        return json.dumps({"R": self.R, "samples": self.samples.tolist()})

    def __call__(self, r):
        x = np.linspace(0.0, self.R, self.samples.size)
        return np.interp(r, x, self.samples)

    def on(self, grid: RadialGrid):
        if not math.isclose(grid.R, self.R, rel_tol=1e-12):
            raise ValueError(f"grid radius {grid.R} differs from potential radius {self.R}")
        return self(grid.r)


def _as_samples(a, grid):
    if isinstance(a, PotentialProfile):
        return a.on(grid)
    if callable(a):
        return check_potential(a(grid.r), grid.N + 1)
    return check_potential(a, grid.N + 1)


@dataclass
class RadialState:
    energy: float
    grid: RadialGrid
    a: np.ndarray  # nodal potential
    p: np.ndarray  # nodal, p[-1] == 0, 2 pi int p^2 u r = 1
    dp: np.ndarray  # per cell: p_i - p_{i+1} (> 0 under Hopf)
    log_u: np.ndarray  # nodal, log_u[0] == 0
    iterations: int = 0

    @property
    def u(self):
        return np.exp(self.log_u)

    @property
    def q(self):
        return self.p * np.exp(0.5 * self.log_u)

    @property
    def p_prime(self):
        """Cellwise derivative p'(r) (constant on each cell)."""
        return -self.dp / self.grid.dr

    @property
    def r_mid(self):
        r = self.grid.r
        return 0.5 * (r[1:] + r[:-1])


# ---------------------------------------------------------------------------
# discretization


def _log_u_nodes(a, dr):
    return np.concatenate([[0.0], -2.0 * np.cumsum(0.5 * dr * (a[1:] + a[:-1]))])


def _log_u_gauss(a, log_u, dr):
    """log u at the Gauss points of every cell, shape (N, G)."""
    s = GAUSS_S[None, :]
    a0, a1 = a[:-1, None], a[1:, None]
    return log_u[:-1, None] - 2.0 * dr * (a0 * s + 0.5 * (a1 - a0) * s**2)


class _Pencil:
    """Cell weights of the P1 stiffness and mass with weight u(r) r."""

    def __init__(self, grid, a, log_u, shift):
        dr = grid.dr
        r = grid.r
        rg = r[:-1, None] + dr * GAUSS_S[None, :]
        ug = np.exp(_log_u_gauss(a, log_u, dr) - shift)
        wr = GAUSS_W[None, :] * ug * rg
        self.stiff = np.sum(wr, axis=1) / dr  # int u r dr / dr^2
        phi0, phi1 = 1.0 - GAUSS_S, GAUSS_S
        self.m00 = dr * np.sum(wr * phi0**2, axis=1)
        self.m01 = dr * np.sum(wr * phi0 * phi1, axis=1)
        self.m11 = dr * np.sum(wr * phi1**2, axis=1)
        self.N = grid.N

    def mass_apply(self, p):
        """M p for nodal p (length N + 1, p[N] ignored as 0)."""
        x = p.copy()
        x[-1] = 0.0
        out = np.zeros_like(x)
        out[:-1] += self.m00 * x[:-1] + self.m01 * x[1:]
        out[1:] += self.m01 * x[:-1] + self.m11 * x[1:]
        out[-1] = 0.0
        return out

    def norm2(self, p):
        return float(np.dot(p, self.mass_apply(p)))

    def solve(self, b):
        """Stiffness solve with p[N] = 0: returns (x, cell differences)."""
        flux = np.cumsum(b[:-1])
        d = flux / self.stiff
        x = np.concatenate([np.cumsum(d[::-1])[::-1], [0.0]])
        return x, d

    def energy(self, d, p):
        return float(np.dot(self.stiff, d * d)) / self.norm2(p)


def disk_energy(a, grid: RadialGrid, tol=1e-14, max_iter=2000, log_scale=0.0):
    """Ground state energy e(a) and the minimizer in both representations.

    ``log_scale`` multiplies the working weight u by exp(log_scale); the
    energy does not depend on it.
    """
    a = _as_samples(a, grid)
    log_u = _log_u_nodes(a, grid.dr)
    # u rescaled to 1 at R/2
    shift = float(np.interp(0.5 * grid.R, grid.r, log_u)) - float(log_scale)
    pen = _Pencil(grid, a, log_u, shift)
    r = grid.r
    p = 1.0 - (r / grid.R) ** 2
    e_old = math.inf
    for it in range(1, max_iter + 1):
        b = pen.mass_apply(p)
        x, d = pen.solve(b)
        scale = math.sqrt(pen.norm2(x))
        p, d = x / scale, d / scale
        e = pen.energy(d, p)
        if abs(e - e_old) <= tol * e:
            break
        e_old = e
    else:
        raise ConvergenceError(f"radial inverse iteration stalled (last change {abs(e - e_old):.2e})", p)
    # normalize 2 pi int p^2 u r dr = 1 with the unshifted weight
    c = 1.0 / math.sqrt(2 * math.pi * pen.norm2(p) * math.exp(shift))
    return RadialState(e, grid, a, p * c, d * c, log_u, it)


def lambda_disk(B, R, grid: RadialGrid | None = None):
    """lambda(B, D_R) = B + e(B r / 2)."""
    grid = grid or RadialGrid(R)
    if not math.isclose(grid.R, R, rel_tol=1e-12):
        raise ValueError("grid radius must equal R")
    return B + disk_energy(0.5 * B * grid.r, grid).energy


def lambda_disk_extrapolated(B, R, N=2048):
    """Richardson value from N and 2N cells, with |difference| as error bar."""
    g = RadialGrid(R, N)
    e1 = disk_energy(0.5 * B * g.r, g).energy
    g2 = g.refined()
    e2 = disk_energy(0.5 * B * g2.r, g2).energy
    return B + (4 * e2 - e1) / 3, abs(e2 - e1) / 3


# ---------------------------------------------------------------------------
# diagnostics


def q_representation_energy(state: RadialState, rel_step=1e-3):
    """e from the direct quotient int (q' + a q)^2 r / int q^2 r.

    q = p u^{1/2} is rebuilt at Gauss points (p linear per cell, log u
    quadratic per cell) and q' is a centered difference of that rebuild.
    """
    g = state.grid
    dr = g.dr
    a, log_u = state.a, state.log_u
    shift = float(np.max(log_u))

    def q_at(s):
        pc = state.p[:-1, None] * (1 - s) + state.p[1:, None] * s
        a0, a1 = a[:-1, None], a[1:, None]
        lu = log_u[:-1, None] - 2.0 * dr * (a0 * s + 0.5 * (a1 - a0) * s**2) - shift
        return pc * np.exp(0.5 * lu)

    s = GAUSS_S[None, :]
    h = rel_step
    qp = (q_at(s + h) - q_at(s - h)) / (2 * h * dr)
    qv = q_at(s)
    av = a[:-1, None] + (a[1:, None] - a[:-1, None]) * s
    rg = g.r[:-1, None] + dr * s
    w = GAUSS_W[None, :] * rg
    num = np.sum(w * (qp + av * qv) ** 2)
    den = np.sum(w * qv**2)
    return float(num / den)


def euler_lagrange_residual(state: RadialState):
    """Max relative residual of -p''ur - p'u'r - p'u - e p u r at interior nodes."""
    g = state.grid
    dr = g.dr
    r = g.r[1:-1]
    p = state.p
    lu = state.log_u - np.max(state.log_u)
    u = np.exp(lu[1:-1])
    du = -2.0 * state.a[1:-1] * u
    p1 = (p[2:] - p[:-2]) / (2 * dr)
    p2 = (p[2:] - 2 * p[1:-1] + p[:-2]) / dr**2
    terms = np.stack([-p2 * u * r, -p1 * du * r, -p1 * u, -state.energy * p[1:-1] * u * r])
    res = terms[0] + terms[1] + terms[2] + terms[3]
    scale = np.max(np.sum(np.abs(terms), axis=0))
    return float(np.max(np.abs(res)) / scale)


@dataclass
class HopfReport:
    derivative_negative: bool
    flux_monotone: bool
    worst_derivative: float
    worst_decrease: float


def hopf_check(state: RadialState, rtol=1e-10):
    """p' < 0 on every cell and r -> -r p'(r) non-decreasing across cells."""
    pp = state.p_prime
    g = -state.r_mid * pp
    drops = np.diff(g)
    worst_drop = float(max(0.0, -np.min(drops))) if drops.size else 0.0
    return HopfReport(
        bool(np.all(pp < 0)),
        worst_drop <= rtol * float(np.max(np.abs(g))),
        float(np.max(pp)),
        worst_drop,
    )


@dataclass
class ComparisonResult:
    lhs_gap: float  # e(a) - e(a~)
    rhs: float  # quantitative remainder
    margin: float  # lhs - rhs
    slack: float
    holds: bool
    fine_margin: float | None = None
    energy_a: float = math.nan
    energy_b: float = math.nan


def remainder(state_a: RadialState, a_tilde):
    """2 int (a~ - a) p_a |p_a'| u_{a~} r dr / int p_a^2 u_{a~} r dr."""
    g = state_a.grid
    dr = g.dr
    at = _as_samples(a_tilde, g)
    lu_t = _log_u_nodes(at, dr)
    lug = _log_u_gauss(at, lu_t, dr)
    lug = lug - np.max(lug)
    s = GAUSS_S[None, :]
    rg = g.r[:-1, None] + dr * s
    w = GAUSS_W[None, :] * np.exp(lug) * rg * dr
    pc = state_a.p[:-1, None] * (1 - s) + state_a.p[1:, None] * s
    dpa = np.abs(state_a.p_prime)[:, None]
    diff = (at[:-1, None] - state_a.a[:-1, None]) * (1 - s) + (at[1:, None] - state_a.a[1:, None]) * s
    return float(2 * np.sum(w * diff * pc * dpa) / np.sum(w * pc**2))


def _comparison_once(a, a_tilde, grid):
    sa = disk_energy(a, grid)
    sb = disk_energy(a_tilde, grid)
    rhs = remainder(sa, a_tilde)
    return sa.energy - sb.energy, rhs, sa.energy, sb.energy


def comparison_remainder(a, a_tilde, grid: RadialGrid, check_fine=True):
    """Both sides of e(a) >= e(a~) + remainder, with slack from an N vs 2N run.

    ``a`` and ``a_tilde`` are callables or PotentialProfile objects so they
    can be sampled on the refined grid.
    """
    gap, rhs, ea, eb = _comparison_once(a, a_tilde, grid)
    margin = gap - rhs
    fine = None
    slack = 0.0
    if check_fine:
        g2 = grid.refined()
        gap2, rhs2, _, _ = _comparison_once(a, a_tilde, g2)
        fine = gap2 - rhs2
        slack = 3.0 * abs(margin - fine)
    tol = 1e-13 * max(abs(ea), abs(eb), 1e-300)
    holds = margin >= -(slack + tol) and (fine is None or fine >= -(slack + tol))
    return ComparisonResult(gap, rhs, margin, slack, holds, fine, ea, eb)


def monotonicity_check(a, a_tilde, grid: RadialGrid):
    """Whether e(a) >= e(a~) (expected whenever a <= a~)."""
    ea = disk_energy(a, grid).energy
    eb = disk_energy(a_tilde, grid).energy
    return ea >= eb * (1 - 1e-13), ea, eb


@dataclass
class LowerBoundDiag:
    quotient: float
    floor: float
    c_empirical: float | None


def comparison_lower_bound_diag(state: RadialState, B, eps, level_asym_inf, c=1.0):
    """The annulus quotient and its floor c e^{-BR^2/2} M eps^2.

    The quotient uses the supplied infimum ``level_asym_inf`` in place of
    the squared level-set asymmetry; ``c_empirical`` is
    quotient / (e^{-BR^2/2} M eps^2).
    """
    if not 0 < eps < 0.5:
        raise ValueError("eps must lie in (0, 1/2)")
    g = state.grid
    R, dr = g.R, g.dr
    s = GAUSS_S[None, :]
    rg = g.r[:-1, None] + dr * s
    # weights scaled by e^{+BR^2/2}: exp(-B (r^2 - R^2) / 2)
    lw = -0.5 * B * (rg**2 - R**2)
    pc = state.p[:-1, None] * (1 - s) + state.p[1:, None] * s
    dpa = np.abs(state.p_prime)[:, None]
    mask = rg >= R * (1 - eps)
    top = float(np.sum(np.where(mask, GAUSS_W * np.exp(lw) * pc * dpa * rg**2, 0.0)) * dr)
    ref = float(np.max(lw))
    bot = float(np.sum(GAUSS_W * np.exp(lw - ref) * pc**2 * rg) * dr)
    # quotient = M * top * e^{-BR^2/2} / (bot * e^{ref - BR^2/2}) = M * top / bot * e^{-ref}
    log_quot_wo_m = math.log(top) - math.log(bot) - ref if top > 0 else -math.inf
    quotient = level_asym_inf * math.exp(log_quot_wo_m)
    floor = c * math.exp(-0.5 * B * R**2) * level_asym_inf * eps**2
    c_emp = None
    if level_asym_inf > 0:
        c_emp = math.exp(log_quot_wo_m + 0.5 * B * R**2) / eps**2
    return LowerBoundDiag(quotient, floor, c_emp)
