"""P1 finite elements for the Dirichlet magnetic Laplacian (-i grad - alpha)^2.

The vector potential is the symmetric gauge alpha = (B/2)(-(y - c_y), x - c_x)
about the mesh centroid c.  Element integrals use a 6-point rule exact for
quartic polynomials, which covers the |alpha|^2 phi_u phi_v term exactly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .eigsolve import SolveReport, hermitian_defect, smallest_eigenpair
from .mesh import TriMesh, mesh_star_domain, refine
from .validation import DomainError, check_field

# Dunavant degree-4 rule: (barycentric point orbit, weight)
_A1, _W1 = 0.445948490915965, 0.223381589678011
_A2, _W2 = 0.091576213509771, 0.109951743655322
QUAD_POINTS = np.array([
    [_A1, _A1, 1 - 2 * _A1], [_A1, 1 - 2 * _A1, _A1], [1 - 2 * _A1, _A1, _A1],
    [_A2, _A2, 1 - 2 * _A2], [_A2, 1 - 2 * _A2, _A2], [1 - 2 * _A2, _A2, _A2],
])
QUAD_WEIGHTS = np.array([_W1] * 3 + [_W2] * 3)


@dataclass
class MagneticForm:
    stiffness: sp.csr_matrix  # interior nodes only
    mass: sp.csr_matrix
    B: float
    mesh: TriMesh
    center: np.ndarray
    interior: np.ndarray
    full_stiffness: sp.csr_matrix = None
    full_mass: sp.csr_matrix = None


@dataclass
class EigenResult:
    eigenvalue: float
    eigenfunction: np.ndarray  # complex, all nodes, zero on the boundary
    residual: float
    mesh: TriMesh
    B: float
    report: SolveReport | None = None

    @property
    def modulus(self):
        return np.abs(self.eigenfunction)


def mesh_centroid(mesh):
    a = mesh.triangle_areas()
    c = mesh.nodes[mesh.triangles].mean(axis=1)
    return (a[:, None] * c).sum(axis=0) / a.sum()


def element_matrices(mesh: TriMesh, B, center=None):
    """Per-triangle 3x3 magnetic stiffness (complex) and mass (real) blocks."""
    p = mesh.nodes[mesh.triangles]
    x, y = p[..., 0], p[..., 1]
    det = (x[:, 1] - x[:, 0]) * (y[:, 2] - y[:, 0]) - (x[:, 2] - x[:, 0]) * (y[:, 1] - y[:, 0])
    bad = np.flatnonzero(det <= 1e-14 * np.max(np.abs(det)))
    if bad.size:
        raise DomainError(f"degenerate triangle {bad[0]} (twice-area {det[bad[0]]:.3e})")
    area = 0.5 * det
    grad = np.empty((len(det), 3, 2))
    grad[:, 0] = np.column_stack([y[:, 1] - y[:, 2], x[:, 2] - x[:, 1]]) / det[:, None]
    grad[:, 1] = np.column_stack([y[:, 2] - y[:, 0], x[:, 0] - x[:, 2]]) / det[:, None]
    grad[:, 2] = np.column_stack([y[:, 0] - y[:, 1], x[:, 1] - x[:, 0]]) / det[:, None]

    K = np.einsum("tik,tjk->tij", grad, grad).astype(complex)
    if B != 0:
        c = np.zeros(2) if center is None else np.asarray(center, float)
        xq = np.einsum("qi,tid->tqd", QUAD_POINTS, p)  # (T, 6, 2)
        alpha = 0.5 * B * np.stack([-(xq[..., 1] - c[1]), xq[..., 0] - c[0]], axis=-1)
        adg = np.einsum("tqd,tjd->tqj", alpha, grad)  # alpha . grad(lambda_j)
        a2 = np.einsum("tqd,tqd->tq", alpha, alpha)
        w = QUAD_WEIGHTS
        # i * int(lambda_i alpha.grad lambda_j - lambda_j alpha.grad lambda_i)
        lam_adg = np.einsum("q,qi,tqj->tij", w, QUAD_POINTS, adg)
        K += 1j * (lam_adg - lam_adg.transpose(0, 2, 1))
        K += np.einsum("q,qi,qj,tq->tij", w, QUAD_POINTS, QUAD_POINTS, a2)
    K *= area[:, None, None]
    M = (np.ones((3, 3)) + np.eye(3))[None] * (area / 12.0)[:, None, None]
    return K, M


def _assemble(mesh, blocks):
    T = mesh.triangles
    rows = np.repeat(T, 3, axis=1).ravel()
    cols = np.tile(T, (1, 3)).ravel()
    n = mesh.n_nodes
    return sp.coo_matrix((blocks.ravel(), (rows, cols)), shape=(n, n)).tocsr()


def assemble(mesh: TriMesh, B, center=None):
    """Magnetic stiffness and mass over interior nodes (Dirichlet eliminated)."""
    B = check_field(B)
    if center is None:
        center = mesh_centroid(mesh)
    Ke, Me = element_matrices(mesh, B, center)
    K = _assemble(mesh, Ke)
    M = _assemble(mesh, Me)
    interior = mesh.interior()
    Ki = K[interior][:, interior].tocsr()
    Mi = M[interior][:, interior].tocsr()
    # symmetrize away assembly round-off so the pencil is exactly Hermitian
    Ki = (0.5 * (Ki + Ki.conj().T)).tocsr()
    Mi = (0.5 * (Mi + Mi.T)).tocsr().real
    return MagneticForm(Ki, Mi, B, mesh, np.asarray(center), interior, K, M)


def _expand(form, vec):
    vec = np.asarray(vec)
    if vec.shape[0] == form.mesh.n_nodes:
        return vec[form.interior]
    return vec


def rayleigh_quotient(form: MagneticForm, vec):
    """f^H K f / f^H M f for interior or full nodal vectors."""
    v = _expand(form, vec)
    return float(np.vdot(v, form.stiffness @ v).real / np.vdot(v, form.mass @ v).real)


def principal_eigenpair(form: MagneticForm, tol=1e-10, seed=0, max_iter=500):
    rep = smallest_eigenpair(form.stiffness, form.mass, tol=tol, seed=seed,
                             landau_floor=form.B, max_iter=max_iter)
    f = np.zeros(form.mesh.n_nodes, dtype=complex)
    v = rep.eigenvector.astype(complex)
    k = int(np.argmax(np.abs(v)))
    v = v * (np.abs(v[k]) / v[k])  # fix the global phase
    v = v / math.sqrt(np.vdot(v, form.mass @ v).real)
    f[form.interior] = v
    return EigenResult(rep.eigenvalue, f, rep.residual, form.mesh, form.B, rep)


def solve(mesh: TriMesh, B, tol=1e-10, seed=0):
    return principal_eigenpair(assemble(mesh, B), tol=tol, seed=seed)


class InapplicableError(ValueError):
    pass


def _is_disk(mesh):
    if mesh.star is None:
        return False
    r = mesh.star.radii
    return bool(np.ptp(r) <= 1e-9 * np.max(r))


def angular_variation(result: EigenResult, level_floor=0.1):
    """Max over rings of (max |f| - min |f|) / mean |f| on a disk mesh.

    Rings are groups of at least 8 nodes at a common distance from the
    center; rings where |f| is below ``level_floor`` times its maximum are
    skipped, since the relative spread is dominated by round-off there.
    """
    mesh = result.mesh
    if not _is_disk(mesh):
        raise InapplicableError("angular variation is defined for disk meshes only")
    c = mesh.star.center
    r = np.hypot(*(mesh.nodes - c).T)
    mod = np.abs(result.eigenfunction)
    key = np.round(r / (np.max(r) * 1e-9)).astype(np.int64)
    order = np.argsort(key, kind="stable")
    ks, starts = np.unique(key[order], return_index=True)
    groups = np.split(order, starts[1:])
    top = np.max(mod)
    worst = 0.0
    for g in groups:
        if len(g) < 8:
            continue
        m = mod[g]
        mean = m.mean()
        if mean < level_floor * top:
            continue
        worst = max(worst, float((m.max() - m.min()) / mean))
    return worst


# ---------------------------------------------------------------------------
# refinement studies


@dataclass
class ConvergedEigenvalue:
    value: float  # Richardson-extrapolated
    error: float  # error bar
    raw: list
    hs: list
    order: float | None
    finest: EigenResult = field(repr=False, default=None)

    @property
    def mesh(self):
        return self.finest.mesh


def extrapolate(values, ratio=2.0, order=2.0):
    """Richardson extrapolation over nested levels.

    Returns (value, error bar, observed order).  The error bar is the
    change between the last two extrapolants, or |last - extrapolant| when
    only two levels exist.
    """
    v = np.asarray(values, dtype=float)
    f = ratio**order
    ext = (f * v[1:] - v[:-1]) / (f - 1)
    observed = None
    if len(v) >= 3:
        d1, d2 = v[-3] - v[-2], v[-2] - v[-1]
        if d1 != 0 and d2 != 0 and d1 / d2 > 0:
            observed = math.log(d1 / d2) / math.log(ratio)
    if len(ext) >= 2:
        err = abs(ext[-1] - ext[-2])
    else:
        err = abs(v[-1] - ext[-1])
    return float(ext[-1]), float(err), observed


def solve_levels(domain, B, h=None, levels=3, tol=1e-10, seed=0, n_rings=None):
    """Eigenvalue on ``levels`` nested meshes plus its extrapolated value."""
    if h is None:
        R = math.sqrt(abs(_domain_area(domain)) / math.pi)
        h = R / (n_rings or 12)
    mesh = mesh_star_domain(domain, h)
    raws, hs = [], []
    res = None
    for lev in range(levels):
        if lev:
            mesh = refine(mesh)
        res = solve(mesh, B, tol=tol, seed=seed)
        raws.append(res.eigenvalue)
        hs.append(mesh.h)
    if levels == 1:
        return ConvergedEigenvalue(raws[0], math.nan, raws, hs, None, res)
    val, err, order = extrapolate(raws)
    return ConvergedEigenvalue(val, err, raws, hs, order, res)


def _domain_area(domain):
    from .geom import area

    return area(domain)


def gauge_defect(form: MagneticForm):
    return hermitian_defect(form.full_stiffness)
