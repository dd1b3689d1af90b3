"""Corpus generation, verification sweeps and convergence studies."""
from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields

import numpy as np

from . import geom, magfem, radial, rearr
from .mesh import mesh_star_domain, refine
from .validation import ConvergenceError, check_asymmetry_kind, check_field

log = logging.getLogger(__name__)

BR2_CAP = 60.0


# ---------------------------------------------------------------------------
# configuration


@dataclass
class ExperimentConfig:
    R0: float = 1.0
    perturbed: list = field(default_factory=lambda: [
        [0.1, 2], [0.2, 2], [0.05, 3], [0.1, 3], [0.03, 4], [0.06, 4], [0.03, 5]])
    ellipses: list = field(default_factory=lambda: [[1.25, 0.8], [2.0, 0.5], [1.5, 2 / 3]])
    squares: list = field(default_factory=lambda: [math.sqrt(math.pi)])
    stadiums: list = field(default_factory=lambda: [[1.0, 0.6], [0.6, 0.8]])
    disk_radii: list = field(default_factory=lambda: [1.0])
    B: list = field(default_factory=lambda: [0.0, 0.5, 1.0, 2.0, 5.0])
    n_rings: int = 12
    levels: int = 3
    asymmetry_kind: str = "fraenkel"
    n_levels: int = 256
    asym_every: int = 4
    eig_tol: float = 1e-10
    radial_N: int = 2048
    margin_factor: float = 3.0
    csv_path: str | None = None
    json_path: str | None = None
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        check_asymmetry_kind(self.asymmetry_kind)
        for eps, k in self.perturbed:
            if not 0 <= eps < 1.0 / k**2:
                raise ValueError(f"perturbation eps={eps} needs eps < 1/k^2 for k={k}")
        for b in self.B:
            check_field(b)
        for name in ("eig_tol", "margin_factor", "R0"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.levels < 2:
            raise ValueError("at least two refinement levels are needed for an error bar")
        return self

    @classmethod
    def from_json(cls, text):
        data = json.loads(text)
        known = {f.name for f in fields(cls)}
        bad = set(data) - known
        if bad:
            raise ValueError(f"unknown config keys: {sorted(bad)}")
        return cls(**data)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)


def generate_corpus(config: ExperimentConfig):
    """Non-disk domains followed by the control disks, in a fixed order."""
    R0 = config.R0
    out = []
    for eps, k in config.perturbed:
        out.append(geom.perturbed_disk(R0, eps, int(k)))
    for a, b in config.ellipses:
        out.append(geom.ellipse(a, b))
    for s in config.squares:
        out.append(geom.square(s))
    for length, rho in config.stadiums:
        out.append(geom.stadium(length, rho))
    for R in config.disk_radii:
        out.append(geom.disk(R))
    return out


def is_control(domain):
    return domain.label.startswith("disk")


# ---------------------------------------------------------------------------
# verification rows

ROW_COLUMNS = [
    "label", "B", "R", "BR2", "lam", "lam_err", "lam_raw", "order", "lam_disk", "lam_disk_err",
    "D", "D_err", "A_F", "A_I", "A", "c_thm1_strong", "c_thm1_weak", "c_rearrange",
    "c_compare", "prop2_value", "prop2_holds", "sandwich_holds", "erdos_holds", "strict_holds",
    "layer_cake", "status",
]


@dataclass
class VerificationRow:
    label: str
    B: float
    R: float
    BR2: float
    lam: float = math.nan
    lam_err: float = math.nan
    lam_raw: float = math.nan
    order: float | None = None
    lam_disk: float = math.nan
    lam_disk_err: float = math.nan
    D: float = math.nan
    D_err: float = math.nan
    A_F: float = math.nan
    A_I: float = math.nan
    A: float = math.nan
    c_thm1_strong: float | None = None
    c_thm1_weak: float | None = None
    c_rearrange: float | None = None
    c_compare: float | None = None
    prop2_value: float = math.nan
    prop2_holds: bool | None = None
    sandwich_holds: bool | None = None
    erdos_holds: bool | None = None
    strict_holds: bool | None = None
    layer_cake: float = math.nan
    status: str = "ok"
    convergence: dict = field(default_factory=dict)

    @property
    def control(self):
        return self.label.startswith("disk")

    @property
    def passed(self):
        flags = (self.prop2_holds, self.sandwich_holds, self.erdos_holds, self.strict_holds)
        return self.status == "ok" and all(f is not False for f in flags)


def _spectral_row(domain, B, asym, noise, config: ExperimentConfig):
    R = geom.equivalent_radius(domain)
    row = VerificationRow(domain.label, float(B), R, B * R * R)
    row.A_F, row.A_I = asym.fraenkel, asym.interior
    row.A = asym.fraenkel if config.asymmetry_kind == "fraenkel" else asym.interior
    if row.BR2 > BR2_CAP:
        row.status = f"skipped: BR^2={row.BR2:.1f} above cap {BR2_CAP}"
        return row
    try:
        cv = magfem.solve_levels(domain, B, levels=config.levels, tol=config.eig_tol,
                                 seed=config.seed, n_rings=config.n_rings)
    except ConvergenceError as exc:
        row.status = f"failed: {exc}"
        return row
    row.lam, row.lam_err, row.lam_raw, row.order = cv.value, cv.error, cv.raw[-1], cv.order
    row.convergence = {"raw": cv.raw, "h": cv.hs, "order": cv.order}
    row.lam_disk, row.lam_disk_err = radial.lambda_disk_extrapolated(B, R, config.radial_N)
    row.D = row.lam / row.lam_disk - 1.0
    row.D_err = (row.lam_err + row.lam_disk_err) / row.lam_disk
    eps = config.margin_factor * row.D_err
    row.erdos_holds = row.D >= -eps
    if not row.control and row.A > 2 * noise:
        row.strict_holds = row.D > eps
    if row.A > noise and not row.control:
        row.c_thm1_strong = row.D * math.exp(5.0 / 6.0 * row.BR2) / row.A ** (10.0 / 3.0)
        if row.BR2 <= 1 / math.pi:
            row.c_thm1_weak = row.D / row.A**3

    # rearrangement of the finest-level eigenfunction
    prof = rearr.build_profile(cv.finest, config.n_levels, config.asymmetry_kind,
                               asym_every=config.asym_every)
    row.layer_cake = prof.layer_cake()
    row.prop2_value = rearr.rearrangement_lower_bound(prof)
    # the bound applies to the discrete eigenfunction, whose energy is lam_raw
    row.prop2_holds = row.lam_raw >= row.prop2_value - config.margin_factor * max(
        row.lam_err, abs(row.lam_raw - row.lam))
    row.sandwich_holds = rearr.potential_sandwich(prof).holds
    if not row.control and row.A > noise:
        state = rearr.radial_state_for(prof, config.radial_N)
        cb = rearr.corollary_bounds(prof, state, row.lam_disk, c=1.0)
        cr, cc = cb.c_max(row.lam)
        row.c_rearrange, row.c_compare = cr, cc
    return row


def _threads():
    try:
        return max(1, int(os.environ.get("MAGISO_THREADS", "1")))
    except ValueError:
        return 1


def noise_floor(config: ExperimentConfig):
    """3x the larger asymmetry of the control disks."""
    vals = [0.0]
    for R in config.disk_radii:
        rep = geom.asymmetry_report(geom.disk(R))
        vals.append(max(rep.fraenkel, rep.interior))
    return 3.0 * max(vals)


def verify_theorem1(config: ExperimentConfig, corpus=None):
    """All (domain, B) rows in config order, plus the noise floor."""
    corpus = corpus if corpus is not None else generate_corpus(config)
    noise = noise_floor(config)
    asyms = [geom.asymmetry_report(d) for d in corpus]
    tasks = [(d, B, a) for d, a in zip(corpus, asyms) for B in config.B]
    run = lambda t: _spectral_row(t[0], t[1], t[2], noise, config)
    n = _threads()
    if n > 1:
        with ThreadPoolExecutor(n) as pool:
            rows = list(pool.map(run, tasks))
    else:
        rows = [run(t) for t in tasks]
    return rows, noise


def strong_constant_trend(rows):
    """Per domain, the least-squares slope of log c_strong against BR^2.

    Reported only: a flat trend suggests the exponential weight is sharp,
    a growing one that it is pessimistic.
    """
    by_label = {}
    for r in rows:
        if r.c_thm1_strong is not None and r.c_thm1_strong > 0:
            by_label.setdefault(r.label, []).append((r.BR2, math.log(r.c_thm1_strong)))
    out = {}
    for label, pts in sorted(by_label.items()):
        x, y = np.array(pts).T
        if len(pts) >= 2 and np.ptp(x) > 0:
            out[label] = float(np.polyfit(x, y, 1)[0])
    return out


def summarize(rows, noise):
    weak = [r.c_thm1_weak for r in rows if r.c_thm1_weak is not None]
    strong = [r.c_thm1_strong for r in rows if r.c_thm1_strong is not None]
    return {
        "rows": len(rows),
        "noise_floor": noise,
        "min_c_thm1_weak": min(weak) if weak else None,
        "min_c_thm1_strong": min(strong) if strong else None,
        "all_passed": all(r.passed for r in rows),
        "failed": [f"{r.label}@B={r.B:g}" for r in rows if not r.passed],
        "log_c_strong_slope": strong_constant_trend(rows),
    }


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return f"{v:.12g}"
    return str(v)


def rows_to_csv(rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(ROW_COLUMNS)
    for r in rows:
        w.writerow([_fmt(getattr(r, c)) for c in ROW_COLUMNS])
    return buf.getvalue()


def _clean(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, dict):
        return {k: _clean(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_clean(x) for x in v]
    if isinstance(v, np.generic):
        return _clean(v.item())
    return v


def rows_to_json(rows, noise, config: ExperimentConfig):
    doc = {
        "config": asdict(config),
        "summary": summarize(rows, noise),
        "rows": [asdict(r) for r in rows],
    }
    return json.dumps(_clean(doc), indent=2, sort_keys=True)


def write_reports(rows, noise, config: ExperimentConfig):
    if config.csv_path:
        with open(config.csv_path, "w") as fh:
            fh.write(rows_to_csv(rows))
    if config.json_path:
        with open(config.json_path, "w") as fh:
            fh.write(rows_to_json(rows, noise, config))


# ---------------------------------------------------------------------------
# smaller studies


def scaling_check(domain, B, t, n_rings=(12, 12), levels=3):
    """|t^2 lam(B, t Omega) - lam(t^2 B, Omega)| / lam(t^2 B, Omega).

    Each side is meshed separately.  With equal ring counts the two meshes
    are similar and the identity holds to round-off; unequal counts give
    two unrelated discretizations.
    """
    lhs = t * t * magfem.solve_levels(domain.scaled(t), B, levels=levels, n_rings=n_rings[0]).value
    rhs = magfem.solve_levels(domain, t * t * B, levels=levels, n_rings=n_rings[1]).value
    return abs(lhs - rhs) / abs(rhs)


@dataclass
class ErdosFit:
    slope: float
    intercept: float
    x: np.ndarray  # B R^2
    gap: np.ndarray  # lambda - B
    holds: bool
    bracket: tuple = (-0.80, -0.075)


def erdos_bounds_study(B_grid, R=1.0, N=2048):
    """Least-squares slope of log(lambda(B, D_R) - B) against B R^2."""
    B_grid = np.asarray(B_grid, dtype=float)
    g = radial.RadialGrid(R, N)
    gap = np.array([radial.disk_energy(0.5 * B * g.r, g).energy for B in B_grid])
    x = B_grid * R * R
    slope, intercept = np.polyfit(x, np.log(gap * R * R), 1)
    lo, hi = -0.80, -0.075
    return ErdosFit(float(slope), float(intercept), x, gap, bool(lo <= slope <= hi), (lo, hi))


@dataclass
class ConvergenceTable:
    h: list
    n_nodes: list
    values: list
    order: float | None
    extrapolated: float
    error: float

    def to_csv(self):
        lines = ["level,h,n_nodes,lambda"]
        for i, (h, n, v) in enumerate(zip(self.h, self.n_nodes, self.values)):
            lines.append(f"{i},{h:.8g},{n},{v:.12g}")
        return "\n".join(lines) + "\n"


def convergence_study(domain, B, levels=3, n_rings=12):
    cv = magfem.solve_levels(domain, B, levels=levels, n_rings=n_rings)
    mesh = mesh_star_domain(domain, cv.hs[0])
    counts = [mesh.n_nodes]
    for _ in range(levels - 1):
        mesh = refine(mesh)
        counts.append(mesh.n_nodes)
    return ConvergenceTable(list(cv.hs), counts, list(cv.raw), cv.order, cv.value, cv.error)


# ---------------------------------------------------------------------------
# randomized property runs


def random_ordered_pair(seed, R=1.0, max_knots=12, scale=6.0):
    """Two non-negative piecewise-linear potentials (callables) with a <= a_tilde."""
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, max_knots + 1))
    x = np.concatenate([[0.0], np.sort(rng.uniform(0, R, k - 2)), [R]])
    av = rng.uniform(0, scale, k)
    bump = rng.uniform(0, scale / 2, k) * (rng.random(k) < 0.7)
    return (lambda r: np.interp(r, x, av)), (lambda r: np.interp(r, x, av + bump))


@dataclass
class ComparisonRun:
    seeds: int
    monotone_pass: int
    remainder_pass: int
    failures: list

    @property
    def all_passed(self):
        return self.monotone_pass == self.seeds and self.remainder_pass == self.seeds


def comparison_property_run(n_seeds=200, N=2048, R=1.0, seed0=0):
    """Monotonicity and the quantitative remainder on random ordered pairs."""
    mono = rem = 0
    failures = []
    grid = radial.RadialGrid(R, N)
    for s in range(seed0, seed0 + n_seeds):
        a, at = random_ordered_pair(s, R)
        ok_m = all(radial.monotonicity_check(a, at, g)[0] for g in (grid, grid.refined()))
        res = radial.comparison_remainder(a, at, grid)
        mono += ok_m
        rem += res.holds
        if not (ok_m and res.holds):
            failures.append({"seed": s, "monotone": ok_m, "margin": res.margin,
                             "fine_margin": res.fine_margin, "slack": res.slack})
    return ComparisonRun(n_seeds, mono, rem, failures)


def subset_pairs(n_pairs=50, seed=0):
    """(U, Omega) star pairs about a common center with |U| >= |Omega|(1 - A/2).

    Omega alternates between the Fraenkel and interior conventions; U shrinks
    Omega's radial function by a random smooth factor, rescaled to meet the
    area precondition for the asymmetry kind it is paired with.
    """
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n_pairs:
        i = len(out)
        kind = "fraenkel" if i % 2 == 0 else "interior"
        fam = i % 4
        if fam == 0:
            k = int(rng.integers(2, 6))
            eps = rng.uniform(0.02, 0.9 / k**2)
            omega = geom.perturbed_disk(1.0, eps, k, n=1024)
        elif fam == 1:
            a = rng.uniform(1.1, 2.0)
            omega = geom.ellipse(a, 1 / a, n=1024)
        elif fam == 2:
            omega = geom.square(math.sqrt(math.pi), n=1024)
        else:
            omega = geom.stadium(rng.uniform(0.3, 1.2), rng.uniform(0.5, 0.9), n=1024)
        A = geom.asymmetry(omega, kind)
        st = omega.star
        m = int(rng.integers(1, 6))
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(0.2, 1.0)
        shape = 1 - amp * 0.5 * (1 + np.cos(m * st.thetas + phase))  # in [1-amp, 1]
        # choose the depth so that |U| lands inside the admissible band
        target = geom.area(omega) * (1 - rng.uniform(0.0, 0.5) * A)
        lo, hi = 0.0, 0.999
        for _ in range(60):
            d = 0.5 * (lo + hi)
            u = geom.star_domain(lambda t, d=d: np.interp(t, st.thetas, st.radii * (1 - d * (1 - shape)),
                                                          period=2 * np.pi),
                                 n=1024, center=st.center, label="subset")
            if geom.area(u) > target:
                lo = d
            else:
                hi = d
        d = lo
        U = geom.star_domain(lambda t: np.interp(t, st.thetas, st.radii * (1 - d * (1 - shape)),
                                                 period=2 * np.pi),
                             n=1024, center=st.center, label=f"subset-of-{omega.label}")
        out.append((U, omega, kind))
    return out
