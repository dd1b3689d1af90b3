"""End-to-end acceptance checks; each records a one-line verdict."""
import math
import time

import numpy as np
import pytest

from conftest import record
from magiso import geom, harness, magfem, mesh, radial

J2 = radial.J01**2


def test_01_bessel_limit():
    t0 = time.perf_counter()
    cv = magfem.solve_levels(geom.disk(1.0), 0.0, levels=3, n_rings=12)
    rad = radial.lambda_disk(0.0, 1.0)
    e2d, e1d = abs(cv.value / J2 - 1), abs(rad / J2 - 1)
    dt = time.perf_counter() - t0
    ok = e2d <= 5e-3 and e1d <= 1e-4 and dt <= 60
    record(1, "Bessel limit", ok, f"2D rel err {e2d:.2e}, radial rel err {e1d:.2e}, {dt:.1f}s")
    assert ok


def test_02_radial_vs_2d():
    t0 = time.perf_counter()
    worst_rel, worst_ang = 0.0, 0.0
    for B in (0.0, 1.0, 5.0, 10.0):
        cv = magfem.solve_levels(geom.disk(1.0), B, levels=3, n_rings=12)
        ref, _ = radial.lambda_disk_extrapolated(B, 1.0)
        worst_rel = max(worst_rel, abs(cv.value - ref) / ref)
        worst_ang = max(worst_ang, magfem.angular_variation(cv.finest))
    dt = time.perf_counter() - t0
    ok = worst_rel <= 5e-3 and worst_ang <= 2e-2 and dt <= 600
    record(2, "1D/2D consistency", ok,
           f"max rel diff {worst_rel:.2e}, max angular variation {worst_ang:.2e}, {dt:.1f}s")
    assert ok


def _active(rows):
    return [r for r in rows if not r.control and r.status == "ok"]


def test_03_erdos_inequality(corpus_run):
    cfg, rows, noise = corpus_run
    act = _active(rows)
    shapes = {r.label for r in act}
    fields = sorted({r.B for r in act})
    bad = [r.label + f"@B={r.B:g}" for r in act if not r.D > 3 * r.D_err]
    worst = min(r.D / max(r.D_err, 1e-300) for r in act)
    ok = len(shapes) >= 12 and fields == [0.0, 0.5, 1.0, 2.0, 5.0] and not bad \
        and all(r.status == "ok" for r in rows)
    record(3, "Erdos inequality", ok,
           f"{len(shapes)} domains x {len(fields)} fields, min D/D_err {worst:.1f}, failures {bad}")
    assert ok


def test_04_weak_field_constant(corpus_run):
    _, rows, noise = corpus_run
    vals = [r.c_thm1_weak for r in _active(rows) if r.BR2 <= 1 / math.pi and r.A > noise]
    ok = bool(vals) and all(v is not None for v in vals) and min(vals) > 0
    record(4, "weak-field constant", ok,
           f"min D/A^3 = {min(vals):.4g} over {len(vals)} rows (noise floor {noise:.1e})")
    assert ok


def test_05_strong_field_constant(corpus_run):
    _, rows, noise = corpus_run
    vals = [r.c_thm1_strong for r in _active(rows) if r.A > noise]
    ok = len(vals) == len(_active(rows)) and min(vals) > 0
    record(5, "strong-field constant", ok,
           f"min D e^(5BR^2/6)/A^(10/3) = {min(vals):.4g} over {len(vals)} rows")
    assert ok


def test_06_comparison_property():
    t0 = time.perf_counter()
    run = harness.comparison_property_run(200, N=2048)
    dt = time.perf_counter() - t0
    ok = run.monotone_pass == 200 and run.remainder_pass == 200 and dt <= 300
    record(6, "comparison lemma", ok,
           f"monotone {run.monotone_pass}/200, remainder {run.remainder_pass}/200, {dt:.1f}s")
    assert ok


def test_07_hopf_structure():
    grid = radial.RadialGrid(1.0, 2048)
    fails = []
    for B in (0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0):
        rep = radial.hopf_check(radial.disk_energy(0.5 * B * grid.r, grid))
        if not (rep.derivative_negative and rep.flux_monotone):
            fails.append(B)
    ok = not fails
    record(7, "Hopf structure", ok, f"9 potentials up to B=100, failures {fails}")
    assert ok


def test_08_erdos_bracket():
    fit = harness.erdos_bounds_study(np.linspace(10, 40, 13))
    ok = -0.80 <= fit.slope <= -0.075
    record(8, "Erdos bounds bracket", ok, f"slope {fit.slope:.4f}")
    assert ok


def test_09_sandwich_and_lower_bound(corpus_run):
    _, rows, _ = corpus_run
    done = [r for r in rows if r.status == "ok"]
    bad_sw = [r.label + f"@B={r.B:g}" for r in done if not r.sandwich_holds]
    bad_lb = [r.label + f"@B={r.B:g}" for r in done if not r.prop2_holds]
    ok = bool(done) and not bad_sw and not bad_lb
    record(9, "potential sandwich / lower bound", ok,
           f"{len(done)} rows; sandwich failures {bad_sw}, lower-bound failures {bad_lb}")
    assert ok


def _loop_floor_ok(loop):
    x, y = loop[:, 0], loop[:, 1]
    P = float(np.sum(np.hypot(np.diff(x, append=x[:1]), np.diff(y, append=y[:1]))))
    A = abs(0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))
    return P >= 2 * math.sqrt(math.pi * A) * (1 - 1e-12)


def test_10_quantitative_isoperimetry():
    cfg = harness.ExperimentConfig()
    corpus = harness.generate_corpus(cfg)
    poly_ok = all(geom.quant_iso_check(d).holds for d in corpus)
    n_loops, loop_ok = 0, True
    for d in corpus[::3]:
        res = magfem.solve_levels(d, 1.0, levels=2, n_rings=10).finest
        v = res.modulus
        for z in np.linspace(0.02, 0.98, 25) * np.max(v):
            for loop in mesh.superlevel_geometry(res.mesh, v, z).closed_loops():
                n_loops += 1
                loop_ok &= _loop_floor_ok(np.asarray(loop))
    c = geom.quant_iso_check(geom.square(1.0), "interior").c_empirical
    exact = (2 / math.sqrt(math.pi) - 1) / (1 - math.sqrt(math.pi) / 2) ** 2
    ok = poly_ok and loop_ok and n_loops > 0 and abs(c / exact - 1) <= 1e-2
    record(10, "quantitative isoperimetry", ok,
           f"{len(corpus)} polygons, {n_loops} level-set loops; square c {c:.4f} vs {exact:.4f}")
    assert ok


def test_11_subset_asymmetry():
    res = [geom.subset_asymmetry_check(U, O, kind) for U, O, kind in harness.subset_pairs(50)]
    applicable = sum(r.applicable for r in res)
    held = sum(bool(r.holds) for r in res)
    ok = applicable == 50 and held == 50
    record(11, "subset asymmetry", ok, f"{held}/{applicable} pairs")
    assert ok


TRIPLES = [
    (geom.disk(1.0), 1.0, 2.0),
    (geom.ellipse(2.0, 0.5), 4.0, 0.5),
    (geom.square(math.sqrt(math.pi)), 2.0, 1.5),
    (geom.stadium(1.0, 0.6), 1.0, 0.8),
    (geom.perturbed_disk(1.0, 0.1, 3), 5.0, 0.7),
    (geom.ellipse(1.5, 2 / 3), 0.5, 1.3),
]


def test_12_scaling_covariance():
    errs = [harness.scaling_check(d, B, t, n_rings=(12, 16)) for d, B, t in TRIPLES]
    ok = max(errs) <= 1e-2
    record(12, "scaling covariance", ok, f"max rel err {max(errs):.2e} over {len(errs)} triples")
    assert ok
