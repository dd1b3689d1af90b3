import dataclasses
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magiso import radial
from magiso.radial import PotentialProfile, RadialGrid, disk_energy
from oracles import shoot_disk_energy

G = RadialGrid(1.0, 2048)


def test_bessel_energy():
    assert disk_energy(0 * G.r, G).energy == pytest.approx(radial.J01**2, rel=1e-4)
    assert radial.lambda_disk(0.0, 2.0) == pytest.approx(radial.J01**2 / 4, rel=1e-4)


@pytest.mark.parametrize("B", [1.0, 5.0, 10.0])
def test_against_shooting(B):
    e = disk_energy(0.5 * B * G.r, G).energy
    ref = shoot_disk_energy(lambda r: 0.5 * B * r, hi=30.0)
    assert e == pytest.approx(ref, rel=5e-6)
    ext, err = radial.lambda_disk_extrapolated(B, 1.0)
    assert ext - B == pytest.approx(ref, rel=1e-8)


def test_against_dense_self_refinement():
    fine = disk_energy(lambda r: 0.5 * r, RadialGrid(1.0, 16384)).energy
    assert disk_energy(0.5 * G.r, G).energy == pytest.approx(fine, rel=1e-6)


def test_scaling_identity():
    assert 4 * radial.lambda_disk(1.0, 2.0) == pytest.approx(radial.lambda_disk(4.0, 1.0), rel=1e-6)


def test_strong_field_decay_and_positivity():
    # lambda - B itself drops below double resolution of lambda near B ~ 70,
    # so the gap is read off the disk energy directly
    gaps = [disk_energy(0.5 * B * G.r, G).energy for B in (10.0, 20.0, 40.0, 80.0, 200.0)]
    assert radial.lambda_disk(40.0, 1.0) > 40.0
    assert all(g > 0 for g in gaps)
    assert all(a > b for a, b in zip(gaps, gaps[1:]))
    # upper envelope shape B (1/B + B) e^{-B/8} with a modest constant
    for B, g in zip((10.0, 20.0, 40.0), gaps):
        assert g <= 10 * B * (1 / B + B) * math.exp(-B / 8)


def test_u_normalization_gauge():
    for B in (0.0, 5.0, 40.0):
        a = 0.5 * B * G.r
        e0 = disk_energy(a, G).energy
        for s in (-30.0, 25.0):
            assert disk_energy(a, G, log_scale=s).energy == pytest.approx(e0, rel=1e-10)


@pytest.mark.parametrize("B", [0.0, 1.0, 5.0, 10.0, 20.0])
def test_q_and_p_representations_agree(B):
    s = disk_energy(0.5 * B * G.r, G)
    assert radial.q_representation_energy(s) == pytest.approx(s.energy, rel=1e-8)


def test_state_invariants():
    s = disk_energy(0.5 * 3.0 * G.r, G)
    assert s.log_u[0] == 0 and np.all(np.diff(s.log_u) <= 0)
    assert s.p[-1] == 0
    norm = 2 * math.pi * np.trapezoid(s.q**2 * G.r, G.r)
    assert norm == pytest.approx(1.0, rel=1e-5)


@pytest.mark.parametrize("B", [0.0, 1.0])
def test_euler_lagrange_second_order(B):
    res = []
    for N in (512, 1024):
        g = RadialGrid(1.0, N)
        res.append(radial.euler_lagrange_residual(disk_energy(0.5 * B * g.r, g)))
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.1)
    assert res[1] < 1e-5


def test_euler_lagrange_negative_control():
    s = disk_energy(0 * G.r, G)
    flat = dataclasses.replace(s, p=np.where(G.r < 1, 1.0, 0.0))
    assert radial.euler_lagrange_residual(flat) > 0.5


@pytest.mark.parametrize("B", [0.0, 1.0, 10.0, 50.0, 100.0])
def test_hopf_structure(B):
    rep = radial.hopf_check(disk_energy(0.5 * B * G.r, G))
    assert rep.derivative_negative and rep.flux_monotone


def test_comparison_equality_case():
    a = lambda r: 0.5 * r
    res = radial.comparison_remainder(a, a, G)
    assert abs(res.lhs_gap) < 1e-14 and abs(res.rhs) < 1e-14
    assert res.holds


def test_comparison_zero_vs_homogeneous():
    res = radial.comparison_remainder(lambda r: 0 * r, lambda r: 0.5 * r, G)
    assert res.lhs_gap > 0 and res.rhs > 0 and res.holds
    ok, ea, eb = radial.monotonicity_check(lambda r: 0 * r, lambda r: 0.5 * r, G)
    assert ok and ea > eb


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_random_ordered_pairs(seed):
    from magiso.harness import random_ordered_pair

    a, at = random_ordered_pair(seed)
    g = RadialGrid(1.0, 1024)
    assert radial.monotonicity_check(a, at, g)[0]
    assert radial.comparison_remainder(a, at, g).holds


def test_lower_bound_diag():
    s = disk_energy(0.5 * 5.0 * G.r, G)
    d0 = radial.comparison_lower_bound_diag(s, 5.0, 0.2, 0.0)
    assert d0.floor == 0 and d0.quotient >= 0
    d1 = radial.comparison_lower_bound_diag(s, 5.0, 0.2, 1.0)
    d2 = radial.comparison_lower_bound_diag(s, 5.0, 0.4, 1.0)
    assert d2.floor == pytest.approx(4 * d1.floor)
    assert d1.c_empirical > 0
    assert d1.quotient == pytest.approx(d1.c_empirical * math.exp(-2.5) * 0.04)
    with pytest.raises(ValueError):
        radial.comparison_lower_bound_diag(s, 5.0, 0.6, 1.0)


def test_potential_json_round_trip():
    p = PotentialProfile.homogeneous(2.0, 1.5, n=65)
    back = PotentialProfile.from_json(p.to_json())
    assert back.R == 1.5
    np.testing.assert_array_equal(back.samples, p.samples)
    assert set(json.loads(p.to_json())) == {"R", "samples"}
    g = RadialGrid(1.5, 128)
    np.testing.assert_allclose(p.on(g), g.r, atol=1e-14)


def test_grid_and_potential_validation():
    with pytest.raises(ValueError):
        RadialGrid(1.0, 16)
    with pytest.raises(ValueError):
        RadialGrid(-1.0, 256)
    with pytest.raises(ValueError):
        disk_energy(np.zeros(10), G)
    with pytest.raises(ValueError):
        disk_energy(np.full(G.N + 1, np.inf), G)
    with pytest.raises(ValueError):
        PotentialProfile(2.0, np.zeros(5)).on(G)


def test_extrapolated_disk_value():
    v, err = radial.lambda_disk_extrapolated(0.0, 1.0)
    assert abs(v - radial.J01**2) < 1e-8 and err < 1e-7


def test_hopf_structure_random_potentials():
    from magiso import harness

    g = radial.RadialGrid(1.0, 1024)
    for seed in range(20):
        for f in harness.random_ordered_pair(seed):
            rep = radial.hopf_check(disk_energy(f, g))
            assert rep.derivative_negative and rep.flux_monotone, seed
