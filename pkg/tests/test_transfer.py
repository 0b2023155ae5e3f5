import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kleinbarrier.errors import DegenerateMomentum, InvalidState, SingularSystem
from kleinbarrier.kinematics import DoubleBarrierSpec, ParticleSpec, Zone, classify_zone, momenta
from kleinbarrier.transfer import (
    double_barrier_matrix,
    m1_closed_form,
    oracle_transmission,
    schrodinger_transmission,
    single_barrier_matrix,
    single_barrier_transmission,
    transmission,
    transmission_coefficients,
    transmission_imaginary_p,
    transmission_real_p,
    transmission_regular,
)

ONE = ParticleSpec(1.0)
# frozen oracle values (8x8 continuity solve)
T_TUNNEL_D0 = 1.303791738791346e-26  # m=1, a=5 pi, d=0, v0=1.5, E_k=0.75
T_FIG4B = 1.558603658684166e-12  # m=1, a=10, d=16.8, v0=0.8, E_k=0.5


def _wave(k, e, v, m, x):
    lower = -1j * k / (e - v + m)
    return np.array([[np.exp(1j * k * x), np.exp(-1j * k * x)], [lower * np.exp(1j * k * x), -lower * np.exp(-1j * k * x)]])


def test_single_barrier_matches_interface_product():
    m, v, ek, a = 1.0, 4.0, 1.0, 5 * math.pi
    k, p = momenta(ONE, v, ek)
    e = ek + m
    ref = np.linalg.solve(_wave(k, e, 0, m, 0), _wave(p, e, v, m, 0)) @ np.linalg.solve(_wave(p, e, v, m, a), _wave(k, e, 0, m, a))
    got = single_barrier_matrix(ONE, DoubleBarrierSpec(v, a), ek).as_array()
    np.testing.assert_allclose(got, ref, rtol=1e-12, atol=1e-12)


@pytest.mark.parametrize("particle,v0,ek", [(ONE, 0.0, 0.7), (ParticleSpec(0.0), 2.0, 1.0)])
def test_single_barrier_no_mixing(particle, v0, ek):
    mat = single_barrier_matrix(particle, DoubleBarrierSpec(v0, 1.0), ek)
    assert abs(mat.m12) < 1e-14 and abs(mat.m21) < 1e-14
    assert abs(mat.m11) == pytest.approx(1.0, abs=1e-14)


def test_degenerate_matrix_raises():
    with pytest.raises(DegenerateMomentum):
        single_barrier_matrix(ONE, DoubleBarrierSpec(1.0, 1.0), 1.0)
    with pytest.raises(DegenerateMomentum):
        double_barrier_matrix(ONE, DoubleBarrierSpec(1.0, 1.0, 2.0), 1.0)


def test_d0_merges_into_double_width():
    for v0, ek in [(4.0, 1.0), (1.5, 0.75), (0.5, 2.0), (-3.0, 0.4)]:
        big = double_barrier_matrix(ONE, DoubleBarrierSpec(v0, 2.0, 0.0), ek).as_array()
        wide = single_barrier_matrix(ONE, DoubleBarrierSpec(v0, 4.0), ek).as_array()
        np.testing.assert_allclose(big, wide, rtol=1e-12, atol=1e-12)


def test_free_double_matrix_diagonal():
    big = double_barrier_matrix(ONE, DoubleBarrierSpec(0.0, 2.0, 3.0), 0.4)
    assert big.m12 == 0 and big.m21 == 0


def test_m1_closed_form_modulus():
    spec = DoubleBarrierSpec(4.0, 5 * math.pi, 2 * math.pi)
    direct = double_barrier_matrix(ONE, spec, 1.0).m11
    assert abs(m1_closed_form(ONE, spec, 1.0)) == pytest.approx(abs(direct), rel=1e-10)
    for v0, ek in [(0.8, 0.5), (0.3, 1.7), (6.0, 0.2)]:
        spec = DoubleBarrierSpec(v0, 3.0, 4.0)
        ref = abs(double_barrier_matrix(ONE, spec, ek).m11)
        assert abs(m1_closed_form(ONE, spec, ek)) == pytest.approx(ref, rel=1e-10)


def test_free_transmission():
    res = transmission(ONE, DoubleBarrierSpec(0.0, 3.0, 7.0), 0.5)
    assert res.transmission == pytest.approx(1.0, abs=1e-15)
    assert res.reflection == pytest.approx(0.0, abs=1e-15)


def test_massless_is_transparent():
    res = transmission(ParticleSpec(0.0), DoubleBarrierSpec(10.0, 1.0, 3.0), 0.3)
    assert abs(res.transmission - 1) < 1e-12


def test_closed_form_resonance_point():
    ek = 3.0 - math.sqrt(2.0)
    res = transmission(ONE, DoubleBarrierSpec(4.0, 5 * math.pi, 0.0), ek)
    assert res.transmission >= 1 - 1e-8


def test_frozen_oracle_values():
    assert oracle_transmission(ONE, DoubleBarrierSpec(1.5, 5 * math.pi, 0.0), 0.75) == pytest.approx(T_TUNNEL_D0, rel=1e-6)
    got = transmission(ONE, DoubleBarrierSpec(1.5, 5 * math.pi, 0.0), 0.75).transmission
    assert got == pytest.approx(T_TUNNEL_D0, rel=1e-6)
    got = transmission(ONE, DoubleBarrierSpec(0.8, 10.0, 16.8), 0.5).transmission
    assert got == pytest.approx(T_FIG4B, rel=1e-6)


def test_oracle_free():
    assert oracle_transmission(ONE, DoubleBarrierSpec(0.0, 2.0, 1.0), 0.9) == pytest.approx(1.0, abs=1e-14)


def test_result_consistency():
    res = transmission(ONE, DoubleBarrierSpec(4.0, 3.0, 2.0), 1.3)
    assert res.transmission == pytest.approx(1.0 / abs(res.m_big.m11) ** 2, rel=1e-12)
    assert abs(res.m_big.m11) ** 2 - abs(res.m_big.m21) ** 2 == pytest.approx(1.0, abs=1e-10)


def test_invalid_state():
    with pytest.raises(InvalidState):
        transmission(ONE, DoubleBarrierSpec(1.0, 1.0), 0.0)
    with pytest.raises(InvalidState):
        transmission_coefficients(ONE, DoubleBarrierSpec(1.0, 1.0), np.array([0.5, -0.1]))


samples = st.tuples(st.floats(-6, 8), st.floats(0.01, 6), st.floats(1, 20), st.floats(0, 40))


@settings(max_examples=300, deadline=None)
@given(samples)
def test_oracle_and_flux(sample):
    v0, ek, a, d = sample
    spec = DoubleBarrierSpec(v0, a, d)
    t, r = transmission_coefficients(ONE, spec, ek)
    assert abs(t + r - 1) < 1e-10
    if abs(momenta(ONE, v0, ek)[1]) < 1e-9:
        with pytest.raises(SingularSystem):
            oracle_transmission(ONE, spec, ek)
    else:
        assert abs(t - oracle_transmission(ONE, spec, ek)) < 1e-10


@settings(max_examples=200, deadline=None)
@given(samples)
def test_zone_formulas(sample):
    v0, ek, a, d = sample
    spec = DoubleBarrierSpec(v0, a, d)
    zone = classify_zone(ONE, v0, ek)
    _, p = momenta(ONE, v0, ek)
    if abs(p) < 1e-3:
        return
    t = transmission(ONE, spec, ek).transmission
    if zone in (Zone.ABOVE_BARRIER, Zone.KLEIN):
        assert transmission_real_p(ONE, spec, ek) == pytest.approx(t, abs=1e-10)
    elif zone is Zone.NORMAL_TUNNELING and abs(p) * a < 15:
        assert transmission_imaginary_p(ONE, spec, ek) == pytest.approx(t, abs=1e-10)
    assert transmission_regular(ONE, spec, ek) == pytest.approx(t, abs=1e-10)


def test_zone_formula_guards():
    with pytest.raises(DegenerateMomentum):
        transmission_real_p(ONE, DoubleBarrierSpec(1.5, 1.0), 0.75)
    with pytest.raises(DegenerateMomentum):
        transmission_imaginary_p(ONE, DoubleBarrierSpec(4.0, 1.0), 1.0)


@pytest.mark.parametrize("v0", [0.5, 1.0, 3.0, -0.7])
def test_degenerate_p_is_continuous(v0):
    """At the p = 0 zone edge T is finite and continuous."""
    spec = DoubleBarrierSpec(v0, 2.0, 3.0)
    for ek in {v0, v0 - 2.0}:
        if ek <= 0:
            continue
        at = transmission(ONE, spec, ek).transmission
        assert at == pytest.approx(transmission_regular(ONE, spec, ek), abs=1e-8)
        side = transmission_coefficients(ONE, spec, np.array([ek - 1e-6, ek + 1e-6]))[0]
        assert np.all(np.abs(side - at) < 1e-4)


def test_vectorized_matches_scalar():
    spec = DoubleBarrierSpec(2.7, 4.0, 9.0)
    eks = np.linspace(0.05, 5.0, 37)
    t, _ = transmission_coefficients(ONE, spec, eks)
    assert t.shape == eks.shape
    for ek, tv in zip(eks, t):
        assert tv == pytest.approx(transmission(ONE, spec, ek).transmission, rel=1e-13)


def test_d0_reduction_random():
    rng = np.random.default_rng(7)
    for _ in range(100):
        v0, ek, a = rng.uniform(-6, 8), rng.uniform(0.01, 6), rng.uniform(1, 20)
        if abs(ek - v0) < 1e-6 or abs(ek - v0 + 2) < 1e-6:
            continue
        t2 = transmission(ONE, DoubleBarrierSpec(v0, a, 0.0), ek).transmission
        assert abs(t2 - single_barrier_transmission(ONE, 2 * a, v0, ek)) < 1e-12


def test_schrodinger_free_and_limit():
    assert schrodinger_transmission(1.0, 0.0, 1.0, 2.0, 0.3) == pytest.approx(1.0, abs=1e-13)
    heavy = ParticleSpec(100.0)
    spec = DoubleBarrierSpec(0.02, 0.8, 1.5)
    t_d = transmission(heavy, spec, 0.012).transmission
    t_s = schrodinger_transmission(100.0, 0.02, 0.8, 1.5, 0.012)
    assert abs(t_d - t_s) / t_s < 1e-3
