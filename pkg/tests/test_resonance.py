import math

import numpy as np
import pytest

from kleinbarrier.errors import InvalidGeometry, ZoneMismatch
from kleinbarrier.kinematics import DoubleBarrierSpec, ParticleSpec, Zone, classify_zone
from kleinbarrier.resonance import (
    PERFECT_T_GATE,
    Parity,
    Sign,
    ZeroKind,
    closed_form_d0,
    first_zero_momentum,
    residual_even,
    residual_even_complex,
    residual_odd,
    stitch,
    trace_curves,
    zero_resonance_points,
)
from kleinbarrier.transfer import transmission, transmission_extended
from kleinbarrier import _roots

ONE = ParticleSpec(1.0)
LAM = ONE.compton_wavelength
A = 2.5 * LAM
WINDOW = ((-3.0, 4.5), (0.0, 2.5))


@pytest.fixture(scope="module")
def curves_d0():
    spec = DoubleBarrierSpec(0.0, A, 0.0)
    return spec, trace_curves(ONE, spec, *WINDOW, grid=(300, 300))


@pytest.fixture(scope="module")
def curves_d5():
    spec = DoubleBarrierSpec(0.0, A, 5 * LAM)
    return spec, trace_curves(ONE, spec, *WINDOW, grid=(300, 300))


def test_residual_odd():
    spec = DoubleBarrierSpec(4.0, A)
    assert abs(residual_odd(ONE, spec, 3.0 - math.sqrt(2.0))) < 1e-12
    with pytest.raises(ZoneMismatch):
        residual_odd(ONE, spec, 1.0, v0=1.5)


@pytest.mark.parametrize("v0,ek", [(4.0, 1.0), (0.8, 0.5), (1.5, 0.3), (-2.0, 0.7), (6.0, 3.9)])
def test_even_regular_equals_complex(v0, ek):
    spec = DoubleBarrierSpec(v0, 3.0, 4.5)
    lit = residual_even_complex(ONE, spec, ek)
    assert abs(lit.imag) < 1e-9 * max(1.0, abs(lit))
    assert residual_even(ONE, spec, ek) == pytest.approx(lit.real, rel=1e-9, abs=1e-9)


def test_even_d0_limits():
    spec = DoubleBarrierSpec(4.0, A, 0.0)
    for ek in (0.3, 1.1):
        from kleinbarrier.kinematics import momenta

        p = momenta(ONE, 4.0, ek)[1].real
        assert residual_even(ONE, spec, ek) == pytest.approx(2 * math.cos(p * A), abs=1e-12)
    # imaginary p at d = 0: 2 cosh(qa) > 0, no roots
    eks = np.linspace(1e-3, 1.499, 500)
    assert np.all(residual_even(ONE, DoubleBarrierSpec(1.5, A, 0.0), eks) > 0)


def test_tunneling_roots_are_perfect():
    spec = DoubleBarrierSpec(0.0, 5 * math.pi, 10 * math.pi)
    found = 0
    for v0 in np.linspace(0.2, 0.9, 8):
        grid = np.linspace(1e-3, v0 - 1e-3, 400)
        for ek in _roots.roots_on_grid(lambda e: residual_even(ONE, spec, e, v0=v0), grid):
            assert classify_zone(ONE, v0, ek) is Zone.NORMAL_TUNNELING
            t = transmission(ONE, spec, ek, v0=v0).transmission
            if t < PERFECT_T_GATE:
                t = transmission_extended(ONE, spec, ek, v0=v0)
            found += t >= PERFECT_T_GATE
    assert found > 0


def test_closed_form_d0():
    spec = DoubleBarrierSpec(0.0, A, 0.0)
    line = closed_form_d0(ONE, spec, 10, Sign.MINUS)
    assert line(4.0) == pytest.approx(3.0 - math.sqrt(2.0), abs=1e-14)
    assert transmission(ONE, spec, line(4.0), v0=4.0).transmission >= 1 - 1e-8
    for n in range(1, 6):
        assert closed_form_d0(ONE, spec, n, Sign.PLUS).slope == 1.0
    zero = closed_form_d0(ONE, spec, 0, Sign.PLUS)
    assert zero(1.7) == pytest.approx(1.7)
    with pytest.raises(InvalidGeometry):
        closed_form_d0(ONE, DoubleBarrierSpec(0.0, A, 1.0), 1, Sign.PLUS)


def test_zero_points_trends():
    firsts_m, firsts_e = [], []
    for d in (0.0, LAM, 5 * LAM):
        spec = DoubleBarrierSpec(0.0, A, d)
        firsts_m.append(zero_resonance_points(ONE, spec, ZeroKind.ZERO_MOMENTUM, parity=Parity.EVEN)[0])
        firsts_e.append(abs(zero_resonance_points(ONE, spec, ZeroKind.ZERO_ENERGY, parity=Parity.EVEN)[-1]))
    assert firsts_m[0] < firsts_m[1] < firsts_m[2]
    assert firsts_e[0] > firsts_e[1] > firsts_e[2]


def test_odd_zero_points_independent_of_d():
    ref = zero_resonance_points(ONE, DoubleBarrierSpec(0.0, A, 0.0), ZeroKind.ZERO_MOMENTUM, parity=Parity.ODD)
    other = zero_resonance_points(ONE, DoubleBarrierSpec(0.0, A, 7.3), ZeroKind.ZERO_MOMENTUM, parity=Parity.ODD)
    np.testing.assert_allclose(ref, other, rtol=0, atol=1e-13)
    # p a = n pi with p = sqrt(V0 (V0 - 2))
    for n, v in enumerate(ref[:4], start=1):
        assert math.sqrt(v * (v - 2.0)) * A == pytest.approx(n * math.pi, rel=1e-12)


@pytest.mark.parametrize("d", [0.0, LAM, 5 * LAM])
def test_zero_points_continue_to_small_energy(d):
    # 1 - T grows linearly in E_k away from the limit point; near V0 = 2m the
    # slope is ~1e6, so the check is made at E_k = 1e-10
    spec = DoubleBarrierSpec(0.0, A, d)
    for kind in ZeroKind:
        for v0 in zero_resonance_points(ONE, spec, kind, v0_limit=6.0)[:6]:
            ts = [transmission(ONE, spec, e, v0=v0).transmission for e in (1e-4, 1e-6, 1e-8)]
            assert ts[0] < ts[1] < ts[2]
            assert transmission(ONE, spec, 1e-10, v0=v0).transmission > 0.999


def test_first_zero_momentum():
    spec = DoubleBarrierSpec(0.0, A, 5 * LAM)
    first = first_zero_momentum(ONE, spec)
    assert first == min(zero_resonance_points(ONE, spec, ZeroKind.ZERO_MOMENTUM))
    assert 2.0 < first < 2.03


def _all_gated(spec, curves):
    for c in curves:
        assert np.all(np.abs(c.transmission - 1.0) <= 1.0 - PERFECT_T_GATE)
        assert np.all(np.diff(c.v0) > 0) or np.all(np.diff(c.v0) < 0) or len(c) == 1


def test_traced_d0_matches_closed_form(curves_d0):
    spec, curves = curves_d0
    _all_gated(spec, curves)
    assert curves
    for c in curves:
        if c.branch.zone is Zone.NORMAL_TUNNELING:
            pytest.fail("d = 0 has no tunneling-zone resonances")
        # 2 p a = n pi with n fixed along the curve
        e = c.kinetic + 1.0 - c.v0
        n = 2.0 * A * np.sqrt(e * e - 1.0) / math.pi
        assert np.ptp(n) < 1e-9
        sign = Sign.PLUS if c.branch.zone is Zone.ABOVE_BARRIER else Sign.MINUS
        line = closed_form_d0(ONE, spec, int(round(n[0])), sign)
        np.testing.assert_allclose(c.kinetic, line(c.v0), rtol=0, atol=1e-10)


def test_klein_curves_right_of_first_zero_momentum(curves_d0):
    spec, curves = curves_d0
    first = first_zero_momentum(ONE, spec)
    for c in curves:
        if c.branch.zone is Zone.KLEIN:
            assert c.v0.min() >= first - 1e-9


def test_odd_curves_independent_of_d(curves_d0, curves_d5):
    def odd_points(curves):
        pts = [p for c in curves if c.branch.parity is Parity.ODD for p in c.points]
        return np.array(sorted(pts))

    a, b = odd_points(curves_d0[1]), odd_points(curves_d5[1])
    assert a.shape == b.shape
    np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)


def test_d5_curves(curves_d5):
    spec, curves = curves_d5
    _all_gated(spec, curves)
    zones = {c.branch.zone for c in curves if c.branch.parity is Parity.EVEN}
    assert Zone.NORMAL_TUNNELING in zones and Zone.KLEIN in zones
    connections, _ = stitch(ONE, curves)
    assert connections
    assert max(c.gap for c in connections) < 2 * curves[0].ek_step
    first = first_zero_momentum(ONE, spec)
    sub = [
        (v, e)
        for c in curves
        if c.branch.zone is Zone.KLEIN
        for v, e in c.points
        if 2.0 < v < first and 0 < e < v - 2.0
    ]
    assert sub


def test_intercepts_match_zero_points(curves_d5):
    spec, curves = curves_d5
    zeros = np.array(zero_resonance_points(ONE, spec, ZeroKind.ZERO_MOMENTUM, v0_limit=6.0))
    checked = 0
    for c in curves:
        if c.intercept_v0 is not None and c.branch.zone is Zone.KLEIN:
            assert np.min(np.abs(zeros - c.intercept_v0)) < 1e-6
            checked += 1
    assert checked


def test_empty_ranges():
    spec = DoubleBarrierSpec(0.0, A, 0.0)
    assert trace_curves(ONE, spec, (1.0, 1.0), (0.0, 1.0), grid=(10, 10)) == []
    with pytest.raises(ValueError):
        trace_curves(ONE, spec, (0.0, 1.0), (0.0, 1.0), grid=(1, 10))
