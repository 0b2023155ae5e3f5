import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kleinbarrier.errors import ConfigError, DegenerateMomentum
from kleinbarrier.kinematics import (
    DoubleBarrierSpec,
    ParticleSpec,
    Zone,
    bound_window,
    classify_zone,
    gamma,
    kinematics,
    momenta,
    trig_pair,
)

finite = st.floats(-20, 20, allow_nan=False)


def test_compton_wavelength():
    for m in (0.3, 1.0, 7.0):
        assert ParticleSpec(m).compton_wavelength * m == pytest.approx(2 * math.pi, rel=1e-15)
    with pytest.raises(ConfigError):
        ParticleSpec(0.0).compton_wavelength
    with pytest.raises(ConfigError) as err:
        ParticleSpec(-1.0)
    assert err.value.field == "m"


@pytest.mark.parametrize("kw,field", [({"width_a": 0.0}, "a"), ({"separation_d": -1.0}, "d"), ({"smoothing_eps": 0.0}, "eps")])
def test_spec_validation(kw, field):
    args = {"v0": 1.0, "width_a": 1.0, **kw}
    with pytest.raises(ConfigError) as err:
        DoubleBarrierSpec(**args)
    assert err.value.field == field


def test_momenta_examples():
    p1 = ParticleSpec(1.0)
    k, p = momenta(p1, 0.0, 0.5)
    assert k == pytest.approx(math.sqrt(1.25)) and p == k
    assert momenta(p1, 0.0, 0.0)[0] == 0
    _, p = momenta(p1, 1.0, 0.5)
    assert p.real == 0 and p.imag == pytest.approx(math.sqrt(0.75))


@settings(max_examples=300)
@given(m=st.floats(0, 5), v0=finite, ek=finite)
def test_branch_purity_and_squares(m, v0, ek):
    k, p = momenta(ParticleSpec(m), v0, ek)
    assert k.real * k.imag == 0 and p.real * p.imag == 0
    assert k.real >= 0 and k.imag >= 0 and p.real >= 0 and p.imag >= 0
    e = ek + m
    k2, p2 = e * e - m * m, (e - v0) ** 2 - m * m
    assert (k * k).real == pytest.approx(k2, rel=1e-12, abs=1e-12 * (1 + e * e))
    assert (p * p).real == pytest.approx(p2, rel=1e-12, abs=1e-12 * (1 + (e - v0) ** 2))


def test_gamma_examples():
    p1 = ParticleSpec(1.0)
    assert gamma(p1, 0.0, 0.5) == pytest.approx(1.0)
    g = gamma(p1, 4.0, 1.0)
    assert g.imag == 0 and g.real < 0
    k, p = momenta(p1, 4.0, 1.0)
    e = 2.0
    assert g * (e + 1) * p == pytest.approx((e + 1 - 4.0) * k, rel=1e-14)


@settings(max_examples=200)
@given(v0=finite, ek=st.floats(0.01, 20))
def test_massless_gamma_is_one(v0, ek):
    if abs(ek - v0) < 1e-6:
        return
    assert gamma(ParticleSpec(0.0), v0, ek) == 1


def test_gamma_degenerate():
    with pytest.raises(DegenerateMomentum):
        gamma(ParticleSpec(1.0), 1.0, 1.0)
    with pytest.raises(DegenerateMomentum):
        gamma(ParticleSpec(1.0), 3.0, 1.0)


def test_zone_examples():
    p1 = ParticleSpec(1.0)
    assert classify_zone(p1, 4.0, 1.0) is Zone.KLEIN
    assert classify_zone(p1, 1.0, 0.5) is Zone.NORMAL_TUNNELING
    assert classify_zone(p1, -1.0, -0.5) is Zone.BOUND_WINDOW
    # ties go to the propagating side
    assert classify_zone(p1, 1.0, 1.0) is Zone.ABOVE_BARRIER
    assert classify_zone(p1, 3.0, 1.0) is Zone.KLEIN


def _pattern(k, p):
    return (k.imag == 0, p.imag == 0)


def test_zone_matches_momentum_pattern_exhaustive():
    """Every interior grid point of each table row: label agrees with realness of (k, p)."""
    p1 = ParticleSpec(1.0)
    expect = {
        Zone.ABOVE_BARRIER: (True, True),
        Zone.NORMAL_TUNNELING: (True, False),
        Zone.KLEIN: (True, True),
        Zone.BOUND_WINDOW: (False, True),
    }
    seen = set()
    for v0 in np.linspace(-5.03, 5.07, 61):
        for ek in np.linspace(-4.01, 6.03, 71):
            z = classify_zone(p1, v0, ek)
            k, p = momenta(p1, v0, ek)
            seen.add(z)
            if z in expect:
                assert _pattern(k, p) == expect[z], (v0, ek, z)
            elif ek < 0:
                # Other: either both imaginary, k real below -2m, or both real in a deep well
                assert not (k.imag != 0 and p.imag == 0 and v0 < 0 and ek > v0)
    assert seen == set(Zone)


def test_klein_needs_supercritical_height():
    p1 = ParticleSpec(1.0)
    for v0 in np.linspace(0.1, 1.99, 20):
        for ek in np.linspace(0.01, 3, 30):
            assert classify_zone(p1, v0, ek) is not Zone.KLEIN


def test_bound_window():
    p1 = ParticleSpec(1.0)
    assert bound_window(p1, 1.0) is None
    assert bound_window(p1, -1.5) == (-1.5, 0.0)
    assert bound_window(p1, -3.0) == (-2.0, 0.0)


def test_kinematics_record():
    rec = kinematics(ParticleSpec(1.0), 4.0, 1.0)
    assert rec.energy_total == 2.0 and rec.zone is Zone.KLEIN and rec.gamma is not None
    assert kinematics(ParticleSpec(1.0), 1.0, 1.0).gamma is None


@settings(max_examples=200)
@given(sq=st.floats(-50, 50), length=st.floats(0.0, 10))
def test_trig_pair_matches_complex(sq, length):
    c, s = trig_pair(sq, length)
    root = np.sqrt(complex(sq))
    if abs(root) * length > 30:
        return
    assert c == pytest.approx(np.cos(root * length).real, rel=1e-12, abs=1e-12)
    ref = length if root == 0 else (np.sin(root * length) / root).real
    assert s == pytest.approx(ref, rel=1e-10, abs=1e-12)
