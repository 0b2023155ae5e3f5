import math

import numpy as np
import pytest

from kleinbarrier.bound import (
    M1_GATE,
    M1_REL_GATE,
    BoundBranch,
    ThresholdKind,
    bound_residual,
    crossing_angle,
    kappa_delta,
    level_splitting,
    m1_modulus,
    m1_relative,
    single_well_roots,
    spectrum,
    thresholds,
    window_roots,
)
from kleinbarrier.errors import ZoneMismatch
from kleinbarrier.kinematics import DoubleBarrierSpec, ParticleSpec
from kleinbarrier.resonance import Parity, ZeroKind, zero_resonance_points

ONE = ParticleSpec(1.0)
LAM = ONE.compton_wavelength
A = 2.5 * LAM

# frozen: m=1, a=2.5 lambda, d=lambda, V0=-1.2, deepest three levels per branch
LEVELS = {
    BoundBranch.PLUS: [-1.1820978326611287, -1.1303320042678875, -1.0496157032574063],
    BoundBranch.MINUS: [-1.1821051238331735, -1.1303584477872035, -1.0496685354321271],
}


@pytest.mark.parametrize("branch", list(BoundBranch))
def test_frozen_levels(branch):
    spec = DoubleBarrierSpec(-1.2, A, LAM)
    roots = window_roots(ONE, spec, branch)
    assert roots.size == 10
    np.testing.assert_allclose(roots[:3], LEVELS[branch], rtol=0, atol=1e-12)
    assert np.all(m1_modulus(ONE, spec, roots) < M1_GATE)
    assert np.all(m1_relative(ONE, spec, roots) < M1_REL_GATE)


def test_relative_gate_rejects_non_roots():
    spec = DoubleBarrierSpec(-1.2, A, LAM)
    off = np.array(LEVELS[BoundBranch.PLUS]) + 2e-3
    assert np.all(m1_relative(ONE, spec, off) > 1e-4)


def test_bound_residual_and_window():
    spec = DoubleBarrierSpec(-1.2, A, LAM)
    for branch, levels in LEVELS.items():
        for e in levels:
            assert abs(bound_residual(ONE, spec, e, branch)) < 1e-9
    with pytest.raises(ZoneMismatch):
        bound_residual(ONE, spec, 0.3, BoundBranch.PLUS)
    with pytest.raises(ZoneMismatch):
        bound_residual(ONE, DoubleBarrierSpec(1.0, A), -0.3, BoundBranch.PLUS)
    kappa, delta = kappa_delta(ONE, -1.2, -0.5)
    assert kappa == pytest.approx(math.sqrt(0.5 * 1.5)) and delta > 0


def test_far_wells_decouple():
    spec = DoubleBarrierSpec(-1.2, A, 50 * LAM)
    single = single_well_roots(ONE, A, -1.2)
    for branch in BoundBranch:
        roots = window_roots(ONE, spec, branch)
        assert roots.size == single.size
        np.testing.assert_allclose(roots, single, rtol=0, atol=1e-8)


@pytest.mark.parametrize("v0", [-0.4, -1.2, -3.5])
def test_merged_wells(v0):
    spec = DoubleBarrierSpec(v0, A, 0.0)
    wide = single_well_roots(ONE, 2 * A, v0)
    both = np.sort(np.concatenate([window_roots(ONE, spec, b) for b in BoundBranch]))
    np.testing.assert_allclose(both, wide, rtol=0, atol=1e-10)


def test_splitting_shrinks_with_separation():
    gaps = []
    for d in (0.5 * LAM, LAM, 2 * LAM, 4 * LAM):
        pairs = level_splitting(ONE, DoubleBarrierSpec(-1.2, A, d), -1.2)
        ep, em = pairs[-1]  # shallowest level, largest splitting
        gaps.append(abs(ep - em))
    assert all(x > y for x, y in zip(gaps, gaps[1:]))


def test_splitting_decays_exponentially():
    ds = np.array([1.0, 1.5, 2.0, 2.5, 3.0]) * LAM
    gaps, kappas = [], []
    for d in ds:
        ep, em = level_splitting(ONE, DoubleBarrierSpec(-1.2, A, d), -1.2)[-1]
        gaps.append(abs(ep - em))
        kappas.append(kappa_delta(ONE, -1.2, 0.5 * (ep + em))[0])
    slope, icpt = np.polyfit(ds, np.log(gaps), 1)
    fit = np.exp(icpt + slope * ds)
    assert np.max(np.abs(fit - gaps) / gaps) < 0.05
    assert slope == pytest.approx(-np.mean(kappas), rel=0.05)


def test_spectrum_points_pass_gate():
    spec = DoubleBarrierSpec(0.0, A, LAM)
    curves = spectrum(ONE, spec, (-3.0, -0.05), grid=(60, 1000))
    assert {c.branch for c in curves} == set(BoundBranch)
    for c in curves:
        assert np.all(c.m1_abs < M1_GATE) and np.all(c.m1_rel < M1_REL_GATE)
        assert np.all(c.kinetic < 0) and np.all(c.kinetic > np.maximum(c.v0, -2.0))
        assert np.all(c.kappa > 0) and np.all(c.delta > 0)


def test_spectrum_rejects_barriers():
    with pytest.raises(ZoneMismatch):
        spectrum(ONE, DoubleBarrierSpec(0.0, A, LAM), (0.5, 1.0))


@pytest.mark.parametrize("d", [0.0, LAM, 5 * LAM])
def test_half_bound_matches_zero_energy(d):
    spec = DoubleBarrierSpec(0.0, A, d)
    hb = thresholds(ONE, spec, ThresholdKind.HALF_BOUND, v0_limit=6.0)
    ze = zero_resonance_points(ONE, spec, ZeroKind.ZERO_ENERGY, v0_limit=6.0)
    got = np.sort([t.v0 for t in hb])
    np.testing.assert_allclose(got, np.sort(ze), rtol=0, atol=1e-8)


@pytest.mark.parametrize("d", [0.0, LAM, 5 * LAM])
def test_supercritical_matches_zero_momentum(d):
    spec = DoubleBarrierSpec(0.0, A, d)
    sc = [t.v0 for t in thresholds(ONE, spec, ThresholdKind.SUPERCRITICAL, v0_limit=6.0) if t.family == "even"]
    zm = zero_resonance_points(ONE, spec, ZeroKind.ZERO_MOMENTUM, parity=Parity.EVEN, v0_limit=6.0)
    np.testing.assert_allclose(-np.sort(sc)[::-1], np.sort(zm), rtol=0, atol=1e-8)


def test_threshold_trends():
    first = []
    odd = []
    for d in (0.0, LAM, 5 * LAM):
        spec = DoubleBarrierSpec(0.0, A, d)
        sc = thresholds(ONE, spec, ThresholdKind.SUPERCRITICAL)
        first.append(max(t.v0 for t in sc if t.family == "even"))
        odd.append([t.v0 for t in sc if t.family == "odd"])
    # deeper well needed for the first even supercritical state as d grows
    assert first[0] > first[1] > first[2]
    assert odd[0] == odd[1] == odd[2]


def test_half_bound_is_where_levels_appear():
    spec = DoubleBarrierSpec(0.0, A, LAM)
    for t in thresholds(ONE, spec, ThresholdKind.HALF_BOUND)[:6]:
        deeper = window_roots(ONE, spec, t.branch, v0=t.v0 - 1e-7)
        shallower = window_roots(ONE, spec, t.branch, v0=t.v0 + 1e-7)
        assert deeper.size == shallower.size + 1
        assert -1e-6 < deeper[-1] < 0


def test_supercritical_is_where_levels_dive():
    spec = DoubleBarrierSpec(0.0, A, LAM)
    for t in thresholds(ONE, spec, ThresholdKind.SUPERCRITICAL)[:4]:
        before = window_roots(ONE, spec, t.branch, v0=t.v0 + 1e-6)
        after = window_roots(ONE, spec, t.branch, v0=t.v0 - 1e-6)
        assert before.size == after.size + 1
        assert before[0] < -2.0 + 1e-4
        angle = crossing_angle(ONE, spec, t)
        assert 0.0 <= angle <= 90.0
