"""Bound states of the double well, half-bound and supercritical thresholds.

Below the continuum the free momentum is k = i kappa and a bound state is a
zero of M1. With delta = (E + m - V0) kappa / ((E + m) p) this reads

    cos(pa) + 1/2 [(delta - 1/delta) +/- (delta + 1/delta) exp(-kappa d)] sin(pa) = 0.

Multiplying out delta gives the equivalent form

    G_+/- = C_p + S_p [kappa^2 + V0 (E -/+ m exp(-kappa d))] / kappa

(``C_p, S_p`` = cos(pa), sin(pa)/p). G_+ is regular at E_k = 0 and G_- at
E_k = -2m; the scan functions below rescale each branch by the factor
that removes the remaining 1/kappa pole, so both are finite on the closed
window and bisection can run right up to the edges.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import _roots
from .errors import InvalidGeometry, ZoneMismatch
from .kinematics import DoubleBarrierSpec, ParticleSpec, bound_window, momentum_squares, trig_pair
from .transfer import _barrier_term_scales, _double_entries

M1_GATE = 1e-10
# |M1| itself carries a factor exp(-2 kappa a), so deep levels pass the absolute
# gate trivially; the scale-free version divides by the size of its terms
M1_REL_GATE = 1e-8


class BoundBranch(str, enum.Enum):
    PLUS = "Plus"
    MINUS = "Minus"


class ThresholdKind(str, enum.Enum):
    HALF_BOUND = "HalfBound"
    SUPERCRITICAL = "Supercritical"


@dataclass
class BoundSpectrum:
    branch: BoundBranch
    v0: np.ndarray
    kinetic: np.ndarray
    kappa: np.ndarray
    delta: np.ndarray
    m1_abs: np.ndarray
    m1_rel: np.ndarray
    rejected: int = 0

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.v0.tolist(), self.kinetic.tolist()))

    def __len__(self):
        return self.v0.size


@dataclass(frozen=True)
class Threshold:
    v0: float
    branch: BoundBranch
    family: str  # "even" (d-dependent cot condition) or "odd" (sin(pa) = 0)


def _expm1_over_kappa(kappa, sep):
    """(exp(-kappa d) - 1) / kappa, equal to -d at kappa = 0."""
    kappa = np.asarray(kappa, dtype=float)
    safe = np.where(kappa == 0.0, 1.0, kappa)
    return np.where(kappa == 0.0, -sep, np.expm1(-safe * sep) / safe)


def _pieces(mass, v0, width, kinetic):
    kinetic = np.asarray(kinetic, dtype=float)
    r = np.sqrt(np.maximum(-kinetic, 0.0))
    s = np.sqrt(np.maximum(kinetic + 2.0 * mass, 0.0))
    _, p2 = momentum_squares(mass, v0, kinetic)
    cp, sp = trig_pair(p2, width)
    return r, s, cp, sp


def bound_scan_function(mass, v0, width, sep, kinetic, branch):
    """Regular multiple of G_+/- on -2m <= E_k <= 0: sqrt(E_k + 2m) G_+ or sqrt(-E_k) G_-."""
    r, s, cp, sp = _pieces(mass, v0, width, kinetic)
    e1 = _expm1_over_kappa(r * s, sep)
    if BoundBranch(branch) is BoundBranch.PLUS:
        return s * cp + sp * (r * (s * s - v0) - v0 * mass * s * e1)
    return r * cp + sp * (r * r * s + v0 * s + v0 * mass * r * e1)


def single_well_scan_function(mass, v0, width, kinetic):
    """kappa * [C_p + S_p (kappa^2 + V0 E) / kappa]: the d -> infinity limit of both branches."""
    r, s, cp, sp = _pieces(mass, v0, width, kinetic)
    kappa = r * s
    return kappa * cp + sp * (kappa * kappa + v0 * (np.asarray(kinetic, dtype=float) + mass))


def _check_window(particle, v0, kinetic):
    win = bound_window(particle, v0)
    ek = np.asarray(kinetic, dtype=float)
    if win is None or np.any(ek <= win[0]) or np.any(ek >= win[1]):
        raise ZoneMismatch(f"kinetic={kinetic!r} is outside the bound window {win} for v0={v0!r}")


def bound_residual(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, branch: BoundBranch, v0=None):
    """cos(pa) + 1/2 [(delta - 1/delta) +/- (delta + 1/delta) e^{-kappa d}] sin(pa).

    Evaluated as C_p + S_p [kappa^2 + V0 (E -/+ m e^{-kappa d})] / kappa, which
    is the same number without the 0/0 at delta -> 0.
    """
    v0 = spec.v0 if v0 is None else v0
    _check_window(particle, v0, kinetic)
    m = particle.mass
    r, s, cp, sp = _pieces(m, v0, spec.width_a, kinetic)
    kappa = r * s
    ek = np.asarray(kinetic, dtype=float)
    tail = np.expm1(-kappa * spec.separation_d)
    if BoundBranch(branch) is BoundBranch.PLUS:
        inner = ek - m * tail
    else:
        inner = ek + 2.0 * m + m * tail
    return (cp + sp * (kappa * kappa + v0 * inner) / kappa)[()]


def kappa_delta(particle: ParticleSpec, v0, kinetic):
    """(kappa, delta) with k = i kappa and gamma = i delta, both > 0 inside the window."""
    m = particle.mass
    ek = np.asarray(kinetic, dtype=float)
    kappa = np.sqrt(np.maximum(-ek * (ek + 2.0 * m), 0.0))
    _, p2 = momentum_squares(m, v0, ek)
    p = np.sqrt(np.maximum(p2, 0.0))
    with np.errstate(divide="ignore", invalid="ignore"):
        delta = (ek + 2.0 * m - v0) * kappa / ((ek + 2.0 * m) * p)
    return kappa, delta


def m1_modulus(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """|M1| from the composed complex transfer matrix at k = i kappa."""
    v0 = spec.v0 if v0 is None else v0
    big1, _, _, _ = _double_entries(particle.mass, v0, spec.width_a, spec.separation_d, kinetic)
    return np.abs(big1)[()]


def m1_relative(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """|M1| over the summed magnitudes of the exponential terms that make it up.

    M1 = m1^2 + m2 m3 exp(2ik(a+d)) with each m_i a sum of two exponentials;
    a bound state needs these terms to cancel, whether the cancellation is
    between the two products (close wells) or inside m1 itself (far wells).
    """
    v0 = spec.v0 if v0 is None else v0
    a, d = spec.width_a, spec.separation_d
    big1, _, _, _ = _double_entries(particle.mass, v0, a, d, kinetic)
    s1, s2, s3, k = _barrier_term_scales(particle.mass, v0, a, kinetic)
    scale = s1 * s1 + s2 * s3 * np.abs(np.exp(2j * k * (a + d)))
    return (np.abs(big1) / scale)[()]


# ---------------------------------------------------------------- spectrum


def _window_nodes(mass, v0, n, edge_refine=100):
    """E_k nodes covering the closed bound window, denser (x edge_refine) in the end cells."""
    lo, hi = max(v0, -2.0 * mass), 0.0
    base = np.linspace(lo, hi, n)
    head = np.linspace(base[0], base[1], edge_refine + 1)[1:-1]
    tail = np.linspace(base[-2], base[-1], edge_refine + 1)[1:-1]
    return np.concatenate([base[:1], head, base[1:-1], tail, base[-1:]])


def window_roots(particle: ParticleSpec, spec: DoubleBarrierSpec, branch, v0=None, n_grid=2000):
    """All eigenvalues of one branch at fixed V0, strictly inside the bound window."""
    v0 = spec.v0 if v0 is None else float(v0)
    if bound_window(particle, v0) is None:
        return np.empty(0)
    m = particle.mass
    nodes = _window_nodes(m, v0, n_grid)

    def f(e):
        return bound_scan_function(m, v0, spec.width_a, spec.separation_d, e, branch)

    roots = _roots.roots_on_grid(f, nodes)
    lo = max(v0, -2.0 * m)
    return roots[(roots > lo) & (roots < 0.0)]


def spectrum(
    particle: ParticleSpec,
    spec: DoubleBarrierSpec,
    v0_range: tuple[float, float],
    grid: tuple[int, int] = (400, 2000),
    branches=(BoundBranch.PLUS, BoundBranch.MINUS),
    verify: bool = True,
) -> list[BoundSpectrum]:
    """Bound-state curves E_k(V0) of both branches over a range of well depths.

    Each V0 column is scanned over the whole window (with the end cells
    refined) and roots are chained across columns. With ``verify`` every
    point is re-checked against |M1| < 1e-10 from the transfer matrix;
    failures are dropped and counted.
    """
    if particle.mass <= 0.0:
        raise InvalidGeometry("bound states need mass > 0")
    v_lo, v_hi = map(float, v0_range)
    if not v_lo < v_hi or v_hi > 0.0:
        raise ZoneMismatch("v0_range must be a non-empty interval of well depths (v0 < 0)")
    nv, ne = grid
    v0s = np.linspace(v_lo, min(v_hi, -1e-12), nv)
    h_v = (v0s[-1] - v0s[0]) / max(nv - 1, 1)
    m, a, d = particle.mass, spec.width_a, spec.separation_d
    out = []
    for branch in branches:
        branch = BoundBranch(branch)
        columns = [window_roots(particle, spec, branch, v, ne) for v in v0s]
        h_e = 2.0 * m / ne

        def tol(dx, slope):
            return 2.0 * h_e + abs(dx) * (1.0 + min(abs(slope), 20.0))

        def refine(v, lo, hi, branch=branch):
            w_lo = max(v, -2.0 * m)
            lo, hi = max(lo, w_lo), min(hi, 0.0)
            if hi <= lo:
                return np.empty(0)
            r = _roots.roots_on_grid(lambda e: bound_scan_function(m, v, a, d, e, branch), np.linspace(lo, hi, 64))
            return r[(r > w_lo) & (r < 0.0)]

        def slope(v, e, branch=branch):
            de = 1e-6 * m
            dv = 1e-6 * max(1.0, abs(v))
            fv = (bound_scan_function(m, v + dv, a, d, e, branch) - bound_scan_function(m, v - dv, a, d, e, branch)) / (2 * dv)
            fe = (bound_scan_function(m, v, a, d, e + de, branch) - bound_scan_function(m, v, a, d, e - de, branch)) / (2 * de)
            return float(np.clip(-fv / fe, -50.0, 50.0)) if fe != 0.0 else 0.0

        for raw in _roots.chain(columns, v0s, tol, refine, slope):
            pts = np.asarray(raw)
            out.append(_finish(particle, spec, branch, pts, verify))
    return [s for s in out if len(s)]


def _finish(particle, spec, branch, pts, verify):
    v, e = pts[:, 0], pts[:, 1]
    if verify:
        m1 = np.atleast_1d(m1_modulus(particle, spec, e, v))
        rel = np.atleast_1d(m1_relative(particle, spec, e, v))
        keep = (m1 < M1_GATE) & (rel < M1_REL_GATE)
    else:
        m1 = rel = np.full(v.shape, np.nan)
        keep = np.ones(v.shape, dtype=bool)
    kappa, delta = kappa_delta(particle, v, e)
    return BoundSpectrum(branch, v[keep], e[keep], kappa[keep], delta[keep], m1[keep], rel[keep], int((~keep).sum()))


# -------------------------------------------------------------- thresholds


def _sin_family(mass, width, v0_limit, shift):
    """|V0| with p a = n pi where p^2 = |V0| (|V0| + shift), shift = +2m or -2m."""
    out = []
    n = 1
    while True:
        q = n * math.pi / width
        mag = -0.5 * shift + math.sqrt(0.25 * shift * shift + q * q)
        if mag > v0_limit:
            return out
        out.append(-mag)
        n += 1


def _cot_family(mass, width, sep, lo, hi, shift, sign, n_grid):
    """Roots of cot(p a) = sign * m d sqrt(|V0|) / sqrt(|V0| + shift), p^2 = |V0| (|V0| + shift).

    Cross-multiplied to cos(pa) sqrt(|V0| + shift) - sign m d sqrt(|V0|) sin(pa).
    """

    def f(mag):
        root = np.sqrt(np.maximum(mag + shift, 0.0))
        pa = np.sqrt(mag) * root * width
        return np.cos(pa) * root - sign * mass * sep * np.sqrt(mag) * np.sin(pa)

    grid = np.linspace(lo, hi, n_grid)
    mags = _roots.roots_on_grid(f, grid, refine=100)
    pa = np.sqrt(mags * np.maximum(mags + shift, 0.0)) * width
    # a common zero of sin and cos is impossible, but p = 0 at the grid end is not a state
    return [-float(x) for x in mags[pa > 0.0]]


def thresholds(
    particle: ParticleSpec,
    spec: DoubleBarrierSpec,
    kind: ThresholdKind,
    v0_limit: float | None = None,
    n_grid: int = 20000,
) -> list[Threshold]:
    """Well depths whose spectrum touches a window edge.

    HalfBound (E_k = 0): the Plus branch meets it where
    cot(pa) = m d sqrt(|V0|) / sqrt(|V0| + 2m), the Minus branch where
    sin(pa) = 0. Supercritical (E_k = -2m): Plus where sin(pa) = 0, Minus
    where cot(pa) = -m d sqrt(|V0|) / sqrt(|V0| - 2m). The minus sign in the
    last condition is what the E_k -> -2m limit of the eigenvalue equation
    gives. Results cover depths |V0| <= v0_limit (default 8m), sorted by depth.
    """
    m = particle.mass
    if m <= 0.0:
        raise InvalidGeometry("thresholds need mass > 0")
    limit = 8.0 * m if v0_limit is None else float(v0_limit)
    a, d = spec.width_a, spec.separation_d
    kind = ThresholdKind(kind)
    out = []
    if kind is ThresholdKind.HALF_BOUND:
        for v in _cot_family(m, a, d, 0.0, limit, 2.0 * m, 1.0, n_grid):
            out.append(Threshold(v, BoundBranch.PLUS, "even"))
        for v in _sin_family(m, a, limit, 2.0 * m):
            out.append(Threshold(v, BoundBranch.MINUS, "odd"))
    else:
        for v in _sin_family(m, a, limit, -2.0 * m):
            out.append(Threshold(v, BoundBranch.PLUS, "odd"))
        for v in _cot_family(m, a, d, 2.0 * m, limit, -2.0 * m, -1.0, n_grid):
            out.append(Threshold(v, BoundBranch.MINUS, "even"))
    out.sort(key=lambda t: -t.v0)
    return out


def crossing_angle(particle: ParticleSpec, spec: DoubleBarrierSpec, threshold: Threshold) -> float:
    """Angle (degrees) between a spectrum curve and the E_k = -2m axis at a supercritical point.

    90 means the curve meets the axis transversally at right angles, values
    near 0 mean it arrives tangentially.
    """
    m, a, d = particle.mass, spec.width_a, spec.separation_d
    v, e = threshold.v0, -2.0 * m
    branch = threshold.branch
    dv = 1e-6 * max(1.0, abs(v))
    de = 1e-7 * m

    def f(ek, vv):
        return bound_scan_function(m, vv, a, d, ek, branch)

    fv = (f(e, v + dv) - f(e, v - dv)) / (2.0 * dv)
    fe = (f(e + de, v) - f(e, v)) / de  # one-sided: the window ends at -2m
    return math.degrees(math.atan2(abs(fv), abs(fe)))


def level_splitting(particle: ParticleSpec, spec: DoubleBarrierSpec, v0: float, n_grid: int = 4000):
    """Pair Plus and Minus eigenvalues level by level at fixed V0.

    Returns a list of (e_plus, e_minus) sorted from the deepest level; levels
    where the two branches do not pair one to one are skipped.
    """
    plus = window_roots(particle, spec, BoundBranch.PLUS, v0, n_grid)
    minus = window_roots(particle, spec, BoundBranch.MINUS, v0, n_grid)
    pairs = []
    for ep in plus:
        if minus.size == 0:
            break
        j = int(np.argmin(np.abs(minus - ep)))
        back = int(np.argmin(np.abs(plus - minus[j])))
        if plus[back] == ep:
            pairs.append((float(ep), float(minus[j])))
    return pairs


def single_well_roots(particle: ParticleSpec, width: float, v0: float, n_grid: int = 4000):
    """Bound levels of one well of the given width."""
    if bound_window(particle, v0) is None:
        return np.empty(0)
    m = particle.mass
    nodes = _window_nodes(m, v0, n_grid)
    roots = _roots.roots_on_grid(lambda e: single_well_scan_function(m, v0, width, e), nodes)
    lo = max(v0, -2.0 * m)
    return roots[(roots > lo) & (roots < 0.0)]
