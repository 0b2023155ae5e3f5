"""Transfer matrices and transmission through the double barrier.

The matrices relate plane-wave coefficients (A, B) of the spinors
``(1, -i k/(E+m)) exp(ikx)`` and ``(1, i k/(E+m)) exp(-ikx)`` on the left of a
barrier to those on its right. A single complex-arithmetic path covers every
energy zone; imaginary momenta simply make the exponentials real.

All public functions broadcast over array-valued ``kinetic`` (and the optional
``v0`` override), so grid sweeps need no Python loops.
"""

from __future__ import annotations

from dataclasses import dataclass

import mpmath
import numpy as np

from .errors import DegenerateMomentum, InvalidGeometry, InvalidState, SingularSystem
from .kinematics import DoubleBarrierSpec, ParticleSpec, _matching_ratio, momenta, momentum_squares, trig_pair

# below this |p| the matching ratio has a removable 1/p singularity
DEGENERATE_P = 1e-9


@dataclass(frozen=True)
class TransferMatrix2:
    m11: complex
    m12: complex
    m21: complex
    m22: complex

    def as_array(self) -> np.ndarray:
        return np.array([[self.m11, self.m12], [self.m21, self.m22]])

    def __matmul__(self, other: "TransferMatrix2") -> "TransferMatrix2":
        a, b = self.as_array(), other.as_array()
        c = a @ b
        return TransferMatrix2(c[0, 0], c[0, 1], c[1, 0], c[1, 1])


@dataclass(frozen=True)
class ScatteringResult:
    transmission: float
    reflection: float
    m_big: TransferMatrix2


def _v0(spec, v0):
    return spec.v0 if v0 is None else v0


def _barrier_entries(mass, v0, width, kinetic):
    """Entries m1..m4 of the single-barrier matrix, literally as derived from continuity."""
    k, p = momenta(ParticleSpec(mass), v0, kinetic)
    if np.any(np.abs(p) < DEGENERATE_P):
        raise DegenerateMomentum("potential-region momentum vanishes (zone boundary)")
    g = _matching_ratio(mass, v0, kinetic, k, p)
    plus = g + 1.0 / g
    minus = g - 1.0 / g
    ka, pa = k * width, p * width
    m1 = 0.25 * ((2.0 + plus) * np.exp(1j * (ka - pa)) + (2.0 - plus) * np.exp(1j * (ka + pa)))
    m2 = 0.25 * (-minus * np.exp(-1j * (ka + pa)) + minus * np.exp(1j * (-ka + pa)))
    m3 = 0.25 * (minus * np.exp(1j * (ka - pa)) - minus * np.exp(1j * (ka + pa)))
    m4 = 0.25 * ((2.0 - plus) * np.exp(-1j * (ka + pa)) + (2.0 + plus) * np.exp(1j * (-ka + pa)))
    return m1, m2, m3, m4, k


def _barrier_term_scales(mass, v0, width, kinetic):
    """Sum of |term| over the two exponentials in each of m1, m2, m3 (same layout as ``_barrier_entries``)."""
    k, p = momenta(ParticleSpec(mass), v0, kinetic)
    g = _matching_ratio(mass, v0, kinetic, k, p)
    plus = g + 1.0 / g
    minus = np.abs(g - 1.0 / g)
    ka, pa = k * width, p * width
    s1 = 0.25 * (np.abs(2.0 + plus) * np.abs(np.exp(1j * (ka - pa))) + np.abs(2.0 - plus) * np.abs(np.exp(1j * (ka + pa))))
    s2 = 0.25 * minus * (np.abs(np.exp(-1j * (ka + pa))) + np.abs(np.exp(1j * (-ka + pa))))
    s3 = 0.25 * minus * (np.abs(np.exp(1j * (ka - pa))) + np.abs(np.exp(1j * (ka + pa))))
    return s1, s2, s3, k


def _double_entries(mass, v0, width, sep, kinetic):
    m1, m2, m3, m4, k = _barrier_entries(mass, v0, width, kinetic)
    phase = np.exp(1j * k * (2.0 * sep + 2.0 * width))
    big1 = m1 * m1 + m2 * m3 * phase
    big2 = m1 * m2 / phase + m2 * m4
    big3 = m1 * m3 + m3 * m4 * phase
    big4 = m2 * m3 / phase + m4 * m4
    return big1, big2, big3, big4


def single_barrier_matrix(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None) -> TransferMatrix2:
    m1, m2, m3, m4, _ = _barrier_entries(particle.mass, _v0(spec, v0), spec.width_a, kinetic)
    return TransferMatrix2(m1[()], m2[()], m3[()], m4[()])


def double_barrier_matrix(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None) -> TransferMatrix2:
    entries = _double_entries(particle.mass, _v0(spec, v0), spec.width_a, spec.separation_d, kinetic)
    return TransferMatrix2(*(e[()] for e in entries))


def _interp_step(mass, v0, kinetic):
    scale = max(1.0, mass, abs(v0))
    return min(1e-6 * scale, 0.25 * kinetic)


def _double_entries_regular(mass, v0, width, sep, kinetic):
    """Like _double_entries, but bridges p = 0 with a symmetric 4-point stencil.

    The entries are analytic in E across the removable singularity, so
    f(0) ~ [4(f(h) + f(-h)) - (f(2h) + f(-2h))] / 6 is exact through cubics.
    """
    kinetic = np.atleast_1d(np.asarray(kinetic, dtype=float))
    v0 = np.broadcast_to(np.asarray(v0, dtype=float), kinetic.shape)
    _, p = momenta(ParticleSpec(mass), v0, kinetic)
    bad = np.abs(p) < DEGENERATE_P
    out = [np.empty(kinetic.shape, dtype=complex) for _ in range(4)]
    good = ~bad
    if np.any(good):
        for slot, val in zip(out, _double_entries(mass, v0[good], width, sep, kinetic[good])):
            slot[good] = val
    for idx in zip(*np.nonzero(bad)):
        ek, vv = float(kinetic[idx]), float(v0[idx])
        h = _interp_step(mass, vv, ek)
        near = [_double_entries(mass, vv, width, sep, ek + s * h) for s in (1, -1)]
        far = [_double_entries(mass, vv, width, sep, ek + s * h) for s in (2, -2)]
        for j in range(4):
            out[j][idx] = (4.0 * (near[0][j] + near[1][j]) - (far[0][j] + far[1][j])) / 6.0
    return out


def transmission_coefficients(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """Vectorized (T, R) = (|1/M1|^2, |M3/M1|^2) for scattering states."""
    kinetic_arr = np.asarray(kinetic, dtype=float)
    if np.any(~(kinetic_arr > 0.0)):
        raise InvalidState("transmission needs kinetic > 0 (scattering state)")
    vv = _v0(spec, v0)
    big1, _, big3, _ = _double_entries_regular(particle.mass, vv, spec.width_a, spec.separation_d, kinetic_arr)
    t = 1.0 / np.abs(big1) ** 2
    r = np.abs(big3) ** 2 * t
    shape = np.broadcast(kinetic_arr, np.asarray(vv)).shape
    return t.reshape(shape)[()], r.reshape(shape)[()]


def transmission(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic: float, v0=None) -> ScatteringResult:
    if not kinetic > 0.0:
        raise InvalidState(f"transmission needs kinetic > 0, got {kinetic!r}")
    vv = _v0(spec, v0)
    big = [e[0] for e in _double_entries_regular(particle.mass, vv, spec.width_a, spec.separation_d, kinetic)]
    t = 1.0 / abs(big[0]) ** 2
    return ScatteringResult(
        transmission=float(t),
        reflection=float(abs(big[2]) ** 2 * t),
        m_big=TransferMatrix2(*big),
    )


def single_barrier_transmission(particle: ParticleSpec, width: float, v0, kinetic):
    """T of one barrier of the given width (no second barrier)."""
    m1, _, _, _, _ = _barrier_entries(particle.mass, v0, width, kinetic)
    return (1.0 / np.abs(m1) ** 2)[()]


def transmission_extended(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic: float, v0=None, dps=None) -> float:
    """|1/M1|^2 from the same entries and composition, in mpmath arithmetic.

    In the tunneling zone |M1| ~ 1 is the difference of terms of size
    exp(2 q a), so double precision loses about 4 q a / ln 10 digits of
    1 - T. The working precision defaults to that loss plus 30 digits.
    """
    vv = float(_v0(spec, v0))
    m, ek = particle.mass, float(kinetic)
    if not ek > 0.0:
        raise InvalidState(f"transmission needs kinetic > 0, got {kinetic!r}")
    _, p = momenta(particle, vv, ek)
    if abs(p) < DEGENERATE_P:
        raise DegenerateMomentum("potential-region momentum vanishes (zone boundary)")
    if dps is None:
        dps = 30 + int(4.0 * abs(np.imag(p)) * spec.width_a / np.log(10.0))
    with mpmath.workdps(dps):
        e = mpmath.mpf(ek) + m
        k = mpmath.sqrt(e * e - m * m)
        p2 = (e - vv) ** 2 - m * m
        p = mpmath.sqrt(p2) if p2 >= 0 else mpmath.mpc(0, mpmath.sqrt(-p2))
        g = (e + m - vv) / (e + m) * k / p
        plus, minus = g + 1 / g, g - 1 / g
        a, d = mpmath.mpf(spec.width_a), mpmath.mpf(spec.separation_d)
        j = mpmath.mpc(0, 1)
        m1 = ((2 + plus) * mpmath.exp(j * (k - p) * a) + (2 - plus) * mpmath.exp(j * (k + p) * a)) / 4
        m2 = (-minus * mpmath.exp(-j * (k + p) * a) + minus * mpmath.exp(j * (p - k) * a)) / 4
        m3 = (minus * mpmath.exp(j * (k - p) * a) - minus * mpmath.exp(j * (k + p) * a)) / 4
        big1 = m1 * m1 + m2 * m3 * mpmath.exp(2 * j * k * (d + a))
        return float(1 / abs(big1) ** 2)


# ---------------------------------------------------------------- oracles


def _oracle_system(mass, v0, a, d, kinetic):
    """Batched 8x8 continuity system with unknowns [B1, C1, D1, A2, B2, C2, D2, A3].

    Each barrier's waves are referenced to the edge they decay away from, so
    every coefficient in the matrix has modulus <= 1 even for evanescent p.
    """
    kinetic = np.atleast_1d(np.asarray(kinetic, dtype=float))
    n = kinetic.shape[0]
    v0 = np.broadcast_to(np.asarray(v0, dtype=float), (n,))
    a = np.broadcast_to(np.asarray(a, dtype=float), (n,))
    d = np.broadcast_to(np.asarray(d, dtype=float), (n,))
    energy = kinetic + mass
    k, p = momenta(ParticleSpec(mass), v0, kinetic)
    k = np.atleast_1d(k)
    p = np.atleast_1d(p)

    def free(sign):  # spinor of exp(sign * i k x)
        return np.stack([np.ones(n, complex), -sign * 1j * k / (energy + mass)], axis=-1)

    def inner(sign):
        return np.stack([np.ones(n, complex), -sign * 1j * p / (energy - v0 + mass)], axis=-1)

    fp, fm, bp, bm = free(1), free(-1), inner(1), inner(-1)
    epa = np.exp(1j * p * a)[:, None]
    mat = np.zeros((n, 8, 8), dtype=complex)
    rhs = np.zeros((n, 8), dtype=complex)
    x1, x2, x3 = a, a + d, 2.0 * a + d
    # x = 0: A1 u+ + B1 u- = C1 v+ + D1 v- e^{ipa}
    rhs[:, 0:2] = -fp
    mat[:, 0:2, 0] = fm
    mat[:, 0:2, 1] = -bp
    mat[:, 0:2, 2] = -bm * epa
    # x = a: C1 v+ e^{ipa} + D1 v- = A2 u+ e^{ika} + B2 u- e^{-ika}
    mat[:, 2:4, 1] = bp * epa
    mat[:, 2:4, 2] = bm
    mat[:, 2:4, 3] = -fp * np.exp(1j * k * x1)[:, None]
    mat[:, 2:4, 4] = -fm * np.exp(-1j * k * x1)[:, None]
    # x = a + d: A2 u+ e^{ik x2} + B2 u- e^{-ik x2} = C2 v+ + D2 v- e^{ipa}
    mat[:, 4:6, 3] = fp * np.exp(1j * k * x2)[:, None]
    mat[:, 4:6, 4] = fm * np.exp(-1j * k * x2)[:, None]
    mat[:, 4:6, 5] = -bp
    mat[:, 4:6, 6] = -bm * epa
    # x = 2a + d: C2 v+ e^{ipa} + D2 v- = A3 u+ e^{ik x3}
    mat[:, 6:8, 5] = bp * epa
    mat[:, 6:8, 6] = bm
    mat[:, 6:8, 7] = -fp * np.exp(1j * k * x3)[:, None]
    return mat, rhs


def oracle_coefficients(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """Solve the interface-matching system directly; returns the 8 coefficients per sample."""
    kinetic_arr = np.asarray(kinetic, dtype=float)
    if np.any(~(kinetic_arr > 0.0)):
        raise InvalidState("oracle needs kinetic > 0")
    mat, rhs = _oracle_system(particle.mass, _v0(spec, v0), spec.width_a, spec.separation_d, kinetic_arr)
    try:
        sol = np.linalg.solve(mat, rhs[..., None])[..., 0]
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(sol)):
        raise SingularSystem("non-finite solution of the matching system")
    return sol


def oracle_transmission(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    sol = oracle_coefficients(particle, spec, kinetic, v0)
    t = np.abs(sol[:, 7]) ** 2
    return t.reshape(np.shape(kinetic))[()] if np.ndim(kinetic) else float(t[0])


# ----------------------------------------------------- closed-form checks


def m1_closed_form(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """Closed form of M1 written through tanh(i p a).

    The (gamma + 1/gamma)^2 term carries a tanh^2 factor; without it the
    expression fails already at V0 = 0, where M1 must be 1.
    """
    vv = _v0(spec, v0)
    k, p = momenta(particle, vv, kinetic)
    g = _matching_ratio(particle.mass, vv, kinetic, k, p)
    a, d = spec.width_a, spec.separation_d
    # tanh(i p a) through exponentials: stable for large |Im(p)| a
    e2 = np.exp(-2j * p * a)
    th = (1.0 - e2) / (1.0 + e2)
    plus, minus = g + 1.0 / g, g - 1.0 / g
    cos2 = 0.25 * (np.exp(1j * p * a) + np.exp(-1j * p * a)) ** 2
    braces = (plus**2 - minus**2 * np.exp(2j * k * d)) * th**2 - 4.0 * plus * th + 4.0
    return (np.exp(2j * k * a) * cos2 * braces / 4.0)[()]


def transmission_real_p(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """T in zones with real p (above-barrier and Klein), real arithmetic only.

    The last bracket term uses sin(2kd); that is what |M1|^2 expands to.
    """
    vv = _v0(spec, v0)
    k, p = momenta(particle, vv, kinetic)
    if np.any(np.imag(p) != 0) or np.any(np.real(p) == 0):
        raise DegenerateMomentum("transmission_real_p needs real, non-zero p")
    k, p = np.real(k), np.real(p)
    g = np.real(_matching_ratio(particle.mass, vv, kinetic, k + 0j, p + 0j))
    a, d = spec.width_a, spec.separation_d
    s, c = np.sin(p * a), np.cos(p * a)
    plus, minus = g + 1.0 / g, g - 1.0 / g
    bracket = (
        plus**2 * s**2 * (1.0 - np.cos(2 * k * d)) / 8.0
        + c**2 * (np.cos(2 * k * d) + 1.0) / 2.0
        - plus * s * c * np.sin(2 * k * d) / 2.0
    )
    return (1.0 / (1.0 + minus**2 * s**2 * bracket))[()]


def transmission_imaginary_p(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """T in the normal-tunneling zone with p = iq, gamma = i delta."""
    vv = _v0(spec, v0)
    k, p = momenta(particle, vv, kinetic)
    if np.any(np.real(p) != 0) or np.any(np.imag(p) == 0):
        raise DegenerateMomentum("transmission_imaginary_p needs purely imaginary, non-zero p")
    k, q = np.real(k), np.imag(p)
    delta = np.imag(_matching_ratio(particle.mass, vv, kinetic, k + 0j, 1j * q))
    a, d = spec.width_a, spec.separation_d
    ep, em = np.exp(q * a), np.exp(-q * a)
    sk, ck = np.sin(k * d), np.cos(k * d)
    plus, minus = delta + 1.0 / delta, delta - 1.0 / delta
    bracket = (
        (ep + em) ** 2
        + 0.25 * plus**2 * (ep - em) ** 2 * sk**2
        + minus * (ep**2 - em**2) * sk * ck
        - 2.0 * (ep**2 + em**2) * sk**2
    )
    return (1.0 / (1.0 + plus**2 * (ep - em) ** 2 * bracket / 16.0))[()]


def transmission_regular(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """Pole-free real closed form of |1/M1|^2, valid in every scattering zone.

    With C = cos(pa), S = sin(pa)/p (cosh, sinh(qa)/q when p = iq) and the
    same pair for k over d:

        1/T = 1 + [2 V0 m S (C cos(kd) - S sin(kd)/k (k^2 - V0 E)) / k]^2
    """
    vv = _v0(spec, v0)
    m = particle.mass
    kinetic = np.asarray(kinetic, dtype=float)
    k2, p2 = momentum_squares(m, vv, kinetic)
    cp, sp = trig_pair(p2, spec.width_a)
    ck, sk = trig_pair(k2, spec.separation_d)
    half_res = cp * ck - sp * sk * (k2 - vv * (kinetic + m))
    amp = 2.0 * vv * m * sp * half_res / np.sqrt(k2)
    return (1.0 / (1.0 + amp**2))[()]


def schrodinger_transmission(mass: float, v0, width: float, sep: float, kinetic):
    """Non-relativistic double-barrier T from a layered interface/propagation product.

    Written independently of the Dirac matrices: psi and psi' continuity at
    each interface, waves of wavenumber sqrt(2 m (E - V)).
    """
    kinetic = np.atleast_1d(np.asarray(kinetic, dtype=float))
    v0 = np.broadcast_to(np.asarray(v0, dtype=float), kinetic.shape)
    if sep < 0 or width <= 0:
        raise InvalidGeometry("need width > 0, sep >= 0")
    edges = [0.0, width, width + sep, 2.0 * width + sep]
    pots = [np.zeros_like(v0), v0, np.zeros_like(v0), v0, np.zeros_like(v0)]
    wavenumbers = [np.sqrt(2.0 * mass * (kinetic - v).astype(complex)) for v in pots]
    total = np.broadcast_to(np.eye(2, dtype=complex), kinetic.shape + (2, 2)).copy()
    for x, kl, kr in zip(edges, wavenumbers[:-1], wavenumbers[1:]):
        # [A_l, B_l] = D_l(x)^{-1} D_r(x) [A_r, B_r], D(x) = [[e^{ikx}, e^{-ikx}], [ik e^{ikx}, -ik e^{-ikx}]]
        dl = _wave_matrix(kl, x)
        dr = _wave_matrix(kr, x)
        total = total @ np.linalg.solve(dl, dr)
    return (1.0 / np.abs(total[..., 0, 0]) ** 2)[()] if kinetic.size > 1 else float(1.0 / abs(total[0, 0, 0]) ** 2)


def _wave_matrix(k, x):
    ep, em = np.exp(1j * k * x), np.exp(-1j * k * x)
    out = np.empty(k.shape + (2, 2), dtype=complex)
    out[..., 0, 0], out[..., 0, 1] = ep, em
    out[..., 1, 0], out[..., 1, 1] = 1j * k * ep, -1j * k * em
    return out
