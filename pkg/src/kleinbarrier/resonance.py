"""Perfect-transmission conditions and resonance curves in the (V0, E_k) plane.

T = 1 exactly when either

* sin(pa) = 0 with p real (odd parity; independent of the separation d), or
* the even-parity residual 2 cos(pa) cos(kd) - (gamma + 1/gamma) sin(pa) sin(kd)
  vanishes.

The even residual is evaluated in the equivalent pole-free form
``2 [C_p C_k - S_p S_k (k^2 - V0 E)]`` with ``C = cos``, ``S = sin(x)/x``-type
ratios (see :func:`kleinbarrier.kinematics.trig_pair`). It is real and
continuous through the zone edges p = 0 and down to E_k = 0, which is what
lets one curve run from the above-barrier zone into the Klein zone.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import _roots
from .errors import DegenerateMomentum, InvalidGeometry, ZoneMismatch
from .kinematics import (
    DoubleBarrierSpec,
    ParticleSpec,
    Zone,
    _matching_ratio,
    momenta,
    momentum_squares,
    trig_pair,
    zone_interval,
)
from .transfer import transmission_coefficients, transmission_extended

PERFECT_T_GATE = 1.0 - 1e-8
SCATTERING_ZONES = (Zone.ABOVE_BARRIER, Zone.NORMAL_TUNNELING, Zone.KLEIN)


class Parity(str, enum.Enum):
    ODD = "Odd"
    EVEN = "Even"


class Sign(str, enum.Enum):
    PLUS = "Plus"
    MINUS = "Minus"


class ZeroKind(str, enum.Enum):
    ZERO_ENERGY = "ZeroEnergy"
    ZERO_MOMENTUM = "ZeroMomentum"


@dataclass(frozen=True)
class ResonanceBranch:
    parity: Parity
    zone: Zone


@dataclass
class ResonanceCurve:
    branch: ResonanceBranch
    v0: np.ndarray
    kinetic: np.ndarray
    transmission: np.ndarray
    index_n: int | None = None
    rejected: int = 0
    ek_step: float = 0.0
    intercept_v0: float | None = None

    @property
    def points(self) -> list[tuple[float, float]]:
        return list(zip(self.v0.tolist(), self.kinetic.tolist()))

    def __len__(self):
        return self.v0.size


@dataclass(frozen=True)
class AffineMap:
    """E_k = slope * V0 + offset."""

    slope: float
    offset: float

    def __call__(self, v0):
        return self.slope * np.asarray(v0, dtype=float) + self.offset


def _v0(spec, v0):
    return spec.v0 if v0 is None else v0


# ---------------------------------------------------------------- residuals


def residual_odd(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """sin(p a) for real p; zero on odd-parity resonances whatever d is."""
    _, p = momenta(particle, _v0(spec, v0), kinetic)
    if np.any(np.imag(p) != 0.0):
        raise ZoneMismatch("odd-parity residual needs real p (above-barrier or Klein zone)")
    return np.sin(np.real(p) * spec.width_a)[()]


def odd_scan_function(mass, v0, width, kinetic):
    """sin(pa)/p on either branch: vanishes exactly where sin(pa) = 0 with real p != 0."""
    _, p2 = momentum_squares(mass, v0, kinetic)
    return trig_pair(p2, width)[1]


def even_residual_regular(mass, v0, width, sep, kinetic):
    kinetic = np.asarray(kinetic, dtype=float)
    k2, p2 = momentum_squares(mass, v0, kinetic)
    cp, sp = trig_pair(p2, width)
    ck, sk = trig_pair(k2, sep)
    return 2.0 * (cp * ck - sp * sk * (k2 - v0 * (kinetic + mass)))


def residual_even(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """Cross-multiplied even-parity condition; total, real, defined for kinetic >= 0."""
    return even_residual_regular(particle.mass, _v0(spec, v0), spec.width_a, spec.separation_d, kinetic)[()]


def residual_even_complex(particle: ParticleSpec, spec: DoubleBarrierSpec, kinetic, v0=None):
    """The same residual evaluated literally in complex arithmetic (undefined where p or k vanish)."""
    vv = _v0(spec, v0)
    k, p = momenta(particle, vv, kinetic)
    g = _matching_ratio(particle.mass, vv, kinetic, k, p)
    a, d = spec.width_a, spec.separation_d
    return (2.0 * np.cos(p * a) * np.cos(k * d) - (g + 1.0 / g) * np.sin(p * a) * np.sin(k * d))[()]


def _branch_function(parity, mass, width, sep):
    if parity is Parity.ODD:
        return lambda ek, v0: odd_scan_function(mass, v0, width, ek)
    return lambda ek, v0: even_residual_regular(mass, v0, width, sep, ek)


# ---------------------------------------------------------- closed forms


def closed_form_d0(particle: ParticleSpec, spec: DoubleBarrierSpec, n: int, sign: Sign) -> AffineMap:
    """Resonance lines of the merged width-2a barrier: 2 p a = n pi.

    E_k = V0 - m +/- m sqrt(1 + n^2 lambda^2 / (16 a^2)); Plus is the
    above-barrier family, Minus the Klein-zone family. Even n are odd-parity
    resonances, odd n even-parity ones.
    """
    if spec.separation_d != 0.0:
        raise InvalidGeometry("closed form only holds for d = 0")
    if particle.mass <= 0.0:
        raise InvalidGeometry("closed form needs mass > 0")
    m, lam, a = particle.mass, particle.compton_wavelength, spec.width_a
    root = m * math.sqrt(1.0 + (n * lam) ** 2 / (16.0 * a * a))
    return AffineMap(1.0, -m + root if Sign(sign) is Sign.PLUS else -m - root)


def zero_resonance_points(
    particle: ParticleSpec,
    spec: DoubleBarrierSpec,
    kind: ZeroKind,
    parity: Parity | None = None,
    v0_limit: float | None = None,
    n_grid: int = 20000,
) -> list[float]:
    """V0 values with perfect transmission in the limit E_k -> 0.

    ZeroEnergy searches wells [-v0_limit, 0), ZeroMomentum barriers
    (2m, v0_limit]. The even family is the E_k = 0 value of the even
    residual, which in this limit reads
    ``cot(pa) = -m d V0 / p`` (p = sqrt(V0 (V0 - 2m))).
    """
    m = particle.mass
    if m <= 0.0:
        raise InvalidGeometry("zero-energy/zero-momentum resonances need mass > 0")
    limit = 8.0 * m if v0_limit is None else float(v0_limit)
    kind = ZeroKind(kind)
    if kind is ZeroKind.ZERO_ENERGY:
        grid = np.linspace(-limit, 0.0, n_grid)[:-1]
    else:
        grid = np.linspace(2.0 * m, limit, n_grid)[1:]
    parities = [Parity(parity)] if parity is not None else [Parity.ODD, Parity.EVEN]
    out = []
    for par in parities:
        f = _branch_function(par, m, spec.width_a, spec.separation_d)
        out.extend(_roots.roots_on_grid(lambda v: f(np.zeros_like(v), v), grid, refine=100).tolist())
    return sorted(out)


def first_zero_momentum(particle: ParticleSpec, spec: DoubleBarrierSpec, v0_limit=None) -> float | None:
    pts = zero_resonance_points(particle, spec, ZeroKind.ZERO_MOMENTUM, v0_limit=v0_limit)
    return pts[0] if pts else None


# ---------------------------------------------------------------- tracing


def _zone_columns(particle, zone, v0s, ek_nodes, ek_hi):
    """Per-column E_k sample nodes restricted to one zone, NaN-padded."""
    lo = np.full(v0s.shape, np.nan)
    hi = np.full(v0s.shape, np.nan)
    for i, v in enumerate(v0s):
        iv = zone_interval(particle, float(v), zone, ek_hi)
        if iv is not None:
            lo[i], hi[i] = iv
    eta = 1e-12 * np.maximum(1.0, np.abs(np.nan_to_num(hi)))
    inside = (ek_nodes[None, :] > lo[:, None] + eta[:, None]) & (ek_nodes[None, :] < hi[:, None] - eta[:, None])
    nodes = np.where(inside, ek_nodes[None, :], np.nan)
    # zone edges: E_k = 0 itself is a legitimate sample of the regular residual
    nodes = np.concatenate([(lo + eta)[:, None], nodes, (hi - eta)[:, None]], axis=1)
    nodes = np.sort(nodes, axis=1)
    return nodes, lo, hi


def _solve_columns(func, v0s, nodes):
    vgrid = np.broadcast_to(v0s[:, None], nodes.shape)
    with np.errstate(invalid="ignore", over="ignore"):
        vals = func(np.nan_to_num(nodes, nan=1.0), vgrid)
    vals = np.where(np.isnan(nodes), np.nan, vals)
    rows, cols = _roots.sign_change_brackets(vals)
    vrow = v0s[rows]
    roots = _roots.bisect(lambda e: func(e, vrow), nodes[rows, cols], nodes[rows, cols + 1])
    columns = [[] for _ in v0s]
    for r, x in zip(rows, roots):
        columns[r].append(x)
    return [np.sort(np.asarray(c)) for c in columns]


def trace_curves(
    particle: ParticleSpec,
    spec: DoubleBarrierSpec,
    v0_range: tuple[float, float],
    ek_range: tuple[float, float],
    grid: tuple[int, int] = (2000, 2000),
    parities=(Parity.ODD, Parity.EVEN),
    zones=SCATTERING_ZONES,
    verify: bool = True,
    fill_subgrid: bool = True,
) -> list[ResonanceCurve]:
    """Trace perfect-transmission curves zone by zone.

    For every V0 grid column the branch function is sampled on the E_k grid
    inside each zone, sign changes are bisected to machine precision, and the
    roots are chained across columns. Each point is re-checked through the
    transfer-matrix T (in extended precision where double precision cannot
    resolve 1 - T); points below the 1 - 1e-8 gate are dropped and counted
    in ``rejected``.
    """
    nv, ne = grid
    if nv < 2 or ne < 2:
        raise ValueError("grid needs at least 2 points per axis")
    v_lo, v_hi = map(float, v0_range)
    e_lo, e_hi = map(float, ek_range)
    if not (v_hi > v_lo and e_hi > e_lo >= 0.0):
        return []
    m, a, d = particle.mass, spec.width_a, spec.separation_d
    v0s = np.linspace(v_lo, v_hi, nv)
    ek_nodes = np.linspace(e_lo, e_hi, ne)
    h_e = (e_hi - e_lo) / (ne - 1)
    h_v = (v_hi - v_lo) / (nv - 1)

    curves = []
    for zone in zones:
        zone = Zone(zone)
        nodes, zlo, zhi = _zone_columns(particle, zone, v0s, ek_nodes, e_hi)
        nodes = np.where(nodes < e_lo, np.nan, nodes)
        for parity in parities:
            parity = Parity(parity)
            if parity is Parity.ODD and zone is Zone.NORMAL_TUNNELING:
                continue  # sin(pa) has no zeros for imaginary p
            func = _branch_function(parity, m, a, d)
            columns = _solve_columns(func, v0s, nodes)

            def refine(v, lo, hi, func=func, zone=zone):
                iv = zone_interval(particle, v, zone, e_hi)
                if iv is None:
                    return np.empty(0)
                lo, hi = max(lo, iv[0], e_lo), min(hi, iv[1])
                if hi <= lo:
                    return np.empty(0)
                return _roots.roots_on_grid(lambda e: func(e, np.full_like(e, v)), np.linspace(lo, hi, 64))

            def tol(dx, slope):
                return 2.0 * h_e + abs(dx) * (1.0 + min(abs(slope), 20.0))

            def slope(v, e, func=func):
                return _implicit_slope(func, v, e, h_v, h_e)

            edges = [off for z, off in _zone_edges(m) if z is zone]
            for raw in _roots.chain(columns, v0s, tol, refine, slope):
                pts = _complete_ends(func, np.asarray(raw), edges, (v_lo, v_hi), (e_lo, e_hi), h_v, h_e)
                curves.append(_finish_curve(particle, spec, parity, zone, pts, h_e, verify))
    curves = [c for c in curves if len(c)]
    if fill_subgrid:
        curves += _fill_subgrid(particle, spec, curves, v0s, (e_lo, e_hi), zones, verify)
    for c in curves:
        if c.kinetic.min() <= e_lo + 3.0 * h_e and c.branch.zone is not Zone.NORMAL_TUNNELING:
            c.intercept_v0 = _intercept(particle, spec, c, h_v)
    return curves


def _fill_subgrid(particle, spec, curves, v0s, e_box, zones, verify):
    """Pieces of curves that end on a zone edge between two V0 grid columns.

    A curve end on a zone edge with no partner across it is retraced on a
    fine local grid in the neighbouring zone. The part of the local curve
    up to the first main-grid column is either prepended/appended to the
    main-pass curve that starts at that column, or, if no column is crossed,
    returned as a new curve. Nothing the main pass found is duplicated.
    """
    h_v = v0s[1] - v0s[0]
    h_e = max(c.ek_step for c in curves) if curves else 0.0
    r = max(h_v, h_e)
    _, unmatched = stitch(particle, curves)
    extra = []
    for i, name, v, e in unmatched:
        src = curves[i].branch
        pair = next(k for k, n in _ADJACENT.items() if n == name)
        (adj,) = pair - {src.zone}
        if adj not in [Zone(z) for z in zones]:
            continue
        v_rng = (max(v0s[0], v - 2.0 * r), min(v0s[-1], v + 2.0 * r))
        e_rng = (max(e_box[0], e - 2.0 * r), min(e_box[1], e + 2.0 * r))
        local = trace_curves(particle, spec, v_rng, e_rng, (65, 65), (src.parity,), (adj,), verify, fill_subgrid=False)
        for c in local:
            if abs(c.v0[-1] - v) < abs(c.v0[0] - v):
                c.v0, c.kinetic, c.transmission = c.v0[::-1], c.kinetic[::-1], c.transmission[::-1]
            if not (abs(c.v0[0] - v) < 1e-9 * r and abs(c.kinetic[0] - e) < 2.0 * h_e):
                continue
            step = np.sign(c.v0[-1] - c.v0[0]) if len(c) > 1 else 0.0
            cols = v0s[(v0s - c.v0[0]) * step > 0] if step else np.empty(0)
            col = cols[np.argmin(np.abs(cols - c.v0[0]))] if cols.size else None
            if col is None or (c.v0 - col).min() * step > 0 or (c.v0 - col).max() * step < 0:
                c.ek_step = h_e
                extra.append(c)  # wholly between two columns
                continue
            new = (c.v0 - col) * step < 0
            e_col = np.interp(col, *(np.vstack([c.v0, c.kinetic])[:, np.argsort(c.v0)]))
            for host in curves:
                if host.branch != c.branch:
                    continue
                for end in (0, -1):
                    if host.v0[end] == col and abs(host.kinetic[end] - e_col) < 2.0 * h_e:
                        pv, pe, pt = c.v0[new], c.kinetic[new], c.transmission[new]
                        if end == 0:
                            host.v0 = np.concatenate([pv, host.v0])
                            host.kinetic = np.concatenate([pe, host.kinetic])
                            host.transmission = np.concatenate([pt, host.transmission])
                        else:
                            host.v0 = np.concatenate([host.v0, pv[::-1]])
                            host.kinetic = np.concatenate([host.kinetic, pe[::-1]])
                            host.transmission = np.concatenate([host.transmission, pt[::-1]])
                        break
                else:
                    continue
                break
    return extra


def _zone_edges(mass):
    """(zone, offset) pairs: the zone touches the line E_k = V0 + offset."""
    return [
        (Zone.ABOVE_BARRIER, 0.0),
        (Zone.NORMAL_TUNNELING, 0.0),
        (Zone.NORMAL_TUNNELING, -2.0 * mass),
        (Zone.KLEIN, -2.0 * mass),
    ]


def _complete_ends(func, pts, offsets, v_box, e_box, h_v, h_e):
    """Extend a chained segment onto the zone-edge lines it runs into.

    The branch functions are analytic across p = 0, so the crossing with the
    line E_k = V0 + offset is a root of F(V0 + offset, V0). It is searched
    near the tangent extrapolation of the segment end and accepted only when
    it lies beyond the end in V0 and is clearly the root nearest to the
    extrapolated point.
    """
    if pts.shape[0] == 0 or not offsets:
        return pts
    near = 3.0 * max(h_e, h_v)
    head, tail = [], []
    for end, sign in ((0, -1.0), (-1, 1.0)):
        v_end, e_end = pts[end]
        for off in offsets:
            u = e_end - (v_end + off)
            if abs(u) > near:
                continue
            sl = _implicit_slope(func, v_end, e_end, h_v, h_e)
            guess = v_end + u / (1.0 - sl) if abs(1.0 - sl) > 1e-3 else v_end
            width = 2.0 * h_v + abs(guess - v_end)
            lo = max(min(v_end, guess) - width, v_box[0], e_box[0] - off)
            hi = min(max(v_end, guess) + width, v_box[1], e_box[1] - off)
            if hi <= lo:
                continue
            roots = _roots.roots_on_grid(lambda v: func(v + off, v), np.linspace(lo, hi, 129))
            beyond = roots[sign * (roots - v_end) >= 0.0]
            if beyond.size == 0:
                continue
            dist = np.sort(np.abs(roots - guess))
            vc = float(beyond[np.argmin(np.abs(beyond - guess))])
            # the crossing must be clearly the closest one to the prediction
            if abs(vc - guess) != dist[0] or (dist.size > 1 and dist[0] > 0.5 * dist[1]):
                continue
            if abs(vc - v_end) > width:
                continue
            (head if end == 0 else tail).append((vc, vc + off))
    if not head and not tail:
        return pts
    return np.vstack([np.array(head[:1]).reshape(-1, 2), pts, np.array(tail[:1]).reshape(-1, 2)])


def _implicit_slope(func, v, e, h_v, h_e):
    """dE_k/dV0 along the zero set, -F_V / F_E by central differences."""
    dv, de = 1e-3 * h_v, 1e-3 * h_e
    de = min(de, 0.5 * e) if e > 0 else de
    fv = (func(e, v + dv) - func(e, v - dv)) / (2.0 * dv)
    fe = (func(e + de, v) - func(e - de, v)) / (2.0 * de)
    if fe == 0.0 or not np.isfinite(fv / fe):
        return 0.0
    return float(np.clip(-fv / fe, -50.0, 50.0))


def _finish_curve(particle, spec, parity, zone, pts, h_e, verify):
    v, e = pts[:, 0], pts[:, 1]
    if verify:
        t, _ = transmission_coefficients(particle, spec, e, v0=v)
        t = np.atleast_1d(t).copy()
        # double precision cannot resolve 1 - T once exp(4 q a) eps ~ 1e-8 and
        # may then land on either side of 1; re-evaluate those points with the
        # extended-precision composition
        redo = np.nonzero((np.abs(t - 1.0) > 1.0 - PERFECT_T_GATE) & (e > 0.0))[0]
        for i in redo:
            try:
                t[i] = transmission_extended(particle, spec, e[i], v0=v[i])
            except DegenerateMomentum:
                pass
        keep = np.abs(t - 1.0) <= 1.0 - PERFECT_T_GATE
    else:
        t = np.full(v.shape, np.nan)
        keep = np.ones(v.shape, dtype=bool)
    index_n = None
    if parity is Parity.ODD and keep.any():
        _, p = momenta(particle, v[keep][0], e[keep][0])
        index_n = int(round(float(np.real(p)) * spec.width_a / math.pi))
    return ResonanceCurve(
        branch=ResonanceBranch(parity, zone),
        v0=v[keep],
        kinetic=e[keep],
        transmission=t[keep],
        index_n=index_n,
        rejected=int((~keep).sum()),
        ek_step=h_e,
    )


def _intercept(particle, spec, curve, h_v):
    """V0 where the curve meets E_k = 0, solved on the E_k = 0 residual near the curve's low end."""
    j = int(np.argmin(curve.kinetic))
    v_end, e_end = curve.v0[j], curve.kinetic[j]
    if len(curve) >= 2:
        nb = j + 1 if j + 1 < len(curve) else j - 1
        slope = (curve.kinetic[nb] - e_end) / (curve.v0[nb] - v_end)
    else:
        slope = 1.0
    guess = v_end - e_end / slope if slope != 0 else v_end
    width = 4.0 * h_v + abs(guess - v_end)
    func = _branch_function(curve.branch.parity, particle.mass, spec.width_a, spec.separation_d)
    grid = np.linspace(guess - width, guess + width, 257)
    if curve.branch.zone is Zone.KLEIN:
        grid = grid[grid > 2.0 * particle.mass]
    roots = _roots.roots_on_grid(lambda vv: func(np.zeros_like(vv), vv), grid)
    if roots.size == 0:
        return None
    return float(roots[np.argmin(np.abs(roots - guess))])


# ---------------------------------------------------------------- stitching


@dataclass(frozen=True)
class Connection:
    first: int
    second: int
    boundary: str
    v0: float
    gap: float


def _boundary_offset(name, mass):
    return 0.0 if name == "above|tunneling" else -2.0 * mass


_ADJACENT = {
    frozenset({Zone.ABOVE_BARRIER, Zone.NORMAL_TUNNELING}): "above|tunneling",
    frozenset({Zone.NORMAL_TUNNELING, Zone.KLEIN}): "tunneling|klein",
}


def boundary_ends(curve: ResonanceCurve, offset: float, near: float):
    """Curve ends lying within ``near`` (in E_k) of the line E_k = V0 + offset, as (v0, ek)."""
    out = []
    if len(curve) == 0:
        return out
    for end in sorted({0, len(curve) - 1}):
        v, e = float(curve.v0[end]), float(curve.kinetic[end])
        if abs(e - (v + offset)) <= near:
            out.append((v, e))
    return out


def stitch(particle: ParticleSpec, curves: list[ResonanceCurve], tol: float | None = None, near: float | None = None):
    """Connections between same-parity segments of adjacent zones.

    Segments are traced zone by zone and each one is completed onto the zone
    edge independently, so two pieces of one physical curve should end at the
    same boundary point. Two ends connect when they differ by less than
    ``tol`` in E_k (default: twice the E_k grid step). Returns
    (connections, unmatched) where ``unmatched`` lists (curve index,
    boundary, v0, ek) for boundary ends with no partner.
    """
    if not curves:
        return [], []
    h_e = max(c.ek_step for c in curves)
    tol = 2.0 * h_e if tol is None else tol
    near = 1e-9 * max(1.0, particle.mass) if near is None else near
    ends = []
    for i, c in enumerate(curves):
        for key, name in _ADJACENT.items():
            if c.branch.zone not in key:
                continue
            for v, e in boundary_ends(c, _boundary_offset(name, particle.mass), near):
                ends.append((i, name, v, e))
    connections, matched = [], set()
    for x in range(len(ends)):
        i, name, v, e = ends[x]
        best = None
        for y in range(len(ends)):
            j, name2, v2, e2 = ends[y]
            if y == x or name2 != name or curves[j].branch.zone == curves[i].branch.zone:
                continue
            if curves[j].branch.parity != curves[i].branch.parity:
                continue
            gap = abs(e2 - e)
            if best is None or gap < best[0]:
                best = (gap, y)
        if best is not None and best[0] < tol:
            matched.add(x)
            y = best[1]
            if x < y:
                connections.append(Connection(i, ends[y][0], name, 0.5 * (v + ends[y][2]), best[0]))
    unmatched = [ends[x] for x in range(len(ends)) if x not in matched]
    return connections, unmatched
