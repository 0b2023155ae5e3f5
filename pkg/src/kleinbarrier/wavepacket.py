"""Time-dependent propagation of a Dirac spinor wave packet through the smooth double barrier.

The Hamiltonian is H = [[V + m, d/dx], [-d/dx, V - m]] on a uniform periodic
grid, with d/dx the 4th-order central stencil. One step is

    U(dt) = exp(-i sigma_z m dt) * sum_n (-i dt K)^n / n!,   K = [[V, D], [-D, V]],

with the series truncated once a term's norm drops below ``cfg.tol``. The
Strang variant puts half of the mass phase on each side of the series.
The stepping loop lives in :mod:`kleinbarrier.kernels`.
"""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import ConfigError, StabilityError
from .kinematics import DoubleBarrierSpec, ParticleSpec
from .transfer import transmission_coefficients

STEP_DRIFT_LIMIT = 1e-10


class Boundary(str, enum.Enum):
    PERIODIC = "Periodic"
    ABSORBING = "Absorbing"


class Scheme(str, enum.Enum):
    LIE = "Lie"
    STRANG = "Strang"


@dataclass(frozen=True)
class Grid1D:
    """x_j = origin + j * spacing, j = 0 .. n_points - 1, periodic with period length_l."""

    length_l: float = 1000.0
    n_points: int = 2**14
    origin: float = -500.0

    def __post_init__(self):
        if not self.length_l > 0.0:
            raise ConfigError("grid length must be > 0", field="length")
        if self.n_points < 16:
            raise ConfigError("grid needs at least 16 points", field="nx")

    @property
    def spacing(self) -> float:
        return self.length_l / self.n_points

    @property
    def x(self) -> np.ndarray:
        return self.origin + self.spacing * np.arange(self.n_points)

    @classmethod
    def centered_on(cls, spec: DoubleBarrierSpec, length_l=1000.0, n_points=2**14) -> "Grid1D":
        """Grid whose midpoint is the middle of the barrier region."""
        return cls(length_l, n_points, 0.5 * spec.extent - 0.5 * length_l)


@dataclass(frozen=True)
class SimConfig:
    k0: float = 1.25
    sigma: float = 2.0
    x0: float | None = None  # default: -(5 sigma + 20), left of the first barrier
    dt: float = 1e-3
    n_max: int = 32
    tol: float = 1e-14
    boundary: Boundary = Boundary.PERIODIC
    scheme: Scheme = Scheme.LIE
    t_max: float = 200.0
    stop_inside: float = 1e-3
    record_every: float = 1.0
    kinetic: float | None = None  # when set, k0 is derived from this E_k instead
    absorb_width: float = 50.0
    absorb_strength: float = 5.0

    def __post_init__(self):
        if not self.sigma > 0.0:
            raise ConfigError("sigma must be > 0", field="sigma")
        if not self.dt > 0.0:
            raise ConfigError("dt must be > 0", field="dt")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1", field="n_max")
        if not self.t_max > 0.0:
            raise ConfigError("t_max must be > 0", field="t_max")
        if self.kinetic is not None and not self.kinetic > 0.0:
            raise ConfigError("kinetic energy must be > 0", field="ek")
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        object.__setattr__(self, "scheme", Scheme(self.scheme))

    @property
    def start(self) -> float:
        return -(5.0 * self.sigma + 20.0) if self.x0 is None else self.x0

    def central_momentum(self, particle: ParticleSpec) -> float:
        if self.kinetic is None:
            return self.k0
        ek = self.kinetic
        return math.sqrt(ek * (ek + 2.0 * particle.mass))

    def central_kinetic(self, particle: ParticleSpec) -> float:
        k0 = self.central_momentum(particle)
        m = particle.mass
        return k0 * k0 / (math.hypot(k0, m) + m)


@dataclass
class WavePacketState:
    grid: Grid1D
    upper: np.ndarray
    lower: np.ndarray
    time: float = 0.0

    def density(self) -> np.ndarray:
        return np.abs(self.upper) ** 2 + np.abs(self.lower) ** 2

    def norm(self) -> float:
        return float(self.density().sum() * self.grid.spacing)

    def copy(self) -> "WavePacketState":
        return WavePacketState(self.grid, self.upper.copy(), self.lower.copy(), self.time)


@dataclass(frozen=True)
class Observables:
    norm_left: float
    norm_inside: float
    norm_right: float

    @property
    def total(self) -> float:
        return self.norm_left + self.norm_inside + self.norm_right


def smooth_potential(spec: DoubleBarrierSpec, x):
    """(V0/2) [tanh(eps x) - tanh(eps (x-a)) + tanh(eps (x-a-d)) - tanh(eps (x-2a-d))]."""
    x = np.asarray(x, dtype=float)
    eps, a, d = spec.smoothing_eps, spec.width_a, spec.separation_d
    return 0.5 * spec.v0 * (
        np.tanh(eps * x) - np.tanh(eps * (x - a)) + np.tanh(eps * (x - a - d)) - np.tanh(eps * (x - 2.0 * a - d))
    )


def init_packet(grid: Grid1D, particle: ParticleSpec, cfg: SimConfig, spec: DoubleBarrierSpec | None = None) -> WavePacketState:
    """Gaussian times the positive-energy spinor (1, -i k0 / (E0 + m)), normalized to 1."""
    x0, sigma = cfg.start, cfg.sigma
    lo, hi = x0 - 5.0 * sigma, x0 + 5.0 * sigma
    x = grid.x
    if lo < x[0] or hi > x[-1]:
        raise ConfigError(f"packet support [{lo:g}, {hi:g}] leaves the grid", field="x0")
    if spec is not None and hi > 0.0 and lo < spec.extent:
        raise ConfigError(f"packet support [{lo:g}, {hi:g}] overlaps the barriers", field="x0")
    k0 = cfg.central_momentum(particle)
    e0 = math.hypot(k0, particle.mass)
    envelope = np.exp(-((x - x0) ** 2) / (2.0 * sigma * sigma) + 1j * k0 * x)
    upper = envelope.astype(np.complex128)
    ratio = -1j * k0 / (e0 + particle.mass) if e0 + particle.mass > 0 else -1j
    lower = ratio * envelope
    state = WavePacketState(grid, upper, lower, 0.0)
    scale = 1.0 / math.sqrt(state.norm())
    state.upper *= scale
    state.lower *= scale
    return state


def absorbing_mask(grid: Grid1D, cfg: SimConfig) -> np.ndarray:
    """Per-step damping factors, 1 in the interior and exp(-strength dt s^2) on edge ramps of width absorb_width."""
    x = grid.x
    dist = np.minimum(x - x[0], x[-1] - x)
    s = np.clip((cfg.absorb_width - dist) / cfg.absorb_width, 0.0, 1.0)
    return np.exp(-cfg.absorb_strength * cfg.dt * s * s)


def stencil_norm(spacing: float) -> float:
    """Largest |symbol| of the 4th-order first-derivative stencil: max (8 sin t - sin 2t) / (6 h)."""
    t = math.acos(1.0 - math.sqrt(1.5))  # root of 8 cos t - 2 cos 2t = 0
    return (8.0 * math.sin(t) - math.sin(2.0 * t)) / (6.0 * spacing)


def series_drift_bound(dt: float, spectral_radius: float, n_max: int) -> float:
    """Worst per-step norm drift of the n_max-term Taylor series over eigenvalues |lambda| <= spectral_radius.

    The kernel stops early once the state's own terms are small, so this
    is the drift a grid-scale component would see even with every term used.
    """
    x = np.linspace(0.0, dt * spectral_radius, 2001)
    term = np.ones_like(x, dtype=complex)
    total = term.copy()
    for j in range(1, n_max + 1):
        term = term * (-1j * x) / j
        total += term
    return float(np.max(np.abs(np.abs(total) ** 2 - 1.0)))


@dataclass
class _Stepper:
    particle: ParticleSpec
    spec: DoubleBarrierSpec
    cfg: SimConfig
    potential: np.ndarray
    mask: np.ndarray
    max_drift: float = 0.0
    max_terms: int = 0
    absorbed: float = 0.0
    steps: int = 0

    @classmethod
    def build(cls, grid, particle, spec, cfg):
        v = np.ascontiguousarray(smooth_potential(spec, grid.x))
        mask = absorbing_mask(grid, cfg) if cfg.boundary is Boundary.ABSORBING else np.empty(0)
        radius = float(np.max(np.abs(v))) + stencil_norm(grid.spacing)
        bound = series_drift_bound(cfg.dt, radius, cfg.n_max)
        if not bound <= STEP_DRIFT_LIMIT:
            raise StabilityError(
                f"dt={cfg.dt:g} allows per-step norm drift up to {bound:.3g} on grid-scale modes "
                f"(dt * max|H| = {cfg.dt * radius:.3g}); reduce dt"
            )
        return cls(particle, spec, cfg, v, mask)

    def advance(self, state: WavePacketState, n_steps: int):
        if n_steps <= 0:
            return
        cfg = self.cfg
        drift, used, converged, absorbed = kernels.taylor_steps(
            state.upper,
            state.lower,
            self.potential,
            state.grid.spacing,
            cfg.dt,
            self.particle.mass,
            int(n_steps),
            cfg.tol,
            cfg.n_max,
            cfg.scheme is Scheme.STRANG,
            self.mask,
        )
        self.max_drift = max(self.max_drift, drift)
        self.max_terms = max(self.max_terms, used)
        self.absorbed += absorbed
        self.steps += n_steps
        state.time += n_steps * cfg.dt
        if not converged or not drift <= STEP_DRIFT_LIMIT:
            raise StabilityError(
                f"per-step norm drift {drift:.3g} (series converged: {bool(converged)}) at t={state.time:g}; reduce dt"
            )


def step(state: WavePacketState, particle: ParticleSpec, spec: DoubleBarrierSpec, cfg: SimConfig) -> WavePacketState:
    """One time step; returns a new state and leaves the input untouched."""
    out = state.copy()
    _Stepper.build(state.grid, particle, spec, cfg).advance(out, 1)
    return out


def observables(state: WavePacketState, spec: DoubleBarrierSpec) -> Observables:
    x = state.grid.x
    rho = state.density() * state.grid.spacing
    left = x < 0.0
    right = x > spec.extent
    return Observables(float(rho[left].sum()), float(rho[~left & ~right].sum()), float(rho[right].sum()))


def centroid(state: WavePacketState) -> float:
    rho = state.density()
    return float((state.grid.x * rho).sum() / rho.sum())


def width(state: WavePacketState) -> float:
    rho = state.density()
    x = state.grid.x
    mean = (x * rho).sum() / rho.sum()
    return float(math.sqrt(((x - mean) ** 2 * rho).sum() / rho.sum()))


@dataclass
class RunResult:
    state: WavePacketState
    times: np.ndarray
    norm_left: np.ndarray
    norm_inside: np.ndarray
    norm_right: np.ndarray
    centroids: np.ndarray
    widths: np.ndarray
    snapshots: list[WavePacketState]
    diagnostics: dict = field(default_factory=dict)

    @property
    def final(self) -> Observables:
        return Observables(float(self.norm_left[-1]), float(self.norm_inside[-1]), float(self.norm_right[-1]))


def run(
    particle: ParticleSpec,
    spec: DoubleBarrierSpec,
    cfg: SimConfig,
    grid: Grid1D | None = None,
    snapshot_times=(),
    probe=None,
) -> RunResult:
    """Propagate until the barrier region holds less than ``cfg.stop_inside`` (after the packet has arrived) or t_max.

    Observables are recorded every ``cfg.record_every``; ``snapshot_times``
    are rounded to whole steps. ``probe(state)`` is called at every record
    time and its return values are collected in ``diagnostics["probe"]``.
    """
    grid = Grid1D.centered_on(spec) if grid is None else grid
    state = init_packet(grid, particle, cfg, spec)
    stepper = _Stepper.build(grid, particle, spec, cfg)
    norm0 = state.norm()
    per_record = max(1, int(round(cfg.record_every / cfg.dt)))
    total_steps = int(math.ceil(cfg.t_max / cfg.dt - 1e-9))
    snap_steps = sorted({int(round(t / cfg.dt)) for t in snapshot_times if 0.0 <= t <= cfg.t_max})
    times, left, inside, right, cents, widths, probes = [], [], [], [], [], [], []
    snapshots = []

    def record():
        obs = observables(state, spec)
        times.append(state.time)
        left.append(obs.norm_left)
        inside.append(obs.norm_inside)
        right.append(obs.norm_right)
        cents.append(centroid(state))
        widths.append(width(state))
        if probe is not None:
            probes.append(probe(state))
        return obs

    record()
    if snap_steps and snap_steps[0] == 0:
        snapshots.append(state.copy())
    arrived = False
    stop_reason = "t_max"
    done = 0
    while done < total_steps:
        target = min(total_steps, done + per_record)
        nxt = [s for s in snap_steps if done < s <= target]
        for s in nxt:
            stepper.advance(state, s - done)
            done = s
            snapshots.append(state.copy())
        stepper.advance(state, target - done)
        done = target
        if done % per_record == 0 or done == total_steps:
            obs = record()
            arrived = arrived or obs.norm_inside >= cfg.stop_inside
            if arrived and obs.norm_inside < cfg.stop_inside:
                stop_reason = "drained"
                break
    norm_end = state.norm() + stepper.absorbed
    diagnostics = {
        "backend": kernels.BACKEND,
        "steps": stepper.steps,
        "max_step_drift": stepper.max_drift,
        "cumulative_drift": abs(norm_end - norm0),
        "max_series_terms": stepper.max_terms,
        "absorbed": stepper.absorbed,
        "stop_reason": stop_reason,
        "k0": cfg.central_momentum(particle),
        "kinetic": cfg.central_kinetic(particle),
    }
    if probe is not None:
        diagnostics["probe"] = probes
    return RunResult(
        state,
        np.asarray(times),
        np.asarray(left),
        np.asarray(inside),
        np.asarray(right),
        np.asarray(cents),
        np.asarray(widths),
        snapshots,
        diagnostics,
    )


# ------------------------------------------------------------ momentum space


def momentum_components(state: WavePacketState, particle: ParticleSpec):
    """(k, w_plus, w_minus): weights of the positive- and negative-energy free spinors per momentum.

    The weights sum to the state norm.
    """
    grid = state.grid
    n, h = grid.n_points, grid.spacing
    k = 2.0 * np.pi * np.fft.fftfreq(n, d=h)
    # phase of the grid origin does not affect the weights
    uk = np.fft.fft(state.upper)
    wk = np.fft.fft(state.lower)
    m = particle.mass
    e = np.hypot(k, m)
    # H(k) = [[m, i k], [-i k, -m]] has eigenvectors (E + m, -i k) at +E and (-i k, E + m) at -E
    plus = np.stack([e + m, -1j * k])
    minus = np.stack([-1j * k, e + m])
    norm_p = np.sqrt(np.abs(plus[0]) ** 2 + np.abs(plus[1]) ** 2)
    norm_m = np.sqrt(np.abs(minus[0]) ** 2 + np.abs(minus[1]) ** 2)
    safe_p = np.where(norm_p == 0, 1.0, norm_p)
    safe_m = np.where(norm_m == 0, 1.0, norm_m)
    amp_p = (np.conj(plus[0]) * uk + np.conj(plus[1]) * wk) / safe_p
    amp_m = (np.conj(minus[0]) * uk + np.conj(minus[1]) * wk) / safe_m
    scale = h / n  # Parseval: sum |f|^2 h = sum |F|^2 h / n
    return k, np.abs(amp_p) ** 2 * scale, np.abs(amp_m) ** 2 * scale


def spectral_prediction(particle: ParticleSpec, spec: DoubleBarrierSpec, cfg: SimConfig, grid: Grid1D | None = None) -> float:
    """Momentum-weighted sharp-barrier transmission of the initial packet.

    Positive-energy components with k > 0 move right and see T(E_k(k)).
    Negative-energy components with k < 0 also move right; since
    sigma_x H(V) sigma_x = -H(-V) they scatter like positive-energy states
    of the same |E| off the negated potential. Everything else moves left
    and counts as reflected.
    """
    grid = Grid1D.centered_on(spec) if grid is None else grid
    state = init_packet(grid, particle, cfg, spec)
    m = particle.mass
    if m == 0.0:
        # massless: the (1, -i) chirality moves right at unit speed and T = 1 at every energy
        return float(np.sum(np.abs(state.upper + 1j * state.lower) ** 2) * 0.5 * grid.spacing)
    k, w_plus, w_minus = momentum_components(state, particle)
    kinetic = k * k / (np.hypot(k, m) + m)
    total = 0.0
    for sel, target in (
        ((k > 0.0) & (w_plus > 1e-300), spec),
        ((k < 0.0) & (w_minus > 1e-300), dataclasses.replace(spec, v0=-spec.v0)),
    ):
        if not np.any(sel):
            continue
        weights = (w_plus if target is spec else w_minus)[sel]
        t, _ = transmission_coefficients(particle, target, kinetic[sel])
        total += float(np.sum(weights * np.atleast_1d(t)))
    return total


def centroid_velocity(result: RunResult) -> float:
    """Least-squares slope of the centroid against time."""
    return float(np.polyfit(result.times, result.centroids, 1)[0])


def velocity_moments(particle: ParticleSpec, cfg: SimConfig, grid: Grid1D | None = None) -> tuple[float, float]:
    """(mean, variance) of the free group velocity over the initial packet's momentum weights.

    Positive-energy components move with k/E, negative-energy ones with -k/E.
    """
    spec = DoubleBarrierSpec(0.0, 1.0, 0.0)
    grid = Grid1D.centered_on(spec) if grid is None else grid
    state = init_packet(grid, particle, cfg, spec)
    k, w_plus, w_minus = momentum_components(state, particle)
    w = np.concatenate([w_plus, w_minus])
    v = k / np.hypot(k, particle.mass)
    v = np.concatenate([v, -v])
    mean_v = np.sum(w * v) / np.sum(w)
    var_v = np.sum(w * (v - mean_v) ** 2) / np.sum(w)
    return float(mean_v), float(var_v)


def free_width_prediction(particle: ParticleSpec, cfg: SimConfig, times, grid: Grid1D | None = None) -> np.ndarray:
    """sigma_x(t) of a free packet: sqrt(var(0) + t^2 Var[v]), ballistic spreading of the momentum components."""
    spec = DoubleBarrierSpec(0.0, 1.0, 0.0)
    grid = Grid1D.centered_on(spec) if grid is None else grid
    var0 = width(init_packet(grid, particle, cfg, spec)) ** 2
    _, var_v = velocity_moments(particle, cfg, grid)
    return np.sqrt(var0 + np.asarray(times) ** 2 * var_v)


def barrier_log_slope(state: WavePacketState, lo: float, hi: float) -> float:
    """Least-squares slope of log density over lo <= x <= hi (positions relative to the first barrier edge)."""
    return log_slope(state.grid.x, state.density(), lo, hi)


def energy_resolved_density(frames, times, energy: float) -> np.ndarray:
    """|sum_t w(t) psi(x, t) exp(i E t)|^2 summed over both components.

    ``frames`` has shape (n_times, 2, n_x). A Hann window over the recorded
    interval suppresses leakage from neighbouring energies. The result is
    proportional to the density of the stationary state at total energy E,
    up to an overall factor.
    """
    frames = np.asarray(frames)
    times = np.asarray(times, dtype=float)
    span = times[-1] - times[0]
    w = 0.5 - 0.5 * np.cos(2.0 * np.pi * (times - times[0]) / span) if span > 0 else np.ones_like(times)
    amp = np.tensordot(w * np.exp(1j * energy * times), frames, axes=(0, 0))
    return np.sum(np.abs(amp) ** 2, axis=0)


def log_slope(x, rho, lo: float, hi: float) -> float:
    """Least-squares slope of log(rho) over lo <= x <= hi."""
    x = np.asarray(x)
    sel = (x >= lo) & (x <= hi)
    return float(np.polyfit(x[sel], np.log(np.asarray(rho)[sel]), 1)[0])


def edge_enhancement(peaks, incident_peak: float) -> float:
    """Largest recorded density near a barrier edge over the incident packet's peak density."""
    return float(np.max(peaks) / incident_peak)
