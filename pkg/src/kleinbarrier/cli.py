"""Command-line front end.

    kleinbarrier transmission --m 1 --a 2.5L --d 5L --v0 0:8:400 --ek 0.01:6:400
    kleinbarrier resonance --a 2.5L --d 5L
    kleinbarrier bound --d 1L
    kleinbarrier wavepacket --v0 0.4 --out-dir runs/a

Lengths accept a trailing ``L`` meaning Compton wavelengths (2 pi / m).
Grids are ``lo:hi:n`` (n points, both ends included) or a single number.
``--config FILE`` reads ``key = value`` lines with the same names as the
flags; flags given on the command line win. Exit status: 0 ok, 2 bad
configuration, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .errors import ConfigError, KleinBarrierError, StabilityError
from .kinematics import DoubleBarrierSpec, ParticleSpec, Zone, classify_zone

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

# built-in defaults per command; None means "not set"
DEFAULTS = {
    "transmission": {
        "m": "1", "a": "2.5L", "d": "0", "v0": "0:8:400", "ek": "0.01:6:400",
        "samples": "0", "seed": "0", "format": "csv", "out": "-",
    },
    "resonance": {
        "m": "1", "a": "2.5L", "d": "0", "v0": "-6:8:2000", "ek": "0:6:2000",
        "parity": "both", "format": "csv", "out": "-",
    },
    "bound": {
        "m": "1", "a": "2.5L", "d": "1L", "v0": "-6:0:400", "nek": "2000",
        "format": "csv", "out": "-",
    },
    "wavepacket": {
        "m": "1", "a": "10", "d": "16.8", "v0": "0.4", "eps": "10", "k0": "1.25", "ek": "",
        "sigma": "2", "x0": "", "dt": "1e-3", "t_max": "200", "nx": "16384", "length": "1000",
        "n_max": "32", "boundary": "Periodic", "scheme": "Lie", "snapshots": "",
        "record_every": "1", "out_dir": "wavepacket_out",
    },
}


# ------------------------------------------------------------------ parsing


def parse_float(text, name):
    try:
        value = float(text)
    except (TypeError, ValueError):
        raise ConfigError(f"{name}: cannot read {text!r} as a number", field=name) from None
    if not math.isfinite(value):
        raise ConfigError(f"{name}: must be finite", field=name)
    return value


def parse_length(text, particle, name):
    """Natural-units length, or Compton wavelengths with a trailing L."""
    text = str(text).strip()
    if text.endswith(("L", "l")):
        n = parse_float(text[:-1], name)
        if particle.mass == 0.0:
            raise ConfigError(f"{name}: wavelength units need mass > 0", field=name)
        return particle.lengths(n)
    return parse_float(text, name)


def parse_grid(text, name):
    """``lo:hi:n`` -> n points from lo to hi; a single number -> one point."""
    parts = str(text).split(":")
    if len(parts) == 1:
        return np.array([parse_float(parts[0], name)])
    if len(parts) != 3:
        raise ConfigError(f"{name}: expected lo:hi:n, got {text!r}", field=name)
    lo, hi = parse_float(parts[0], name), parse_float(parts[1], name)
    try:
        n = int(parts[2])
    except ValueError:
        raise ConfigError(f"{name}: point count must be an integer", field=name) from None
    if n < 0:
        raise ConfigError(f"{name}: point count must be >= 0", field=name)
    if n == 1:
        return np.array([lo])
    return np.linspace(lo, hi, n)


def parse_range(text, name):
    """``lo:hi:n`` for the tracers: (lo, hi, n)."""
    parts = str(text).split(":")
    if len(parts) != 3:
        raise ConfigError(f"{name}: expected lo:hi:n, got {text!r}", field=name)
    lo, hi = parse_float(parts[0], name), parse_float(parts[1], name)
    try:
        n = int(parts[2])
    except ValueError:
        raise ConfigError(f"{name}: point count must be an integer", field=name) from None
    return lo, hi, n


def parse_int(text, name, minimum=None):
    try:
        value = int(str(text))
    except ValueError:
        raise ConfigError(f"{name}: expected an integer, got {text!r}", field=name) from None
    if minimum is not None and value < minimum:
        raise ConfigError(f"{name}: must be >= {minimum}", field=name)
    return value


def read_config_file(path):
    values = {}
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"config: cannot read {path}: {exc.strerror}", field="config") from None
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config: line {num} is not key = value", field="config")
        key, value = (s.strip() for s in line.split("=", 1))
        values[key.replace("-", "_")] = value
    return values


def resolve(command, args):
    """Merge built-in defaults, config file and flags (in increasing priority)."""
    merged = dict(DEFAULTS[command])
    if args.config:
        for key, value in read_config_file(args.config).items():
            if key not in merged:
                raise ConfigError(f"config: unknown key {key!r} for {command}", field=key)
            merged[key] = value
    for key in DEFAULTS[command]:
        flag = getattr(args, key, None)
        if flag is not None:
            merged[key] = flag
    return merged


def _particle(cfg):
    m = parse_float(cfg["m"], "m")
    return ParticleSpec(m)


def _geometry(cfg, particle, v0=0.0, eps=10.0):
    a = parse_length(cfg["a"], particle, "a")
    d = parse_length(cfg["d"], particle, "d")
    return DoubleBarrierSpec(v0, a, d, eps)


# ------------------------------------------------------------------ output


def _fmt(value):
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if value is None:
        return ""
    return str(value)


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.bool_,)):
        return bool(value)
    return value


def render_csv(command, cfg, columns, rows, diagnostics=None):
    buf = io.StringIO()
    buf.write(f"# kleinbarrier {__version__} {command}\n")
    for key in sorted(cfg):
        buf.write(f"# {key} = {cfg[key]}\n")
    for key in sorted(diagnostics or {}):
        buf.write(f"# diag {key} = {json.dumps(_jsonable(diagnostics[key]), sort_keys=True)}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue()


def render_json(command, cfg, columns, rows, diagnostics=None):
    doc = {
        "config": {"command": command, "version": __version__, **cfg},
        "results": [dict(zip(columns, (_jsonable(v) for v in row))) for row in rows],
        "diagnostics": _jsonable(diagnostics or {}),
    }
    return json.dumps(doc, indent=1, sort_keys=True) + "\n"


def emit(command, cfg, columns, rows, diagnostics=None):
    fmt = cfg.get("format", "csv")
    if fmt not in ("csv", "json"):
        raise ConfigError("format: must be csv or json", field="format")
    text = (render_csv if fmt == "csv" else render_json)(command, cfg, columns, rows, diagnostics)
    out = cfg.get("out", "-")
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)


# ---------------------------------------------------------------- commands


def _zones(particle, v0, ek):
    m = particle.mass
    zone = np.full(v0.shape, Zone.NORMAL_TUNNELING.value, dtype=object)
    zone[ek >= v0] = Zone.ABOVE_BARRIER.value
    zone[(ek < v0) & (ek <= v0 - 2.0 * m)] = Zone.KLEIN.value
    return zone


def cmd_transmission(cfg):
    from .transfer import transmission_coefficients

    particle = _particle(cfg)
    spec = _geometry(cfg, particle)
    samples = parse_int(cfg["samples"], "samples", 0)
    if samples:
        v_lo, v_hi = _grid_bounds(cfg["v0"], "v0")
        e_lo, e_hi = _grid_bounds(cfg["ek"], "ek")
        rng = np.random.default_rng(parse_int(cfg["seed"], "seed", 0))
        v0 = rng.uniform(v_lo, v_hi, samples)
        ek = rng.uniform(e_lo, e_hi, samples)
    else:
        v_axis, e_axis = parse_grid(cfg["v0"], "v0"), parse_grid(cfg["ek"], "ek")
        v0 = np.repeat(v_axis, e_axis.size)
        ek = np.tile(e_axis, v_axis.size)
    if np.any(ek <= 0.0):
        raise ConfigError("ek: kinetic energies must be > 0 for scattering states", field="ek")
    if v0.size:
        t, r = transmission_coefficients(particle, spec, ek, v0=v0)
        t, r = np.atleast_1d(t), np.atleast_1d(r)
        zone = _zones(particle, v0, ek)
    else:
        t = r = zone = np.empty(0)
    rows = zip(v0.tolist(), ek.tolist(), t.tolist(), r.tolist(), zone.tolist())
    emit("transmission", cfg, ["v0", "e_k", "T", "R", "zone"], rows)
    return EXIT_OK


def _grid_bounds(text, name):
    g = parse_grid(text, name)
    if g.size == 0:
        raise ConfigError(f"{name}: empty range", field=name)
    return float(g.min()), float(g.max())


def cmd_resonance(cfg):
    from .resonance import Parity, stitch, trace_curves

    particle = _particle(cfg)
    if particle.mass <= 0.0:
        raise ConfigError("m: resonance tracing needs mass > 0", field="m")
    spec = _geometry(cfg, particle)
    v_lo, v_hi, nv = parse_range(cfg["v0"], "v0")
    e_lo, e_hi, ne = parse_range(cfg["ek"], "ek")
    if e_lo < 0.0:
        raise ConfigError("ek: the scan starts at E_k >= 0", field="ek")
    choice = cfg["parity"].lower()
    if choice not in ("both", "odd", "even"):
        raise ConfigError("parity: expected both, odd or even", field="parity")
    parities = (Parity.ODD, Parity.EVEN) if choice == "both" else (Parity(choice.capitalize()),)
    columns = ["curve_id", "branch", "zone", "index_n", "v0", "e_k", "T"]
    empty = nv < 2 or ne < 2 or not v_hi > v_lo or not e_hi > e_lo
    curves = [] if empty else trace_curves(particle, spec, (v_lo, v_hi), (e_lo, e_hi), (nv, ne), parities)
    rows = []
    for cid, c in enumerate(curves):
        for v, e, t in zip(c.v0.tolist(), c.kinetic.tolist(), c.transmission.tolist()):
            rows.append((cid, c.branch.parity.value, c.branch.zone.value, c.index_n, v, e, t))
    connections, unmatched = stitch(particle, curves)
    diagnostics = {
        "curves": len(curves),
        "rejected_points": sum(c.rejected for c in curves),
        "connections": [[c.first, c.second, c.boundary, c.v0, c.gap] for c in connections],
        "unmatched_ends": len(unmatched),
        "intercepts": {str(i): c.intercept_v0 for i, c in enumerate(curves) if c.intercept_v0 is not None},
    }
    emit("resonance", cfg, columns, rows, diagnostics)
    return EXIT_OK


def cmd_bound(cfg):
    from .bound import ThresholdKind, spectrum, thresholds

    particle = _particle(cfg)
    if particle.mass <= 0.0:
        raise ConfigError("m: bound states need mass > 0", field="m")
    spec = _geometry(cfg, particle)
    v_lo, v_hi, nv = parse_range(cfg["v0"], "v0")
    nek = parse_int(cfg["nek"], "nek", 16)
    if v_lo >= 0.0 or v_hi > 0.0:
        raise ConfigError("v0: bound states need wells, v0 < 0", field="v0")
    v_hi = min(v_hi, -1e-9)
    curves = [] if nv < 2 or not v_hi > v_lo else spectrum(particle, spec, (v_lo, v_hi), (nv, nek))
    rows = []
    for cid, s in enumerate(curves):
        for v, e, kap, dl, m1 in zip(s.v0.tolist(), s.kinetic.tolist(), s.kappa.tolist(), s.delta.tolist(), s.m1_abs.tolist()):
            rows.append((cid, s.branch.value, v, e, kap, dl, m1))
    limit = -v_lo
    diagnostics = {
        kind.value: [[t.v0, t.branch.value, t.family] for t in thresholds(particle, spec, kind, v0_limit=limit)]
        for kind in ThresholdKind
    }
    diagnostics["rejected_points"] = sum(s.rejected for s in curves)
    emit("bound", cfg, ["curve_id", "branch", "v0", "e_k", "kappa", "delta", "m1_abs"], rows, diagnostics)
    return EXIT_OK


def cmd_wavepacket(cfg):
    from . import wavepacket as wp

    particle = _particle(cfg)
    spec = DoubleBarrierSpec(
        parse_float(cfg["v0"], "v0"),
        parse_length(cfg["a"], particle, "a"),
        parse_length(cfg["d"], particle, "d"),
        parse_float(cfg["eps"], "eps"),
    )
    grid = wp.Grid1D.centered_on(spec, parse_float(cfg["length"], "length"), parse_int(cfg["nx"], "nx", 16))
    sim = wp.SimConfig(
        k0=parse_float(cfg["k0"], "k0"),
        sigma=parse_float(cfg["sigma"], "sigma"),
        x0=parse_float(cfg["x0"], "x0") if cfg["x0"] else None,
        dt=parse_float(cfg["dt"], "dt"),
        n_max=parse_int(cfg["n_max"], "n_max", 1),
        boundary=_choice(cfg["boundary"], wp.Boundary, "boundary"),
        scheme=_choice(cfg["scheme"], wp.Scheme, "scheme"),
        t_max=parse_float(cfg["t_max"], "t_max"),
        record_every=parse_float(cfg["record_every"], "record_every"),
        kinetic=parse_float(cfg["ek"], "ek") if cfg["ek"] else None,
    )
    snaps = [parse_float(s, "snapshots") for s in cfg["snapshots"].split(",") if s.strip()]
    wp.init_packet(grid, particle, sim, spec)  # validates placement before any stepping
    out_dir = cfg["out_dir"]
    os.makedirs(out_dir, exist_ok=True)
    result = wp.run(particle, spec, sim, grid, snapshot_times=snaps)
    header_cfg = dict(cfg)
    for i, snap in enumerate(result.snapshots):
        rows = zip(
            [snap.time] * grid.n_points,
            grid.x.tolist(),
            snap.density().tolist(),
            snap.upper.real.tolist(),
            snap.upper.imag.tolist(),
            snap.lower.real.tolist(),
            snap.lower.imag.tolist(),
        )
        text = render_csv("wavepacket", header_cfg, ["t", "x", "density", "re_upper", "im_upper", "re_lower", "im_lower"], rows)
        with open(os.path.join(out_dir, f"snapshot_{i:03d}.csv"), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    final = result.final
    summary = {
        "config": {"command": "wavepacket", "version": __version__, **header_cfg},
        "results": {
            "times": result.times,
            "norm_left": result.norm_left,
            "norm_inside": result.norm_inside,
            "norm_right": result.norm_right,
            "final": {"norm_left": final.norm_left, "norm_inside": final.norm_inside, "norm_right": final.norm_right},
            "spectral_prediction": wp.spectral_prediction(particle, spec, sim, grid),
        },
        "diagnostics": {k: v for k, v in result.diagnostics.items() if k != "backend"},
    }
    with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(_jsonable(summary), indent=1, sort_keys=True) + "\n")
    return EXIT_OK


def _choice(text, enum_cls, name):
    for member in enum_cls:
        if str(text).lower() == member.value.lower():
            return member
    raise ConfigError(f"{name}: expected one of {[m.value for m in enum_cls]}", field=name)


COMMANDS = {
    "transmission": cmd_transmission,
    "resonance": cmd_resonance,
    "bound": cmd_bound,
    "wavepacket": cmd_wavepacket,
}


HELP = {
    "transmission": "T and R on a (V0, E_k) grid, or on seeded random samples",
    "resonance": "trace perfect-transmission curves in the (V0, E_k) plane",
    "bound": "double-well bound-state spectrum versus well depth",
    "wavepacket": "time-dependent spinor packet through the smoothed double barrier",
}


def build_parser():
    parser = argparse.ArgumentParser(prog="kleinbarrier", description="Dirac double-barrier scattering, resonances, bound states and wave packets.")
    parser.add_argument("--version", action="version", version=f"kleinbarrier {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, defaults in DEFAULTS.items():
        p = sub.add_parser(name, help=HELP[name], description=HELP[name])
        p.add_argument("--config", help="key = value file; flags override it")
        for key, value in defaults.items():
            flag = "--" + key.replace("_", "-")
            p.add_argument(flag, dest=key, default=None, help=f"default: {value!r}")
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve(args.command, args)
        return COMMANDS[args.command](cfg)
    except ConfigError as exc:
        field = f" [{exc.field}]" if exc.field else ""
        print(f"kleinbarrier: configuration error{field}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StabilityError as exc:
        print(f"kleinbarrier: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except KleinBarrierError as exc:
        print(f"kleinbarrier: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
