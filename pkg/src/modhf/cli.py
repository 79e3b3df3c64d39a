"""Command line entry point ``modhf``.

Subcommands::

    modhf simulate --config run.json [--out-dir DIR] [--seed S]
    modhf norm FIELD_FILE --p P --q Q [--s S] [--method stft|decomp] [--out-dir DIR]
    modhf verify SUITE [--mode assert|record] [--bounds PATH] [--out-dir DIR]

Exit codes: 0 success, 1 failed verification, 2 configuration or input
error, 3 suspected blow-up.  ``MODHF_THREADS`` caps the FFT worker count.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .errors import BlowUpSuspected, ConfigError, DomainError
from .grid import Field, GridSpec, lp_norm
from .hermite import hermite_functions
from .io import (read_field, write_csv, write_diagnostics_csv, write_snapshots)
from .modspace import NormParams, build_partition, mod_norm
from .solver import ProblemSpec, integrate
from .symbols import SymbolSpec
from .verify import SUITES, run_suite

log = logging.getLogger("modhf")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP = 0, 1, 2, 3

PHYSICAL_KEYS = ("d", "n", "L", "N", "gamma", "kappa", "dispersion", "fock_enabled", "T",
                 "radial_hint", "initial")
NUMERIC_DEFAULTS = {
    "dt": 1e-3,
    "tol": 1e-10,
    "max_iter": 50,
    "snapshot_stride": 100,
    "scheme": "picard",
    "zero_mode": "zero",
    "norm_method": "decomp",
    "hermite_degree": None,
    "seed": 0,
}


def load_config(path):
    """Read a JSON run config, check required keys and fill numeric defaults."""
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    missing = [k for k in PHYSICAL_KEYS if k not in raw]
    if missing:
        raise ConfigError(f"config is missing required keys: {', '.join(missing)}")
    unknown = sorted(set(raw) - set(PHYSICAL_KEYS) - set(NUMERIC_DEFAULTS))
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
    return {**NUMERIC_DEFAULTS, **raw}


def _dispersion(entry):
    if not isinstance(entry, dict) or "kind" not in entry:
        raise ConfigError("dispersion must be an object with a 'kind'")
    kind = entry["kind"]
    if kind == "harmonic":
        return "harmonic"
    if kind == "laplacian":
        return SymbolSpec.laplacian()
    if kind == "fractional":
        return SymbolSpec.fractional(entry["alpha"])
    if kind == "polynomial":
        return SymbolSpec.polynomial({tuple(b): c for b, c in entry["coeffs"]})
    raise ConfigError(f"unknown dispersion kind {kind!r}")


def _initial_field(entry, grid, rng):
    kind = entry.get("type")
    d = grid.d
    center = np.asarray(entry.get("center", [0.0] * d), dtype=float)
    if center.shape != (d,):
        raise ConfigError(f"initial center must have {d} entries")
    shifted = [m - c for m, c in zip(grid.mesh, center)]
    if kind == "gaussian":
        width = float(entry["width"])
        momentum = np.asarray(entry.get("momentum", [0.0] * d), dtype=float)
        vals = np.exp(-sum(s**2 for s in shifted) / (2 * width**2))
        vals = vals * np.exp(2j * math.pi * sum(k * m for k, m in zip(momentum, grid.mesh)))
    elif kind == "hermite":
        index = entry["index"]
        vals = np.ones(grid.shape)
        for s, k in zip(shifted, index):
            vals = vals * hermite_functions(int(k), s.ravel())[int(k)].reshape(grid.shape)
    elif kind == "random":
        width = float(entry.get("width", 1.0))
        band = float(entry.get("band", 1.0))
        freqs = np.arange(-band, band + 1e-12, 0.25)
        vals = np.zeros(grid.shape, dtype=complex)
        for idx in np.ndindex(*(freqs.size,) * d):
            c = complex(rng.standard_normal(), rng.standard_normal())
            vals = vals + c * np.exp(
                2j * math.pi * sum(freqs[i] * m for i, m in zip(idx, grid.mesh)))
        vals = vals * np.exp(-sum(s**2 for s in shifted) / (2 * width**2))
    else:
        raise ConfigError(f"unknown initial data type {kind!r}")
    f = Field(grid, vals)
    mass = float(entry.get("mass", 1.0))
    return f * (math.sqrt(mass) / lp_norm(f, 2))


def build_problem(cfg):
    """``ProblemSpec`` from a loaded config."""
    try:
        grid = GridSpec(int(cfg["d"]), int(cfg["n"]), float(cfg["L"]))
        rng = np.random.default_rng(int(cfg["seed"]))
        initial = [_initial_field(e, grid, rng) for e in cfg["initial"]]
        if len(initial) != int(cfg["N"]):
            raise ConfigError(f"N = {cfg['N']} but {len(initial)} initial states were given")
        return ProblemSpec(
            grid=grid,
            gamma=float(cfg["gamma"]),
            kappa=float(cfg["kappa"]),
            dispersion=_dispersion(cfg["dispersion"]),
            fock_enabled=bool(cfg["fock_enabled"]),
            initial=initial,
            T=float(cfg["T"]),
            radial_hint=bool(cfg["radial_hint"]),
            zero_mode=str(cfg["zero_mode"]),
            hermite_degree=cfg["hermite_degree"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid config value: {exc!r}") from None


def cmd_simulate(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg["seed"] = args.seed
    spec = build_problem(cfg)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    traj = integrate(spec, float(cfg["dt"]), int(cfg["snapshot_stride"]), cfg["scheme"],
                     tol=float(cfg["tol"]), max_iter=int(cfg["max_iter"]),
                     norm_method=cfg["norm_method"])
    write_snapshots(out / "snapshots.bin", spec.grid, traj.times, np.stack(traj.states),
                    extra={"gamma": spec.gamma, "kappa": spec.kappa})
    write_diagnostics_csv(out / "diagnostics.csv", traj)
    masses = traj.diagnostics["mass"][-1]
    x = traj.diagnostics["m_norm_2q"].sum(axis=1)
    parts = [
        "final_mass=[" + ", ".join(f"{m:.12g}" for m in masses) + "]",
        f"max_mass_drift={traj.mass_drift().max():.3e}",
        f"max_norm_growth={float(x.max() / x[0]):.6g}",
    ]
    if spec.harmonic and spec.kappa == 0 and abs(spec.T / math.pi - round(spec.T / math.pi)) < 1e-12:
        phase = np.exp(-1j * spec.T * spec.grid.d)
        diff = traj.states[-1] - phase * traj.states[0]
        res = float(np.max(np.sqrt(np.sum(np.abs(diff) ** 2, axis=tuple(range(1, diff.ndim)))
                                   * spec.grid.cell)))
        parts.append(f"phase_return_residual={res:.3e}")
    print("simulate: " + " ".join(parts))
    return EXIT_OK


def cmd_norm(args):
    params = NormParams(args.p, args.q, args.s)
    f = read_field(args.field)
    dec = build_partition(f.grid) if args.method == "decomp" else None
    value = mod_norm(f, params, args.method, dec=dec)
    print(f"{value:.12g}")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "norms.csv"
    rows = []
    if path.exists():
        import csv

        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))[1:]
    rows.append([Path(args.field).stem, params.p, params.q, params.s, args.method, value])
    write_csv(path, ("function_id", "p", "q", "s", "method", "value"), rows)
    return EXIT_OK


def cmd_verify(args):
    suites = sorted(SUITES) if args.suite == "all" else [args.suite]
    if args.suite != "all" and args.suite not in SUITES:
        raise ConfigError(f"unknown suite {args.suite!r}; choose from {sorted(SUITES)} or 'all'")
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    ok = True
    for suite in suites:
        report = run_suite(suite, {"mode": args.mode, "bounds_path": args.bounds})
        report.write_csv(out / f"verify_{suite}.csv")
        failed = sum(not r.passed for r in report.rows)
        print(f"verify {suite}: {len(report.rows)} cases, {failed} failed")
        ok = ok and report.passed
    return EXIT_OK if ok else EXIT_FAIL


def _exponent(text):
    return math.inf if text.strip().lower() in ("inf", "infinity") else float(text)


def build_parser():
    parser = argparse.ArgumentParser(prog="modhf", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a configured Cauchy problem")
    sim.add_argument("--config", required=True, help="JSON run configuration")
    sim.add_argument("--out-dir", default=".", help="directory for snapshots and diagnostics")
    sim.add_argument("--seed", type=int, default=None, help="seed for random initial data")
    sim.set_defaults(func=cmd_simulate)

    norm = sub.add_parser("norm", help="modulation norm of a stored field")
    norm.add_argument("field", help="field file written by modhf.io.write_field")
    norm.add_argument("--p", type=_exponent, required=True)
    norm.add_argument("--q", type=_exponent, required=True)
    norm.add_argument("--s", type=float, default=0.0)
    norm.add_argument("--method", choices=("stft", "decomp"), default="stft")
    norm.add_argument("--out-dir", default=".")
    norm.set_defaults(func=cmd_norm)

    ver = sub.add_parser("verify", help="run an estimate-verification suite")
    ver.add_argument("suite", help=f"one of {', '.join(sorted(SUITES))}, or 'all'")
    ver.add_argument("--mode", choices=("assert", "record"), default="assert")
    ver.add_argument("--bounds", default=None, help="bounds JSON (default: packaged file)")
    ver.add_argument("--out-dir", default=".")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except BlowUpSuspected as exc:
        print(f"blow-up suspected: {exc}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
