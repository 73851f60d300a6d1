"""Command-line front end.

Subcommands: grid | scan | tomo | sphere | converge.  Every command accepts
--seed/--noise-sigma/--sys-visibility/--out/--format/--full-precision plus an
optional --config INI file; explicit flags override the file, the file
overrides built-in defaults.  Outputs are plain CSV/JSON data intended for
external plotting, and identical (config, seed) pairs produce byte-identical
files.

Exit codes: 0 success, 2 configuration error, 3 precondition violation,
4 identity alarm (tomography sum too far from 1).
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import math
import sys
from contextlib import contextmanager
from dataclasses import dataclass
from typing import IO, Optional

import numpy as np

from . import ensemble, observables, prepare, tomography
from .field import TwoPathBeam, fringe_scan, to_coherence_matrix, visibility_from_scan

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PRECONDITION = 3
EXIT_ALARM = 4

_DEFAULTS = {
    "seed": 0,
    "sigma_rel": 0.0,
    "f_sys": 0.981,
    "out": "-",
    "format": "csv",
    "full_precision": False,
}


@dataclass(frozen=True)
class RunConfig:
    seed: int
    sigma_rel: float
    f_sys: float
    out: str
    format: str
    full_precision: bool

    def __post_init__(self):
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed}")
        if self.sigma_rel < 0.0:
            raise ValueError(f"noise sigma must be nonnegative, got {self.sigma_rel}")
        if not 0.0 < self.f_sys <= 1.0:
            raise ValueError(f"systematic visibility must lie in (0, 1], got {self.f_sys}")
        if self.format not in ("csv", "json"):
            raise ValueError(f"format must be csv or json, got {self.format!r}")

    def formatter(self):
        if self.full_precision:
            return lambda x: repr(float(x))
        return lambda x: f"{float(x):.6g}"

    def jnum(self, x: float) -> float:
        return float(x) if self.full_precision else float(f"{float(x):.6g}")

    def noise(self, seed_offset: int = 0) -> Optional[tomography.NoiseModel]:
        if self.sigma_rel == 0.0 and self.f_sys == 1.0:
            return None
        return tomography.NoiseModel(self.sigma_rel, self.f_sys,
                                     self.seed + seed_offset)


def _load_config_file(path: str) -> dict:
    parser = configparser.ConfigParser()
    read = parser.read(path)
    if not read:
        raise ValueError(f"config file not found: {path}")
    values = {}
    if parser.has_option("run", "seed"):
        values["seed"] = parser.getint("run", "seed")
    if parser.has_option("noise", "sigma_rel"):
        values["sigma_rel"] = parser.getfloat("noise", "sigma_rel")
    if parser.has_option("noise", "sys_visibility"):
        values["f_sys"] = parser.getfloat("noise", "sys_visibility")
    if parser.has_option("output", "path"):
        values["out"] = parser.get("output", "path")
    if parser.has_option("output", "format"):
        values["format"] = parser.get("output", "format")
    if parser.has_option("output", "full_precision"):
        values["full_precision"] = parser.getboolean("output", "full_precision")
    return values


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    values = dict(_DEFAULTS)
    if args.config is not None:
        values.update(_load_config_file(args.config))
    overrides = {
        "seed": args.seed,
        "sigma_rel": args.noise_sigma,
        "f_sys": args.sys_visibility,
        "out": args.out,
        "format": args.format,
        "full_precision": True if args.full_precision else None,
    }
    for key, val in overrides.items():
        if val is not None:
            values[key] = val
    return RunConfig(**values)


@contextmanager
def _open_out(path: str):
    if path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _add_common(sub: argparse.ArgumentParser) -> None:
    sub.add_argument("--config", help="INI config file (flags override it)")
    sub.add_argument("--seed", type=int, default=None, help="base RNG seed")
    sub.add_argument("--noise-sigma", type=float, default=None,
                     help="relative std dev of each recorded intensity")
    sub.add_argument("--sys-visibility", type=float, default=None,
                     help="systematic visibility factor applied to spatial coherences")
    sub.add_argument("--out", default=None, help="output path ('-' for stdout)")
    sub.add_argument("--format", choices=("csv", "json"), default=None)
    sub.add_argument("--full-precision", action="store_true", default=None,
                     help="emit full float precision instead of 6 significant digits")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twopath",
        description="Two-path field laboratory: preparation, fringe scans, "
                    "joint tomography, sphere sampling, ensemble convergence.")
    subs = parser.add_subparsers(dest="command", required=True)

    p_grid = subs.add_parser("grid", help="the 13 benchmark states")
    p_grid.add_argument("--simulate", action="store_true",
                        help="attach simulated tomography readouts per state")
    p_grid.add_argument("--no-correct", action="store_true",
                        help="skip the systematic-visibility correction")
    _add_common(p_grid)

    p_scan = subs.add_parser("scan", help="fringe trace of a beam")
    p_scan.add_argument("--state", type=int, help="benchmark state index 1..13")
    p_scan.add_argument("--beam", help="beam spec JSON file")
    p_scan.add_argument("--points", type=int, default=101)
    _add_common(p_scan)

    p_tomo = subs.add_parser("tomo", help="simulated joint tomography")
    p_tomo.add_argument("--state", type=int, help="benchmark state index 1..13")
    p_tomo.add_argument("--beam", help="beam spec JSON file")
    p_tomo.add_argument("--matrix", help="coherence matrix JSON file")
    p_tomo.add_argument("--alarm-threshold", type=float, default=0.05,
                        help="exit nonzero if |V^2+D^2+C^2 - 1| exceeds this")
    p_tomo.add_argument("--no-correct", action="store_true",
                        help="skip the systematic-visibility correction")
    _add_common(p_tomo)

    p_sphere = subs.add_parser("sphere", help="sample the sphere octant")
    p_sphere.add_argument("--samples", type=int, default=1000)
    p_sphere.add_argument("--grid", action="store_true",
                          help="append the 13 benchmark nodes, flagged")
    _add_common(p_sphere)

    p_conv = subs.add_parser("converge", help="ensemble convergence study")
    p_conv.add_argument("--gamma", default="0.5",
                        help="target mutual coherence (python complex literal)")
    p_conv.add_argument("--schedule", default="1000,10000,100000,1000000",
                        help="comma-separated ensemble sizes")
    p_conv.add_argument("--trials", type=int, default=8,
                        help="independently seeded ensembles per size")
    p_conv.add_argument("--ratio", type=float, default=1.0,
                        help="amplitude ratio |B/A|")
    p_conv.add_argument("--time-samples", type=int, default=64)
    _add_common(p_conv)

    return parser


# --- grid --------------------------------------------------------------------

def _simulate_state(state: prepare.GridState, cfg: RunConfig,
                    correct: bool) -> tomography.TomographyRun:
    beam = prepare.realize(state.params)
    w = to_coherence_matrix(beam)
    return tomography.run_tomography(w, cfg.noise(seed_offset=state.index),
                                     correct=correct)


def cmd_grid(args, cfg: RunConfig) -> int:
    states = prepare.grid_states()
    runs = None
    if args.simulate:
        runs = [_simulate_state(s, cfg, correct=not args.no_correct) for s in states]
    fmt = cfg.formatter()
    with _open_out(cfg.out) as fh:
        if cfg.format == "csv":
            writer = csv.writer(fh)
            header = list(prepare.GRID_CSV_HEADER)
            if runs is not None:
                header += ["V_meas", "D_meas", "C_meas", "SUM"]
            writer.writerow(header)
            for k, s in enumerate(states):
                row = [s.index, fmt(s.target.v), fmt(s.target.d), fmt(s.target.c),
                       fmt(s.r_squared), fmt(s.cos_theta)]
                if runs is not None:
                    t = runs[k].triple
                    row += [fmt(t.v), fmt(t.d), fmt(t.c), fmt(t.sum)]
                writer.writerow(row)
        else:
            rows = []
            for k, s in enumerate(states):
                rec = {"index": s.index, "V": cfg.jnum(s.target.v),
                       "D": cfg.jnum(s.target.d), "C": cfg.jnum(s.target.c),
                       "R2": cfg.jnum(s.r_squared), "cos_theta": cfg.jnum(s.cos_theta)}
                if runs is not None:
                    t = runs[k].triple
                    rec.update({"V_meas": cfg.jnum(t.v), "D_meas": cfg.jnum(t.d),
                                "C_meas": cfg.jnum(t.c), "SUM": cfg.jnum(t.sum)})
                rows.append(rec)
            json.dump(rows, fh)
            fh.write("\n")
    return EXIT_OK


def read_grid_output_csv(stream: IO[str]) -> list[dict]:
    rows = []
    for rec in csv.DictReader(line for line in stream if not line.startswith("#")):
        rows.append({k: (int(v) if k == "index" else float(v))
                     for k, v in rec.items()})
    return rows


# --- scan --------------------------------------------------------------------

def _load_beam_file(path: str) -> TwoPathBeam:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read beam spec: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"beam spec is not valid JSON: {exc}") from exc
    try:
        return TwoPathBeam.from_json_dict(data)
    except KeyError as exc:
        raise ValueError(f"beam spec is missing field {exc.args[0]!r}") from exc
    except (TypeError, IndexError) as exc:
        raise ValueError(f"malformed beam spec: {exc}") from exc


def _resolve_beam(args) -> TwoPathBeam:
    if (args.state is None) == (args.beam is None):
        raise ValueError("specify exactly one of --state or --beam")
    if args.state is not None:
        states = prepare.grid_states()
        if not 1 <= args.state <= len(states):
            raise ValueError(f"state index must lie in 1..{len(states)}, got {args.state}")
        return prepare.realize(states[args.state - 1].params)
    return _load_beam_file(args.beam)


def cmd_scan(args, cfg: RunConfig) -> int:
    beam = _resolve_beam(args)
    scan = fringe_scan(beam, args.points)
    v_hat = visibility_from_scan(scan)
    fmt = cfg.formatter()
    with _open_out(cfg.out) as fh:
        if cfg.format == "csv":
            fh.write(f"# v_hat = {fmt(v_hat)}\n")
            writer = csv.writer(fh)
            writer.writerow(["delta", "intensity"])
            for delta, value in scan:
                writer.writerow([fmt(delta), fmt(value)])
        else:
            json.dump({"v_hat": cfg.jnum(v_hat),
                       "points": [[cfg.jnum(d), cfg.jnum(i)] for d, i in scan]}, fh)
            fh.write("\n")
    return EXIT_OK


def read_scan_csv(stream: IO[str]) -> tuple[float, np.ndarray]:
    v_hat = math.nan
    body = []
    for line in stream:
        if line.startswith("#"):
            _, _, value = line.partition("=")
            v_hat = float(value)
        else:
            body.append(line)
    rows = [(float(r["delta"]), float(r["intensity"])) for r in csv.DictReader(body)]
    return v_hat, np.array(rows)


# --- tomo --------------------------------------------------------------------

def cmd_tomo(args, cfg: RunConfig) -> int:
    given = [x for x in (args.state, args.beam, args.matrix) if x is not None]
    if len(given) != 1:
        raise ValueError("specify exactly one of --state, --beam, or --matrix")
    if args.matrix is not None:
        with open(args.matrix) as fh:
            w = tomography.matrix_from_json(fh.read())
    else:
        w = to_coherence_matrix(_resolve_beam(args))
    run = tomography.run_tomography(w, cfg.noise(), correct=not args.no_correct)
    diag = run.reconstructed.diagnostics
    if diag is not None and diag.flagged:
        eigs = ", ".join(f"{x:.3e}" for x in diag.raw_eigenvalues)
        print(f"warning: reconstruction left the physical cone before projection "
              f"(raw eigenvalues: {eigs})", file=sys.stderr)

    triple = run.triple
    fmt = cfg.formatter()
    if cfg.out == "-":
        json.dump({k: cfg.jnum(v) for k, v in triple.to_json_dict().items()},
                  sys.stdout)
        sys.stdout.write("\n")
    else:
        with open(cfg.out + ".record.csv", "w", newline="") as fh:
            tomography.write_record_csv(run.record, fh, fmt)
        with open(cfg.out + ".matrix.json", "w") as fh:
            data = [[[cfg.jnum(z.real), cfg.jnum(z.imag)] for z in row]
                    for row in np.asarray(run.reconstructed.matrix)]
            json.dump(data, fh)
            fh.write("\n")
        suffix = ".triple.json" if cfg.format == "json" else ".triple.csv"
        with open(cfg.out + suffix, "w", newline="") as fh:
            if cfg.format == "json":
                json.dump({k: cfg.jnum(v) for k, v in triple.to_json_dict().items()}, fh)
                fh.write("\n")
            else:
                writer = csv.writer(fh)
                writer.writerow(observables.CSV_HEADER)
                writer.writerow([fmt(x) for x in triple.csv_row()])
    if abs(triple.sum - 1.0) > args.alarm_threshold:
        print(f"identity alarm: V^2+D^2+C^2 = {triple.sum:.6f} deviates from 1 "
              f"beyond {args.alarm_threshold}", file=sys.stderr)
        return EXIT_ALARM
    return EXIT_OK


# --- sphere ------------------------------------------------------------------

def cmd_sphere(args, cfg: RunConfig) -> int:
    if args.samples < 1:
        raise ValueError(f"need at least one sample, got {args.samples}")
    points = prepare.sample_octant(args.samples, cfg.seed)
    rows = [(t.v, t.d, t.c, 0) for t in points]
    if args.grid:
        rows += [(s.target.v, s.target.d, s.target.c, s.index)
                 for s in prepare.grid_states()]
    fmt = cfg.formatter()
    with _open_out(cfg.out) as fh:
        if cfg.format == "csv":
            writer = csv.writer(fh)
            writer.writerow(["v", "d", "c", "grid_index"])
            for v, d, c, gi in rows:
                writer.writerow([fmt(v), fmt(d), fmt(c), gi])
        else:
            json.dump([{"v": cfg.jnum(v), "d": cfg.jnum(d), "c": cfg.jnum(c),
                        "grid_index": gi} for v, d, c, gi in rows], fh)
            fh.write("\n")
    return EXIT_OK


def read_sphere_csv(stream: IO[str]) -> list[dict]:
    rows = []
    for rec in csv.DictReader(line for line in stream if not line.startswith("#")):
        rows.append({"v": float(rec["v"]), "d": float(rec["d"]),
                     "c": float(rec["c"]), "grid_index": int(rec["grid_index"])})
    return rows


# --- converge ----------------------------------------------------------------

def cmd_converge(args, cfg: RunConfig) -> int:
    try:
        gamma = complex(args.gamma)
    except ValueError as exc:
        raise ValueError(f"cannot parse gamma {args.gamma!r}: {exc}") from exc
    if abs(gamma) > 1.0:
        raise ValueError(f"|gamma| must not exceed 1, got {abs(gamma)}")
    schedule = [int(tok) for tok in args.schedule.split(",") if tok]
    if args.ratio < 0.0:
        raise ValueError(f"amplitude ratio must be nonnegative, got {args.ratio}")
    amp_a = 1.0 / math.sqrt(1.0 + args.ratio ** 2)
    amp_b = args.ratio * amp_a
    result = ensemble.convergence_study(
        gamma, amp_a, amp_b, schedule=schedule, n_trials=args.trials,
        seed=cfg.seed, n_time_samples=args.time_samples)
    fmt = cfg.formatter()
    with _open_out(cfg.out) as fh:
        if cfg.format == "csv":
            ensemble.write_convergence_csv(result, fh, fmt)
        else:
            json.dump({
                "slopes": {k: (None if v is None else cfg.jnum(v))
                           for k, v in result.slopes.items()},
                "rows": [{"N": r.n, "V_err": cfg.jnum(r.v_err),
                          "D_err": cfg.jnum(r.d_err), "C_err": cfg.jnum(r.c_err),
                          "gamma_err": cfg.jnum(r.gamma_err)}
                         for r in result.rows],
            }, fh)
            fh.write("\n")
    return EXIT_OK


_COMMANDS = {
    "grid": cmd_grid,
    "scan": cmd_scan,
    "tomo": cmd_tomo,
    "sphere": cmd_sphere,
    "converge": cmd_converge,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _resolve_config(args)
    except ValueError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return _COMMANDS[args.command](args, cfg)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION


def entry_point() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry_point()
