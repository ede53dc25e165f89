"""Command-line front end: ``bnv {window,eigen,shoot,verify,sweep}``."""
from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import logging
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import radial_ode, verify
from .radial_ode import ConvergenceError, IntegrationError
from .specfun import DEFAULT_TOL, Dimension, SeriesConvergenceError
from .window import CapGeometry, ZeroNotFoundError, dirichlet_lambda1, lambda_window

log = logging.getLogger("bnv")

COMMANDS = ("window", "eigen", "shoot", "verify", "sweep")
FORMATS = ("json", "csv", "text")
EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

# tolerance knobs accepted as --tol.<name> or ``tol.<name> = value``
TOLERANCES = {
    "series": DEFAULT_TOL,
    "ode_rtol": radial_ode.RTOL,
    "boundary": radial_ode.BOUNDARY_TOL,
    "eigen_grid": 4000,
    "wronskian": verify.WRONSKIAN_TOL,
    "ordering": verify.ORDERING_RTOL,
    "pohozaev_A": verify.A_TOL,
    "riccati": verify.RICCATI_TOL,
    "y_limit": verify.Y_LIMIT_TOL,
}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    command: str
    n: float | None = None
    theta1: float | None = None
    lam: float | None = None
    eps: float | None = None
    grid: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=lambda: dict(TOLERANCES))
    output_path: str | None = None
    trajectory_path: str | None = None
    format: str = "text"
    jobs: int = 1

    def tol(self, name):
        return self.tolerances[name]


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def _num(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        return "null"
    return format(x, ".17g")


def dumps(obj) -> str:
    """Deterministic JSON: insertion-ordered keys, 17 significant digits."""
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {dumps(v)}"
                               for k, v in obj.items()) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(dumps(v) for v in obj) + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def write_trajectory_csv(traj, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["theta", "u", "du"])
    for t, u, du in zip(traj.thetas, traj.u, traj.du):
        w.writerow([_num(t), _num(u), _num(du)])


def read_trajectory_csv(fh):
    rows = list(csv.reader(fh))
    if rows[0] != ["theta", "u", "du"]:
        raise ValueError(f"unexpected CSV header {rows[0]!r}")
    data = np.array([[float(v) for v in r] for r in rows[1:]])
    return data[:, 0], data[:, 1], data[:, 2]


def _flat_csv(record: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(record))
    w.writerow([_num(v) if isinstance(v, float) else v for v in record.values()])
    return buf.getvalue()


def _text(record: dict) -> str:
    lines = []
    for k, v in record.items():
        if isinstance(v, float):
            v = f"{v:.12g}"
        lines.append(f"{k}: {v}")
    return "\n".join(lines) + "\n"


def _render(record: dict, fmt: str) -> str:
    if fmt == "json":
        return dumps(record) + "\n"
    if fmt == "csv":
        return _flat_csv(record)
    return _text(record)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def _geometry(cfg):
    if cfg.n is None or cfg.theta1 is None:
        raise ConfigError("--n and --theta1 (or --theta1-deg) are required")
    try:
        return Dimension(cfg.n), CapGeometry(cfg.theta1)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def window_record(n: float, theta1: float, series_tol: float = DEFAULT_TOL) -> dict:
    win = lambda_window(Dimension(n), CapGeometry(theta1), series_tol)
    return {"n": n, "theta1": theta1, "ell1": win.ell1, "ell2": win.ell2,
            "lambda_low": win.lambda_low, "lambda_high": win.lambda_high}


def outcome_record(dim, cap, lam, out) -> dict:
    traj = out.trajectory
    return {"n": dim.n, "theta1": cap.theta1, "lambda": lam, "kind": out.kind,
            "amplitude": out.amplitude, "boundary_residual": out.boundary_residual,
            "max_residual": traj.max_residual if traj is not None else None,
            "monotone": out.monotone, "diagnostic": out.diagnostic}


def _emit(cfg, text: str) -> None:
    if cfg.output_path:
        with open(cfg.output_path, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_window(cfg) -> int:
    dim, cap = _geometry(cfg)
    _emit(cfg, _render(window_record(dim.n, cap.theta1, cfg.tol("series")), cfg.format))
    return EXIT_OK


def cmd_eigen(cfg) -> int:
    dim, cap = _geometry(cfg)
    exact = dirichlet_lambda1(dim, cap, cfg.tol("series"))
    oracle = radial_ode.linear_eigen_oracle(dim, cap, int(cfg.tol("eigen_grid")))
    rec = {"n": dim.n, "theta1": cap.theta1, "lambda1": exact, "oracle": oracle,
           "relative_difference": abs(oracle - exact) / abs(exact)}
    _emit(cfg, _render(rec, cfg.format))
    return EXIT_OK


def cmd_shoot(cfg) -> int:
    dim, cap = _geometry(cfg)
    if cfg.lam is None:
        raise ConfigError("shoot requires --lambda")
    out = radial_ode.shoot_bvp(dim, cfg.lam, cap, rtol=cfg.tol("ode_rtol"),
                               boundary_tol=cfg.tol("boundary"))
    if cfg.format == "csv":
        if out.trajectory is None:
            sys.stderr.write(f"{out.kind}: {out.diagnostic}\n")
            return EXIT_OK
        buf = io.StringIO()
        write_trajectory_csv(out.trajectory, buf)
        _emit(cfg, buf.getvalue())
        return EXIT_OK
    _emit(cfg, _render(outcome_record(dim, cap, cfg.lam, out), cfg.format))
    if cfg.trajectory_path and out.trajectory is not None:
        with open(cfg.trajectory_path, "w", newline="") as fh:
            write_trajectory_csv(out.trajectory, fh)
    return EXIT_OK


def cmd_verify(cfg) -> int:
    dim, cap = _geometry(cfg)
    tols = {k: cfg.tolerances[k] for k in
            ("series", "wronskian", "ordering", "pohozaev_A", "riccati", "y_limit")}
    reports = verify.run_suite(dim, cap, cfg.lam, cfg.eps, tols)
    ok = all(r.passed for r in reports)
    if cfg.format == "json":
        doc = {"schema": verify.SCHEMA, "n": dim.n, "theta1": cap.theta1,
               "pass": ok, "reports": [r.to_dict() for r in reports]}
        text = dumps(doc) + "\n"
    elif cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["name", "measured", "expected", "tolerance", "pass"])
        for r in reports:
            w.writerow([r.name, _num(r.measured), _num(r.expected),
                        _num(r.tolerance), "true" if r.passed else "false"])
        text = buf.getvalue()
    else:
        text = "".join(
            f"{'PASS' if r.passed else 'FAIL'} {r.name}: measured {r.measured:.6g}, "
            f"expected {r.expected:.6g}, tolerance {r.tolerance:.3g}\n" for r in reports)
    _emit(cfg, text)
    return EXIT_OK if ok else EXIT_FAIL


def _axis(bounds, name):
    if bounds is None:
        raise ConfigError(f"sweep requires --{name}-range START STOP COUNT")
    lo, hi, count = bounds
    count = int(count)
    if count < 1:
        raise ConfigError(f"--{name}-range count must be positive")
    return [float(v) for v in np.linspace(lo, hi, count)]


def _sweep_cell(args):
    n, theta1, lam, tols = args
    try:
        dim, cap = Dimension(n), CapGeometry(theta1)
        rec = window_record(n, theta1, tols["series"])
        if lam is None:
            return rec
        out = radial_ode.shoot_bvp(dim, lam, cap, rtol=tols["ode_rtol"],
                                   boundary_tol=tols["boundary"])
        predicted = rec["lambda_low"] < lam < rec["lambda_high"]
        rec.update({"lambda": lam, "predicted": predicted, "observed": out.positive,
                    "agree": predicted == out.positive, "amplitude": out.amplitude,
                    "diagnostic": out.diagnostic})
        return rec
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        return {"n": n, "theta1": theta1, "lambda": lam, "error": str(exc)}


def _theta_ok(t: float) -> bool:
    try:
        CapGeometry(t)
    except ValueError:
        return False
    return True


def cmd_sweep(cfg) -> int:
    ns = _axis(cfg.grid.get("n"), "n")
    ts = _axis(cfg.grid.get("theta1"), "theta1")
    for n in ns:
        if not 2.0 < n < 4.0:
            raise ConfigError(f"sweep n outside (2, 4): {n!r}")
    for t in ts:
        if not _theta_ok(t):
            raise ConfigError(f"sweep theta1 outside [0.05, pi/2]: {t!r}")
    lams = _axis(cfg.grid["lambda"], "lambda") if cfg.grid.get("lambda") else [None]
    cells = [(n, t, lam, cfg.tolerances) for n, t, lam in itertools.product(ns, ts, lams)]
    fh = open(cfg.output_path, "w") if cfg.output_path else sys.stdout
    failed = False
    try:
        if cfg.jobs > 1:
            with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
                results = pool.map(_sweep_cell, cells)
                for rec in results:
                    failed |= "error" in rec
                    fh.write(dumps(rec) + "\n")
                    fh.flush()
        else:
            for rec in map(_sweep_cell, cells):
                failed |= "error" in rec
                fh.write(dumps(rec) + "\n")
                fh.flush()
    finally:
        if fh is not sys.stdout:
            fh.close()
    return EXIT_FAIL if failed else EXIT_OK


HANDLERS = {"window": cmd_window, "eigen": cmd_eigen, "shoot": cmd_shoot,
            "verify": cmd_verify, "sweep": cmd_sweep}


def run(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------

def read_config_file(path: str) -> dict:
    """Flat ``name = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'name = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = value
    return out


def _parser():
    p = argparse.ArgumentParser(prog="bnv", description=__doc__)
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--n", type=float)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--theta1", type=float, help="cap radius in radians")
    g.add_argument("--theta1-deg", type=float, help="cap radius in degrees")
    p.add_argument("--lambda", dest="lam", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--format", choices=FORMATS)
    p.add_argument("--output")
    p.add_argument("--trajectory", help="CSV file for the shooting trajectory")
    p.add_argument("--config", help="flat 'name = value' file")
    p.add_argument("--jobs", type=int)
    for axis in ("n", "theta1", "lambda"):
        p.add_argument(f"--{axis}-range", nargs=3, type=float,
                       metavar=("START", "STOP", "COUNT"))
    return p


def _parse_tol_args(extra):
    tols = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--tol."):
            raise ConfigError(f"unrecognized argument {tok!r}")
        name = tok[len("--tol."):]
        if "=" in name:
            name, value = name.split("=", 1)
        else:
            value = next(it, None)
            if value is None:
                raise ConfigError(f"{tok} needs a value")
        tols[name] = value
    return tols


def _apply_tolerances(cfg, raw):
    for name, value in raw.items():
        if name not in TOLERANCES:
            raise ConfigError(f"unknown tolerance {name!r}; known: {sorted(TOLERANCES)}")
        try:
            cfg.tolerances[name] = float(value)
        except ValueError as exc:
            raise ConfigError(f"tolerance {name} must be numeric, got {value!r}") from exc


def build_config(argv) -> RunConfig:
    args, extra = _parser().parse_known_args(argv)
    cli_tols = _parse_tol_args(extra)
    file_vals = read_config_file(args.config) if args.config else {}
    file_tols = {k[4:]: v for k, v in file_vals.items() if k.startswith("tol.")}
    plain = {k: v for k, v in file_vals.items() if not k.startswith("tol.")}
    known = {"n", "theta1", "lambda", "eps", "format", "output", "jobs"}
    unknown = set(plain) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")

    def pick(arg, key, conv):
        if arg is not None:
            return arg
        if key in plain:
            try:
                return conv(plain[key])
            except ValueError as exc:
                raise ConfigError(f"config {key}: {exc}") from exc
        return None

    theta1 = args.theta1
    if args.theta1_deg is not None:
        theta1 = math.radians(args.theta1_deg)
    cfg = RunConfig(
        command=args.command,
        n=pick(args.n, "n", float),
        theta1=pick(theta1, "theta1", float),
        lam=pick(args.lam, "lambda", float),
        eps=pick(args.eps, "eps", float),
        output_path=pick(args.output, "output", str),
        trajectory_path=args.trajectory,
        format=pick(args.format, "format", str) or "text",
        jobs=pick(args.jobs, "jobs", int),
        grid={"n": args.n_range, "theta1": args.theta1_range,
              "lambda": args.lambda_range},
    )
    if cfg.format not in FORMATS:
        raise ConfigError(f"format must be one of {FORMATS}")
    if cfg.jobs is None:
        cfg.jobs = 1
    if cfg.jobs < 1:
        raise ConfigError("--jobs must be at least 1")
    if cfg.eps is not None and not cfg.eps > 0.0:
        raise ConfigError("--eps must be positive")
    _apply_tolerances(cfg, file_tols)
    _apply_tolerances(cfg, cli_tols)
    return cfg


def _setup_logging():
    level = os.environ.get("BNV_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    try:
        cfg = build_config(sys.argv[1:] if argv is None else argv)
        return run(cfg)
    except ConfigError as exc:
        sys.stderr.write(f"bnv: error: {exc}\n")
        return EXIT_CONFIG
    except (IntegrationError, ConvergenceError, ZeroNotFoundError,
            SeriesConvergenceError) as exc:
        sys.stderr.write(f"bnv: computation failed: {exc}\n")
        return EXIT_FAIL
    except SystemExit as exc:
        # argparse reports usage errors with status 2
        return int(exc.code) if isinstance(exc.code, int) else EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
