"""Command line entry point.

Subcommands: energy, verify, sweep, descent, asym. Tables go to ``--out``
(or stdout) as CSV; summaries go to stderr. The seed comes from ``--seed``,
else the ``LIQUIDDROP_SEED`` environment variable, else 0.

Exit status: 0 success, 1 failed checks, 2 usage or configuration errors.
"""

import argparse
import csv
import io
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import energy_opt, verify
from .asymmetry import minimize_center
from .errors import ConfigError, DomainError, NumericalFailure, ShapeFormatError
from .shapes import StarSurface, load_shape, perturbed_ball

SEED_ENV = "LIQUIDDROP_SEED"


@dataclass(frozen=True)
class RunConfig:
    """Options shared by every subcommand; all keys may appear in a config file."""

    seed: int = 0
    n: int = 0
    lam: float = 1.0
    grid: int = 32
    samples: int = 10**7
    tol: float = 0.0
    threads: int = 1
    out: str = ""


SUBCOMMAND_KEYS = {
    "verify": {"suite": str, "count": int},
    "sweep": {"max_degree": int, "lambda_min": float, "lambda_max": float, "lambda_points": int,
              "amplitude": float},
    "descent": {"steps": int, "step_size": float, "max_degree": int, "mode": int, "amplitude": float,
                "fd_step": float, "grad_tol": float},
    "energy": {"nl_method": str},
    "asym": {"functional": str},
}
_RUN_TYPES = {"seed": int, "n": int, "lam": float, "grid": int, "samples": int, "tol": float,
              "threads": int, "out": str}
_CONFIG_ALIASES = {"lambda": "lam"}


def read_config(path, command):
    """Flat ``key = value`` file; keys are the RunConfig fields plus the subcommand's own."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from exc
    schema = dict(_RUN_TYPES)
    schema["lambda"] = float
    schema.update(SUBCOMMAND_KEYS.get(command, {}))
    raw = energy_opt.parse_flat_config(text, schema)
    return {_CONFIG_ALIASES.get(k, k): v for k, v in raw.items()}


def resolve_seed(flag, config_value=None, environ=None):
    """Flag beats environment beats config file beats 0."""
    environ = os.environ if environ is None else environ
    if flag is not None:
        seed = flag
    elif environ.get(SEED_ENV, "").strip():
        try:
            seed = int(environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer, got {environ[SEED_ENV]!r}") from exc
    elif config_value is not None:
        seed = config_value
    else:
        seed = 0
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer")
    return seed


def _common(args):
    file_cfg = read_config(args.config, args.command) if args.config else {}
    run = {k: file_cfg.pop(k) for k in list(file_cfg) if k in _RUN_TYPES}
    flags = {"n": args.n, "lam": args.lam, "grid": args.grid, "samples": args.samples,
             "tol": args.tol, "threads": args.threads, "out": args.out}
    run.update({k: v for k, v in flags.items() if v is not None})
    given = set(run)
    run["seed"] = resolve_seed(args.seed, run.get("seed"))
    cfg = RunConfig(**run)
    if cfg.threads < 1:
        raise ConfigError("--threads must be at least 1")
    if cfg.grid < 4:
        raise ConfigError("--grid must be at least 4")
    if cfg.samples < 1:
        raise ConfigError("--samples must be positive")
    return cfg, file_cfg, given


def _emit(text, out):
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _note(msg):
    print(msg, file=sys.stderr)


# --------------------------------------------------------------------------
# subcommands


def cmd_energy(args):
    cfg, extra, given = _common(args)
    method = args.nl_method or extra.get("nl_method")
    if method not in (None, "mc", "surface"):
        raise ConfigError(f"nl_method must be 'mc' or 'surface', got {method!r}")
    shape = load_shape(args.shape)
    res = energy_opt.total_energy(shape, cfg.lam, nl_method=method, samples=cfg.samples, seed=cfg.seed)
    _emit(_csv(energy_opt.EnergyBreakdown.csv_header(), [res.csv_row()]), cfg.out)
    _note(f"total = {res.total!r}")
    return 0


def _rejudge(rec, tol):
    if rec.status == "skip" or rec.tolerance not in (verify.IDENTITY_TOL, verify.MARGIN_FLOOR):
        return rec
    ok = rec.margin <= tol if rec.kind == "identity" else rec.margin >= -tol
    return replace(rec, tolerance=tol, passed=bool(ok), status="pass" if ok else "fail")


def cmd_verify(args):
    cfg, extra, given = _common(args)
    suite = args.suite or extra.get("suite")
    if suite not in verify.SUITES:
        raise ConfigError(f"unknown suite {suite!r}; choose from {', '.join(verify.SUITES)}")
    count = args.count if args.count is not None else extra.get("count", 20)
    try:
        records = verify.run_suite(suite, n=cfg.n or None, seed=cfg.seed, count=count)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.tol > 0:
        records = [_rejudge(r, cfg.tol) for r in records]
    _emit(verify.records_to_csv(records), cfg.out)
    counts = verify.summarize(records)
    _note(f"pass={counts['pass']} fail={counts['fail']} skip={counts['skip']}")
    return 1 if counts["fail"] else 0


def cmd_sweep(args):
    cfg, extra, given = _common(args)
    sc = energy_opt.SweepConfig(**{k: v for k, v in extra.items()})
    if args.max_degree is not None:
        sc = replace(sc, max_degree=args.max_degree)
    sc = replace(sc, grid_res=cfg.grid)
    if sc.lambda_points < 2:
        raise ConfigError("lambda_points must be at least 2")
    report = energy_opt.mode_stability_sweep(sc.max_degree, sc.lambdas(), sc.amplitude, sc.grid_res)
    _emit(report.to_csv(), cfg.out)
    for line in report.summary_lines():
        _note(line)
    return 0


def cmd_descent(args):
    cfg, extra, given = _common(args)
    mode = extra.pop("mode", 2) if args.mode is None else args.mode
    amp = extra.pop("amplitude", 0.1) if args.amplitude is None else args.amplitude
    if args.steps is not None:
        extra["steps"] = args.steps
    if args.shape:
        start = load_shape(args.shape)
        if not isinstance(start, StarSurface):
            raise ConfigError("descent needs a star shape file")
    else:
        start = perturbed_ball(mode, amp)
    lam = cfg.lam if "lam" in given else 0.1
    dc = energy_opt.DescentConfig(lam=lam, **extra)
    if "grid" in given:
        dc = replace(dc, grid=(cfg.grid, 2 * cfg.grid))
    res = energy_opt.gradient_descent_shape(start, lam, config=dc)
    _emit(res.to_csv(), cfg.out)
    last = res.trajectory[-1]
    _note(f"status={res.status} steps={last.step} energy={last.energy.total!r} beta2={last.beta_squared!r}")
    return 0


def cmd_asym(args):
    cfg, extra, given = _common(args)
    functional = args.functional or extra.get("functional", "gamma")
    shape = load_shape(args.shape)
    res = minimize_center(shape, functional)
    _emit(_csv(res.csv_header(), [res.csv_row()]), cfg.out)
    _note(f"{functional} minimised at {res.center}")
    return 0 if res.converged else 1


# --------------------------------------------------------------------------
# parser


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--n", type=int, help="ambient dimension where relevant")
    common.add_argument("--lambda", dest="lam", type=float, help="nonlocal weight (energy default 1)")
    common.add_argument("--seed", type=int, help=f"random seed (overrides ${SEED_ENV})")
    common.add_argument("--grid", type=int, help="polar resolution of sphere grids")
    common.add_argument("--samples", type=int, help="Monte Carlo sample count")
    common.add_argument("--out", help="write CSV here instead of stdout")
    common.add_argument("--threads", type=int, help="worker cap; computations here are single threaded")
    common.add_argument("--tol", type=float, help="override default identity / inequality tolerances")
    common.add_argument("--config", help="flat key = value config file")

    p = argparse.ArgumentParser(prog="liquiddrop", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("energy", parents=[common], help="energy breakdown of a shape file")
    e.add_argument("shape", help="JSON shape file")
    e.add_argument("--nl-method", choices=("mc", "surface"), help="nonlocal estimator for star shapes")
    e.set_defaults(func=cmd_energy)

    v = sub.add_parser("verify", parents=[common], help="run a verification suite")
    v.add_argument("suite", nargs="?", help="one of " + ", ".join(verify.SUITES))
    v.add_argument("--count", type=int, help="random sets per battery (default 20)")
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("sweep", parents=[common], help="second variation of the ball by mode")
    s.add_argument("--max-degree", type=int)
    s.set_defaults(func=cmd_sweep)

    d = sub.add_parser("descent", parents=[common], help="gradient descent over star shapes")
    d.add_argument("shape", nargs="?", help="start shape file (default: perturbed ball)")
    d.add_argument("--steps", type=int)
    d.add_argument("--mode", type=int, help="zonal mode of the default start")
    d.add_argument("--amplitude", type=float, help="amplitude of the default start")
    d.set_defaults(func=cmd_descent)

    a = sub.add_parser("asym", parents=[common], help="optimal center for beta or gamma")
    a.add_argument("shape", help="JSON shape file")
    a.add_argument("--functional", choices=("beta", "gamma"))
    a.set_defaults(func=cmd_asym)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ShapeFormatError as exc:
        print(f"error: shape file: {exc}", file=sys.stderr)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: {exc.filename}: not found", file=sys.stderr)
    return 2


if __name__ == "__main__":
    sys.exit(main())
