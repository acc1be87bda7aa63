"""Command-line entry point.

Each subcommand validates its inputs, computes, then writes its outputs
atomically into the output directory (``--out``, else ``$SLELAB_OUTPUT_DIR``,
else the working directory).  Exit status: 0 success, 2 invalid input (no
files written), 1 numerical failure (a replay file is written).
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import math
import os
import sys
from pathlib import Path
from typing import Callable

import numpy as np

from slelab import __version__, _io
from slelab.driver import TimeGrid, sample_brownian, scale_driver, write_driver_csv
from slelab.exponents import exponent_record
from slelab.field import KappaGrid, default_exponents, holder_2d, sample_field
from slelab.grr import SampledField2D, increment_kernels, path_norms, sobolev_seminorm, verify_grr
from slelab.exponents import optimal_grr_exponents
from slelab.loewner import trace
from slelab import verify

ENV_OUTPUT = "SLELAB_OUTPUT_DIR"
EXIT_OK, EXIT_NUMERIC, EXIT_INVALID = 0, 1, 2

SEEDED = {"trace", "field", "verify-fprime", "verify-diffkappa", "verify-hdiff",
          "verify-bessel", "verify-reparam"}


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _floats(text: str) -> list[float]:
    try:
        return [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--config", type=Path, help="flat 'key = value' file; flags override it")
    common.add_argument("--out", type=Path, help=f"output directory (default ${ENV_OUTPUT} or .)")
    common.add_argument("--format", choices=["csv", "json"], default="csv")
    common.add_argument("--threads", type=int, default=1)
    common.add_argument("--seed", type=int)

    parser = _Parser(prog="slelab", description="Loewner flow and SLE regularity laboratory")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--replay", type=Path, help="re-run the case stored in a failure file")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("trace", parents=[common], help="trace of sqrt(kappa) B")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--y0", type=float)

    p = sub.add_parser("field", parents=[common], help="joint field gamma(t, kappa)")
    p.add_argument("--kappa-min", type=float, required=True)
    p.add_argument("--kappa-max", type=float, required=True)
    p.add_argument("--n-kappa", type=int, default=16)
    p.add_argument("--t1", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=256)
    p.add_argument("--y0", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--eta", type=float)

    p = sub.add_parser("exponents", parents=[common], help="exponent calculus for one kappa")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--r", type=float)
    p.add_argument("--eps", type=float, default=0.01)

    p = sub.add_parser("verify-fprime", parents=[common], help="derivative moment y-exponent")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--r", type=float, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--y", type=_floats, default=[0.4, 0.2, 0.1, 0.05])
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--estimator", choices=[verify.PLAIN, verify.MEDIAN_OF_MEANS],
                   default=verify.MEDIAN_OF_MEANS)

    p = sub.add_parser("verify-diffkappa", parents=[common], help="kappa-difference moments")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--kappa-tilde", type=_floats, required=True)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--x-offset", type=float, default=0.0)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--steps", type=int, default=4096)
    p.add_argument("--delta-sweep", type=_floats, default=[0.2, 0.1, 0.05])
    p.add_argument("--eps", type=float, default=0.01)
    p.add_argument("--estimator", choices=[verify.PLAIN, verify.MEDIAN_OF_MEANS],
                   default=verify.MEDIAN_OF_MEANS)

    p = sub.add_parser("verify-hdiff", parents=[common], help="pathwise reverse-flow difference bound")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--kappa-tilde", type=float, required=True)
    p.add_argument("--z-re", type=float, default=0.0)
    p.add_argument("--z-im", type=float, default=1.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--steps", type=int, default=1024)
    p.add_argument("--slack", type=float, default=0.05)

    p = sub.add_parser("verify-bessel", parents=[common], help="Bessel ordering on shared noise")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--kappa-tilde", type=float, required=True)
    p.add_argument("--x0", type=float, default=1.0)
    p.add_argument("--t-max", type=float, default=1.0)
    p.add_argument("--n", type=int, default=1000)
    p.add_argument("--dt", type=float, default=1e-3)
    p.add_argument("--refine-dt", type=float)

    p = sub.add_parser("verify-reparam", parents=[common], help="time-change law identity (KS test)")
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--n", type=int, default=2000)
    p.add_argument("--steps", type=int, default=1024)

    p = sub.add_parser("grr-check", parents=[common], help="GRR certificate for a sampled field")
    p.add_argument("--field-csv", type=Path, help="long-format CSV from the field subcommand")
    p.add_argument("--synthetic", choices=["sum", "first", "constant"], default="sum")
    p.add_argument("--n-grid", type=int, default=17)
    p.add_argument("--q", type=_floats, default=[4.0, 4.0], help="q_1,q_2")
    p.add_argument("--beta", type=_floats, default=[4.0, 4.0], help="beta_1,beta_2")

    p = sub.add_parser("norms", parents=[common], help="Hoelder, p-variation and Sobolev norms of a path")
    p.add_argument("--csv", type=Path, required=True, help="trace CSV or field CSV")
    p.add_argument("--over", choices=["t", "kappa"], default="t",
                   help="for field CSVs: kappa treats kappa -> gamma(., kappa) as a sup-metric path")
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--p", type=float, default=2.0)
    p.add_argument("--delta", type=float)
    p.add_argument("--q", type=float, default=2.0)
    return parser


def read_config(path: Path) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out: dict[str, str] = {}
    for n, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{n}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _config_path(argv: list[str]) -> Path | None:
    for i, tok in enumerate(argv):
        if tok == "--config" and i + 1 < len(argv):
            return Path(argv[i + 1])
        if tok.startswith("--config="):
            return Path(tok.split("=", 1)[1])
    return None


def _merge_config(parser: _Parser, argv: list[str]) -> argparse.Namespace:
    """Parse ``argv`` with values from ``--config`` installed as defaults."""
    path = _config_path(argv)
    command = next((tok for tok in argv if tok in COMMANDS), None)
    if path is not None and command is not None:
        sub = parser._subparsers._group_actions[0].choices[command]  # noqa: SLF001
        actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
        defaults = {}
        for key, raw in read_config(path).items():
            if key not in actions or key in ("help", "config"):
                raise UsageError(f"unknown config key {key!r} for {command}")
            act = actions[key]
            try:
                value = act.type(raw) if act.type else raw
            except (ValueError, TypeError, argparse.ArgumentTypeError) as exc:
                raise UsageError(f"config key {key!r}: {exc}") from exc
            if act.choices is not None and value not in act.choices:
                raise UsageError(f"config key {key!r}: {value!r} not in {sorted(act.choices)}")
            defaults[key] = value
        sub.set_defaults(**defaults)
        for act in sub._actions:  # noqa: SLF001
            if act.dest in defaults:
                act.required = False
    args = parser.parse_args(argv)
    if args.command is None and args.replay is None:
        raise UsageError("a subcommand is required")
    return args


def _outdir(args) -> Path:
    if args.out is not None:
        return Path(args.out)
    return Path(os.environ.get(ENV_OUTPUT, "."))


def _config_dict(args) -> dict:
    skip = {"config", "out", "replay"}
    return {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items() if k not in skip}


def _argv_from(cfg: dict) -> list[str]:
    argv = [cfg["command"]]
    for key, value in sorted(cfg.items()):
        if key == "command" or value is None:
            continue
        flag = "--" + key.replace("_", "-")
        if isinstance(value, list):
            value = ",".join(repr(float(v)) for v in value)
        argv += [flag, str(value)]
    return argv


# --------------------------------------------------------------------------
# subcommands return {filename: payload}; payload is a dict (JSON) or a
# (header, rows) tuple (CSV)


def _positive(name: str, value, strict: bool = True) -> None:
    if value is None or not (value > 0 if strict else value >= 0) or not math.isfinite(value):
        raise UsageError(f"{name} must be {'positive' if strict else 'nonnegative'}, got {value}")


def cmd_trace(args) -> dict:
    _positive("--kappa", args.kappa, strict=False)
    grid = TimeGrid(args.t1, args.steps)
    if args.y0 is not None:
        _positive("--y0", args.y0)
    driver = scale_driver(sample_brownian(grid, args.seed), args.kappa)
    tr = trace(driver, args.y0)
    if args.format == "json":
        return {"trace.json": {"kappa": args.kappa, "seed": args.seed, "y0": tr.y0,
                               "t": grid.nodes, "re_gamma": tr.gamma.real, "im_gamma": tr.gamma.imag}}
    return {"trace.csv": (["t", "re_gamma", "im_gamma"],
                          list(zip(grid.nodes, tr.gamma.real, tr.gamma.imag))),
            "driver.csv": ("driver", driver)}


def cmd_field(args) -> dict:
    kg = KappaGrid(args.kappa_min, args.kappa_max, args.n_kappa)
    grid = TimeGrid(args.t1, args.steps)
    alpha, eta = args.alpha, args.eta
    if alpha is None or eta is None:
        kg.require_subcritical()
        a0, e0 = default_exponents(kg.kappa_max)
        alpha = a0 if alpha is None else alpha
        eta = e0 if eta is None else eta
    if not (0 < alpha <= 1 and 0 < eta <= 1):
        raise UsageError("--alpha and --eta must lie in (0, 1]")
    fld = sample_field(sample_brownian(grid, args.seed), kg, args.y0, threads=args.threads)
    est = holder_2d(fld, alpha, eta)
    meta = {**fld.metadata(), "holder": est.to_dict()}
    T, K = np.meshgrid(fld.t, fld.kappa, indexing="ij")
    g = fld.gamma.ravel()
    if args.format == "json":
        return {"field.json": {**meta, "t": fld.t, "kappa": fld.kappa,
                               "re_gamma": fld.gamma.real, "im_gamma": fld.gamma.imag}}
    return {"field.csv": (["t", "kappa", "re_gamma", "im_gamma"],
                          list(zip(T.ravel(), K.ravel(), g.real, g.imag))),
            "field.json": meta}


def cmd_exponents(args) -> dict:
    _positive("--kappa", args.kappa)
    if args.r is not None and not args.r < 0.5 + 4.0 / args.kappa:
        raise UsageError(f"--r must be below r_c = {0.5 + 4.0 / args.kappa}")
    if not args.eps > 0:
        raise UsageError("--eps must be positive")
    return {"exponents.json": exponent_record(args.kappa, args.r, args.eps)}


def _report_files(report, fmt: str) -> dict:
    out = {f"{report.name}.json": report.to_dict()}
    if fmt == "csv" and report.header:
        out[f"{report.name}.csv"] = (report.header, report.rows)
    return out


def cmd_verify_fprime(args) -> dict:
    rep = verify.check_fprime_moment(args.kappa, args.r, args.t, args.y, args.n, args.seed,
                                     n_steps=args.steps, estimator=args.estimator, threads=args.threads)
    return _report_files(rep, args.format)


def cmd_verify_diffkappa(args) -> dict:
    rep = verify.check_f_diffkappa(args.kappa, args.kappa_tilde, args.t, args.delta, args.x_offset,
                                   args.p, args.n, args.seed, n_steps=args.steps,
                                   delta_sweep=args.delta_sweep, eps=args.eps,
                                   estimator=args.estimator, threads=args.threads)
    return _report_files(rep, args.format)


def cmd_verify_hdiff(args) -> dict:
    rep = verify.check_h_diff_pathwise(args.kappa, args.kappa_tilde, complex(args.z_re, args.z_im),
                                       args.t, args.n, args.seed, n_steps=args.steps,
                                       slack=args.slack, threads=args.threads)
    return _report_files(rep, args.format)


def cmd_verify_bessel(args) -> dict:
    rep = verify.bessel_compare(args.kappa, args.kappa_tilde, args.x0, args.t_max, args.n, args.seed,
                                dt=args.dt, refine_dt=args.refine_dt, threads=args.threads)
    return _report_files(rep, args.format)


def cmd_verify_reparam(args) -> dict:
    rep = verify.reparam_check(args.kappa, args.delta, args.t, args.n, args.seed,
                               n_steps=args.steps, threads=args.threads)
    return _report_files(rep, args.format)


def _read_table(path: Path) -> tuple[list[str], np.ndarray]:
    lines = [ln for ln in Path(path).read_text().splitlines() if ln and not ln.startswith("#")]
    if len(lines) < 2:
        raise UsageError(f"{path}: no data rows")
    header = [h.strip() for h in lines[0].split(",")]
    return header, np.array([[float(v) for v in ln.split(",")] for ln in lines[1:]])


def _field_from_csv(path: Path) -> SampledField2D:
    header, data = _read_table(path)
    need = ["t", "kappa", "re_gamma", "im_gamma"]
    if header[:4] != need:
        raise UsageError(f"{path}: expected columns {need}")
    t, kap = np.unique(data[:, 0]), np.unique(data[:, 1])
    if t.size * kap.size != data.shape[0]:
        raise UsageError(f"{path}: not a full (t, kappa) grid")
    g = (data[:, 2] + 1j * data[:, 3]).reshape(t.size, kap.size)
    return SampledField2D(t, kap, g)


def cmd_grr_check(args) -> dict:
    if len(args.q) != 2 or len(args.beta) != 2:
        raise UsageError("--q and --beta take two comma-separated values")
    config = optimal_grr_exponents(args.q[0], args.q[1], args.beta[0], args.beta[1])
    if args.field_csv is not None:
        G = _field_from_csv(args.field_csv)
        if not np.all(np.isfinite(G.values)):
            raise UsageError("field contains failed cells; GRR needs a complete field")
        k1, k2 = increment_kernels(G)
        source = str(args.field_csv)
    else:
        if args.n_grid < 2:
            raise UsageError("--n-grid must be at least 2")
        x = np.linspace(0.0, 1.0, args.n_grid)
        values = {"sum": x[:, None] + x[None, :], "first": x[:, None] + 0 * x[None, :],
                  "constant": np.zeros((x.size, x.size))}[args.synthetic]
        G = SampledField2D(x, x, values)
        k1 = lambda u, v, w: np.abs(u - v)  # noqa: E731
        k2 = (lambda v, u, w: 0 * u) if args.synthetic != "sum" else (lambda v, u, w: np.abs(u - w))  # noqa: E731
        source = f"synthetic:{args.synthetic}"
    rep = verify_grr(G, [k1], [k2], config)
    return {"grr_report.json": {"source": source, **rep.to_dict()}}


def cmd_norms(args) -> dict:
    header, data = _read_table(args.csv)
    if header[:3] == ["t", "re_gamma", "im_gamma"]:
        times, values = data[:, 0], data[:, 1] + 1j * data[:, 2]
    elif header[:4] == ["t", "kappa", "re_gamma", "im_gamma"]:
        G = _field_from_csv(args.csv)
        if args.over == "kappa":
            times, values = G.x2, G.values.T
        else:
            raise UsageError("field CSVs need --over kappa")
    elif header[:2] == ["t", "U"]:
        times, values = data[:, 0], data[:, 1]
    else:
        raise UsageError(f"{args.csv}: unrecognised columns {header}")
    if args.p < 1:
        raise UsageError("--p must be >= 1")
    rec = {"source": str(args.csv), "alpha": args.alpha, "p": args.p,
           **path_norms(values, args.alpha, args.p, times)}
    if args.delta is not None:
        if values.ndim != 1:
            raise UsageError("the Sobolev seminorm needs a scalar path")
        rec.update({"delta": args.delta, "q": args.q,
                    "sobolev_seminorm": sobolev_seminorm(values, args.delta, args.q, times)})
    return {"norms.json": rec}


COMMANDS: dict[str, Callable] = {
    "trace": cmd_trace,
    "field": cmd_field,
    "exponents": cmd_exponents,
    "verify-fprime": cmd_verify_fprime,
    "verify-diffkappa": cmd_verify_diffkappa,
    "verify-hdiff": cmd_verify_hdiff,
    "verify-bessel": cmd_verify_bessel,
    "verify-reparam": cmd_verify_reparam,
    "grr-check": cmd_grr_check,
    "norms": cmd_norms,
}


def _emit(outdir: Path, files: dict, cfg: dict) -> list[Path]:
    written = []
    for name, payload in files.items():
        target = outdir / name
        if isinstance(payload, dict):
            written.append(_io.write_json(target, payload))
        elif payload[0] == "driver":
            write_driver_csv(payload[1], target)
            written.append(target)
        else:
            written.append(_io.write_csv(target, *payload))
    meta = {
        "command": cfg["command"],
        "config": cfg,
        "files": [p.name for p in written],
        "version": __version__,
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
    }
    written.append(_io.write_json(outdir / f"{cfg['command']}.meta.json", meta))
    return written


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = _build_parser()
    try:
        args = _merge_config(parser, argv)
        if args.command is None:
            replay = json.loads(Path(args.replay).read_text())
            return run(replay["argv"])
        if args.command in SEEDED and args.seed is None:
            raise UsageError("--seed is required (no clock-based default)")
        if args.threads < 1:
            raise UsageError("--threads must be >= 1")
        cfg = _config_dict(args)
        outdir = _outdir(args)
        files = COMMANDS[args.command](args)
    except (UsageError, ValueError, OSError, KeyError) as exc:
        print(f"slelab: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ArithmeticError as exc:
        failure = {"command": args.command, "argv": _argv_from(cfg), "config": cfg,
                   "error": type(exc).__name__, "message": str(exc)}
        target = _io.write_json(_outdir(args) / f"failure_{args.command}.json", failure)
        print(f"slelab: numerical failure: {exc}; replay with --replay {target}", file=sys.stderr)
        return EXIT_NUMERIC
    written = _emit(outdir, files, cfg)
    for path in written:
        print(path)
    for name, payload in files.items():
        if isinstance(payload, dict) and "passed" in payload:
            print(f"{payload['check']}: {'PASS' if payload['passed'] else 'FAIL'}")
    return EXIT_OK


def main() -> None:
    sys.exit(run())
