"""Command-line frontend: ``stepfdr <subcommand> ...``.

Every subcommand writes CSV (to stdout, or to ``--out``) with floats printed to
17 significant digits. With ``--out PATH`` a manifest ``PATH.manifest.toml`` is
written next to the output; ``stepfdr run PATH.manifest.toml --out NEW`` replays
it and reproduces the CSV bytes exactly, whatever ``--threads`` is used.

Exit codes: 0 success, 1 usage or configuration error, 2 identity check failure.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import sys
import time
from pathlib import Path

import tomli_w

from . import __version__
from .calibrate import solve_kappa
from .core import ConfigurationError
from .identities import run_suite
from .mc import ScenarioConfig, figure1_table, run, sweep, sweep_rows
from .schedules import make_schedule

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover - exercised on 3.10 only
    import tomli as tomllib

EXIT_OK, EXIT_CONFIG, EXIT_IDENTITY = 0, 1, 2

REPORT_HEADER = ("estimand", "estimate", "se", "reps", "seed")
SWEEP_HEADER = ("axis", "value") + REPORT_HEADER
CHECK_HEADER = ("identity", "scenario", "lhs", "rhs", "residual", "pass")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: error: {message}")


# --------------------------------------------------------------------------- output

def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


class _Outputs:
    """Collects CSV outputs and writes them plus the manifest."""

    def __init__(self, out):
        self.out = Path(out) if out else None
        self.paths = []

    def emit(self, text, suffix=None):
        if self.out is None:
            sys.stdout.write(text)
            return
        path = self.out if suffix is None else self.out.with_name(self.out.name + suffix)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8", newline="")
        self.paths.append(str(path))

    def manifest(self, subcommand, seed, tables, started):
        if self.out is None:
            return
        doc = dict(tables)
        doc["manifest"] = {"subcommand": subcommand, "seed": int(seed), "version": __version__,
                           "outputs": self.paths,
                           "wall_time": time.perf_counter() - started}
        path = self.out.with_name(self.out.name + ".manifest.toml")
        path.write_bytes(tomli_w.dumps(_clean(doc)).encode("utf-8"))


def _clean(obj):
    """Drop ``None`` values, which TOML cannot represent."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items() if v is not None}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def _load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise ConfigurationError(f"cannot read {path}: {exc.strerror or exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"invalid TOML in {path}: {exc}") from None


def _parse_value(text):
    for conv in (int, float):
        try:
            return conv(text)
        except ValueError:
            pass
    return {"true": True, "false": False}.get(text.lower(), text)


# --------------------------------------------------------------------------- commands

def _config_from(doc, args) -> ScenarioConfig:
    cfg = ScenarioConfig.from_dict(doc)
    for name in ("reps", "seed", "threads"):
        value = getattr(args, name, None)
        if value is not None:
            cfg = dataclasses.replace(cfg, **{name: value})
    return cfg


def cmd_crit(args, started):
    sched = make_schedule(args.family, args.n, args.alpha, args.delta, args.b, args.improved)
    out = _Outputs(args.out)
    out.emit(_csv_text(("i", "alpha_i"), enumerate(map(float, sched.alphas), start=1)))
    out.manifest("crit", 0, {"args": _args_table(args, ("family", "n", "alpha", "delta", "b",
                                                        "improved"))}, started)
    return EXIT_OK


def cmd_run(args, started):
    doc = _load_toml(args.config)
    sub = doc.get("manifest", {}).get("subcommand", "run")
    if sub != "run":
        return _replay(sub, doc, args, started)
    cfg = _config_from(doc, args)
    report = run(cfg)
    out = _Outputs(args.out)
    out.emit(_csv_text(REPORT_HEADER, report.rows()))
    out.manifest("run", cfg.seed, cfg.to_dict(), started)
    return EXIT_OK


def cmd_sweep(args, started):
    doc = _load_toml(args.config)
    axis = args.axis if args.axis is not None else doc.get("sweep", {}).get("axis")
    values = ([_parse_value(v) for v in args.values.split(",")] if args.values is not None
              else doc.get("sweep", {}).get("values"))
    if axis is None or not values:
        raise ConfigurationError("sweep needs --axis and --values (or a [sweep] table)")
    cfg = _config_from(doc, args)
    results = sweep(cfg, axis, values)
    out = _Outputs(args.out)
    out.emit(_csv_text(SWEEP_HEADER, sweep_rows(axis, results)))
    tables = cfg.to_dict()
    tables["sweep"] = {"axis": axis, "values": list(values)}
    out.manifest("sweep", cfg.seed, tables, started)
    return EXIT_OK


FIGURE1_COLUMNS = ("n0", "fdr_su", "se_su", "fdr_sd", "se_sd", "fdr_sd_improved",
                   "se_sd_improved", "exact_su", "exact_sd", "exact_sd_improved")


def cmd_figure1(args, started):
    rows = figure1_table(args.n, args.alpha, args.reps, args.seed, args.threads)
    out = _Outputs(args.out)
    out.emit(_csv_text(FIGURE1_COLUMNS, ([r[c] for c in FIGURE1_COLUMNS] for r in rows)))
    out.manifest("figure1", args.seed, {"args": _args_table(args, ("n", "alpha", "reps", "seed"))},
                 started)
    return EXIT_OK


def cmd_calibrate(args, started):
    res = solve_kappa(args.n, args.alpha, args.tol, args.xtol)
    out = _Outputs(args.out)
    header = ("n", "alpha", "kappa", "worst_case_fdr", "argmax_n1", "iterations",
              "bracket_lo", "bracket_hi")
    out.emit(_csv_text(header, [(res.n, float(res.alpha), res.kappa, res.worst_case_fdr_at_kappa,
                                 res.argmax_n1, res.iterations, *map(float, res.bracket))]))
    if args.out:
        out.emit(_csv_text(("n1", "fdr"), enumerate(map(float, res.curve))), suffix=".curve.csv")
    out.manifest("calibrate", 0, {"args": _args_table(args, ("n", "alpha", "tol", "xtol"))},
                 started)
    return EXIT_OK


def _parse_perturb(text):
    try:
        index, eps = text.split(":")
        return int(index), float(eps)
    except ValueError:
        raise ConfigurationError(f"--perturb expects INDEX:EPS, got {text!r}") from None


def cmd_check_identities(args, started):
    perturb = _parse_perturb(args.perturb) if args.perturb else None
    checks = run_suite(reps=args.reps, seed=args.seed, fuzz=args.fuzz, perturb=perturb)
    out = _Outputs(args.out)
    out.emit(_csv_text(CHECK_HEADER, (c.row() for c in checks)))
    out.manifest("check-identities", args.seed,
                 {"args": _args_table(args, ("reps", "seed", "fuzz", "perturb"))}, started)
    failed = [c.identity for c in checks if not c.passed]
    if failed:
        print(f"identity checks failed: {', '.join(failed)}", file=sys.stderr)
        return EXIT_IDENTITY
    return EXIT_OK


def _args_table(args, names):
    return {k: getattr(args, k) for k in names}


def _replay(sub, doc, args, started):
    """Re-run a non-``run`` manifest with its recorded arguments."""
    stored = doc.get("args", {})
    parser = build_parser()
    argv = [sub]
    for key, value in stored.items():
        flag = "--" + key.replace("_", "-")
        if isinstance(value, bool):
            if value:
                argv.append(flag)
        else:
            argv += [flag, _fmt(value)]
    if sub == "sweep":
        argv = [sub, args.config]
    if args.out:
        argv += ["--out", args.out]
    if args.threads is not None and sub in ("figure1", "sweep"):
        argv += ["--threads", str(args.threads)]
    new = parser.parse_args(argv)
    return new.func(new, started)


# --------------------------------------------------------------------------- parser

def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="stepfdr", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("crit", help="print a critical-value schedule")
    p.add_argument("--family", required=True)
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--delta", type=float)
    p.add_argument("--b", type=float)
    p.add_argument("--improved", action="store_true",
                   help="floor the first value at 1-(1-alpha)**(1/n)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_crit)

    def mc_flags(p):
        p.add_argument("--reps", type=_positive_int)
        p.add_argument("--seed", type=int)
        p.add_argument("--threads", type=_positive_int)
        p.add_argument("--out")

    p = sub.add_parser("run", help="run a scenario config (or replay any manifest)")
    p.add_argument("config")
    mc_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario config over one parameter")
    p.add_argument("config")
    p.add_argument("--axis")
    p.add_argument("--values", help="comma separated values")
    mc_flags(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figure1", help="FDR of SU, SD and improved SD under DU(n - n0)")
    p.add_argument("--n", type=_positive_int, default=50)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--reps", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_figure1)

    p = sub.add_parser("calibrate", help="solve for the step-up parameter kappa_n")
    p.add_argument("--n", type=_positive_int, required=True)
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--xtol", type=float, default=1e-9)
    p.add_argument("--out")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("check-identities", help="run the identity self-check suite")
    p.add_argument("--reps", type=_positive_int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fuzz", type=_positive_int, default=10_000)
    p.add_argument("--perturb", metavar="INDEX:EPS",
                   help="shift beta_INDEX by EPS in the decomposition check (fault injection)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_check_identities)
    return parser


def main(argv=None) -> int:
    started = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, started)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_CONFIG
    except ConfigurationError as exc:
        print(f"stepfdr: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
