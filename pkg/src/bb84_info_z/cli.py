"""``bb84z``: command-line experiments.

Subcommands write CSV to ``--out`` (or stdout).  Exit status is 0 on success,
1 when a verification fails, 2 on invalid input.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from pathlib import Path

from . import __version__, attacks, bounds, experiments, gf2
from .config import ConfigError, build_protocol_config, load_config, resolve_attack
from .protocol import run_trials
from .rng import PRNG_ALGORITHM

EXIT_OK, EXIT_FAILED, EXIT_INVALID = 0, 1, 2


class _InvalidInput(Exception):
    pass


def _fmt(value, sig: int | None = None) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(int(value))
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        return f"{value:.{sig}g}" if sig else repr(value)
    return str(value)


def write_csv(rows, columns, out, sig: int | None = None):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(c), sig) for c in columns])
    text = buf.getvalue()
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _floats(text: str, name: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise _InvalidInput(f"{name}: expected comma-separated numbers, got {text!r}") from None


def cmd_run(args) -> int:
    values = load_config(args.config)
    if args.trials is not None:
        values["trials"] = args.trials
    if args.attack is not None:
        values["attack"] = args.attack
    cfg = build_protocol_config(values, seed=args.seed)
    attack = resolve_attack(values.get("attack", "identity"), values.get("_base_dir"))
    trials = values.get("trials", 1)
    if trials < 1:
        raise ConfigError("trials: must be at least 1")
    transcripts = run_trials(cfg, attack, trials, workers=args.workers)
    write_csv([experiments.trial_row(i, t) for i, t in enumerate(transcripts)], experiments.TRIAL_COLUMNS, args.out)
    summary = experiments.summarize(transcripts)
    lines = [f"# attack: {attack.name}", f"# code: n={cfg.n} r={cfg.code.r} m={cfg.code.m}"]
    lines += [f"# {k}: {_fmt(v)}" for k, v in summary.items()]
    text = "\n".join(lines) + "\n"
    if args.summary:
        Path(args.summary).write_text(text)
    sys.stderr.write(text)
    return EXIT_OK


def _bound_params_from(values: dict) -> bounds.BoundParams:
    try:
        return bounds.BoundParams(
            n=int(values["n"]), n_z=int(values["n_z"]), n_x=int(values["n_x"]),
            r=int(values.get("r", 0)), m=int(values["m"]),
            p_az=float(values["p_az"]), p_ax=float(values["p_ax"]),
            eps_sec=float(values.get("eps_sec", 0.0)), eps_rel=float(values.get("eps_rel", 0.0)),
        )
    except KeyError as exc:
        raise _InvalidInput(f"{exc.args[0]}: missing") from None
    except (TypeError, ValueError) as exc:
        raise _InvalidInput(str(exc)) from None


def cmd_bounds(args) -> int:
    tuples = []
    if args.input:
        with open(args.input, newline="") as fh:
            tuples = list(csv.DictReader(fh))
    else:
        values = load_config(args.config) if args.config else {}
        for key in ("n", "n_z", "n_x", "r", "m", "p_az", "p_ax", "eps_sec", "eps_rel"):
            v = getattr(args, key)
            if v is not None:
                values[key] = v
        tuples = [values]
    rows = [bounds.report_row(_bound_params_from(t)) for t in tuples]
    write_csv(rows, experiments.BOUND_COLUMNS, args.out)
    return EXIT_OK


def cmd_curve(args) -> int:
    if args.grid_start < 0 or args.grid_end >= 0.25:
        raise _InvalidInput("grid: p_ax values must lie in [0, 0.25)")
    curve = bounds.threshold_curve(bounds.grid(args.grid_start, args.grid_end, args.grid_step))
    write_csv([{"p_ax": a, "p_az": z} for a, z in curve], experiments.CURVE_COLUMNS, args.out, sig=10)
    return EXIT_OK


def cmd_verify_distance(args) -> int:
    if args.attack:
        suite = [resolve_attack(a) for a in args.attack]
        codes = experiments.default_codes(args.seed, range(args.n_min, args.n_max + 1), args.max_rm,
                                          args.codes_per_shape)
        instances = [experiments.Instance(a, c) for a in suite for c in codes]
    else:
        instances = experiments.default_instances(args.seed)
        instances = [i for i in instances if args.n_min <= i.code.n <= args.n_max
                     and i.code.r + i.code.m <= args.max_rm]
    rows = experiments.verify_distance(instances, workers=args.workers)
    write_csv(rows, experiments.VERIFY_COLUMNS, args.out)
    checked = [r for r in rows if r["status"] in ("ok", "violation")]
    bad = [r for r in checked if r["status"] == "violation"]
    skipped = len(rows) - len(checked)
    sys.stderr.write(f"# instances: {len(checked)} checked, {skipped} skipped, {len(bad)} violations\n")
    return EXIT_FAILED if bad else EXIT_OK


def cmd_hoeffding(args) -> int:
    weights = [int(w) for w in _floats(args.weights, "weights")]
    eps = _floats(args.eps, "eps")
    if any(e <= 0 for e in eps):
        raise _InvalidInput("eps: values must be positive")
    if args.n < 1 or args.n_x < 1:
        raise _InvalidInput("n, n_x: must be positive")
    try:
        rows = experiments.hoeffding_rows(args.n, args.n_x, weights, eps, args.trials, args.seed)
    except bounds.BoundsError as exc:
        raise _InvalidInput(str(exc)) from None
    write_csv(rows, experiments.HOEFFDING_COLUMNS, args.out)
    return EXIT_OK if all(r["ok"] for r in rows) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bb84z", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version",
                        version=f"bb84z {__version__} (PRNG: {PRNG_ALGORITHM})")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run protocol trials against an attack")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--attack", help="overrides the config's attack")
    p.add_argument("--out")
    p.add_argument("--summary", help="also write the summary block here")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bounds", help="evaluate security, reliability and rate bounds")
    p.add_argument("--config")
    p.add_argument("--input", help="CSV of parameter tuples (one per row)")
    p.add_argument("--n", type=int)
    p.add_argument("--n-z", dest="n_z", type=int)
    p.add_argument("--n-x", dest="n_x", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--m", type=int)
    p.add_argument("--p-az", dest="p_az", type=float)
    p.add_argument("--p-ax", dest="p_ax", type=float)
    p.add_argument("--eps-sec", dest="eps_sec", type=float)
    p.add_argument("--eps-rel", dest="eps_rel", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("curve", help="asymptotic (p_ax, p_az) threshold curve")
    p.add_argument("--grid-start", type=float, default=0.0)
    p.add_argument("--grid-end", type=float, default=0.245)
    p.add_argument("--grid-step", type=float, default=0.005)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curve)

    p = sub.add_parser("verify-distance", help="exhaustively check Eve's key-state distances against the bound")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--attack", action="append", help="attack id (repeatable); default: built-in suite")
    p.add_argument("--n-min", type=int, default=2)
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--max-rm", type=int, default=4)
    p.add_argument("--codes-per-shape", type=int, default=1)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out")
    p.set_defaults(func=cmd_verify_distance)

    p = sub.add_parser("hoeffding", help="Monte-Carlo sampling tails against the Hoeffding bound")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--n-x", dest="n_x", type=int, default=100)
    p.add_argument("--weights", default="10,20,50")
    p.add_argument("--eps", default="0.05,0.1,0.15,0.2,0.3")
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hoeffding)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, _InvalidInput, bounds.BoundsError, gf2.Gf2Error, attacks.AttackError) as exc:
        sys.stderr.write(f"bb84z {args.command}: error: {exc}\n")
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
