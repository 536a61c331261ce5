"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 input-file error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys

import numpy as np

from . import bounds
from .decode import comp_decode, dd_decode, scomp_decode
from .design import ParameterError, load_design, load_outcomes, p_from_k
from .lp import ROUNDING_RULES, lp_decode
from .sim import DECODERS, SweepConfig, property_p_audit, run_sweep

EXIT_USAGE = 2
EXIT_INPUT = 3


class InputError(Exception):
    pass


def _float_range(text: str):
    try:
        lo, hi, step = (float(v) for v in text.split(":"))
        return bounds.theta_grid(lo, hi, step)
    except (ValueError, ParameterError) as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r} (want lo:hi:step inside (0,1)): {exc}")


def _int_range(text: str) -> tuple[int, ...]:
    try:
        parts = [int(v) for v in text.split(":")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad range {text!r}") from None
    if len(parts) == 1:
        return (parts[0],)
    if len(parts) != 3 or parts[2] <= 0 or parts[0] > parts[1]:
        raise argparse.ArgumentTypeError(f"bad range {text!r} (want lo:hi:step)")
    return tuple(range(parts[0], parts[1] + 1, parts[2]))


def _name_list(choices):
    def parse(text: str) -> tuple[str, ...]:
        names = tuple(s.strip() for s in text.split(",") if s.strip())
        bad = [s for s in names if s not in choices]
        if bad or not names:
            raise argparse.ArgumentTypeError(f"unknown names {bad}; choose from {', '.join(choices)}")
        return names
    return parse


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return v


def _emit(text: str, out: str | None) -> None:
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(out, "w", newline="") as fh:
            fh.write(text)


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _fmt(v) -> str:
    return f"{v:.6f}" if isinstance(v, float) else str(v)


def cmd_bounds(args) -> int:
    thetas = args.theta
    curves = {name: bounds.rate_curve(name, thetas) for name in args.curves}
    meta = bounds.crossovers()
    meta["theta_star_closed_form"] = bounds.theta_star()
    header = ["theta", *args.curves]
    rows = [[float(th)] + [curves[c].samples[i][1] for c in args.curves] for i, th in enumerate(thetas)]
    if args.format == "json":
        doc = {"columns": header,
               "rows": [dict(zip(header, (round(v, 6) for v in r))) for r in rows],
               "metadata": {k: round(v, 6) for k, v in meta.items()}}
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        lines = "".join(f"# {k}={v:.6f}\n" for k, v in meta.items())
        _emit(lines + _csv_text(header, [[_fmt(v) for v in r] for r in rows]), args.out)
    return 0


def _parse_p(text: str, k: int):
    if text == "auto":
        return {"p_mode": "reciprocal"}
    if text.startswith("nu:"):
        return {"p_mode": "nu_over_k", "nu": float(text[3:])}
    return {"p_mode": "explicit", "p": float(text)}


SWEEP_HEADER = ["decoder", "t", "trials", "successes", "success_rate", "ci_low", "ci_high"]


def cmd_simulate(args, parser) -> int:
    try:
        config = SweepConfig(n=args.n, k=args.k, t_values=args.t, trials=args.trials,
                             decoders=args.decoders, master_seed=args.seed, **_parse_p(args.p, args.k))
    except (ParameterError, ValueError) as exc:
        parser.error(str(exc))
    result = run_sweep(config, workers=args.workers)
    rows = result.rows()
    if args.format == "json":
        doc = {"config": {"n": config.n, "k": config.k, "p": config.p_value, "trials": config.trials,
                          "seed": config.master_seed},
               "rows": [{k: round(v, 6) if isinstance(v, float) else v for k, v in r.items()} for r in rows]}
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        _emit(_csv_text(SWEEP_HEADER, [[_fmt(r[h]) for h in SWEEP_HEADER] for r in rows]), args.out)
    return 0


def cmd_decode(args) -> int:
    try:
        design = load_design(args.design)
        outcomes = load_outcomes(args.outcomes)
    except (OSError, ParameterError) as exc:
        raise InputError(str(exc)) from None
    if outcomes.shape[0] != design.t:
        raise InputError(f"outcomes have {outcomes.shape[0]} entries but design has {design.t} tests")
    rng = np.random.default_rng(args.seed)
    name = args.decoder
    if name == "comp":
        res = comp_decode(design, outcomes)
    elif name == "dd":
        res = dd_decode(design, outcomes)
    elif name == "scomp":
        res = scomp_decode(design, outcomes, args.tie, rng)
    else:
        res = lp_decode(design, outcomes, name[3:], rng)
    lines = [f"estimate: {res.estimate}".rstrip(), f"satisfying: {str(res.satisfying).lower()}"]
    if name in ("dd", "scomp"):
        lines.append(f"dd_core: {res.dd_core}".rstrip())
    if res.error:
        lines.append(f"error: {res.error}")
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_audit(args, parser) -> int:
    p = p_from_k(args.k) if args.p == "auto" else float(args.p)
    try:
        rep = property_p_audit(args.n, args.k, p, args.t, args.trials, args.seed, oracle=args.oracle)
    except ParameterError as exc:
        parser.error(str(exc))
    doc = rep.as_dict()
    if args.format == "json":
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
    else:
        flat = {k: v for k, v in doc.items() if k not in ("violations", "counterexamples")}
        flat.update({f"violations_{k}": v for k, v in doc["violations"].items()})
        _emit(_csv_text(list(flat), [[_fmt(v) for v in flat.values()]]), args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grouptest", description="Group testing decoders, simulations and rate bounds.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--format", choices=("csv", "json"), default="csv")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        p.add_argument("--seed", type=int, default=0)

    b = sub.add_parser("bounds", help="rate curves over a theta grid")
    b.add_argument("--theta", type=_float_range, default=bounds.theta_grid())
    b.add_argument("--curves", type=_name_list(tuple(bounds.CURVES)), default=tuple(bounds.CURVES))
    common(b)

    s = sub.add_parser("simulate", help="Monte Carlo success-probability sweep")
    s.add_argument("--n", type=_positive_int, required=True)
    s.add_argument("--k", type=int, required=True)
    s.add_argument("--p", default="auto", help="auto (1/(k+1)), nu:<value> (nu/k), or a probability")
    s.add_argument("--t", type=_int_range, default=_int_range("50:300:10"))
    s.add_argument("--trials", type=_positive_int, default=1000)
    s.add_argument("--decoders", type=_name_list(DECODERS), default=("comp", "dd", "scomp", "lp-malioutov"))
    s.add_argument("--workers", type=_positive_int, default=1)
    common(s)

    d = sub.add_parser("decode", help="decode one instance from files")
    d.add_argument("--design", required=True)
    d.add_argument("--outcomes", required=True)
    d.add_argument("--decoder", choices=("comp", "dd", "scomp", *(f"lp-{r}" for r in ROUNDING_RULES)), default="dd")
    d.add_argument("--tie", choices=("lowest", "random"), default="lowest")
    d.add_argument("--seed", type=int, default=0)

    a = sub.add_parser("audit", help="Property-P audit on random instances")
    a.add_argument("--n", type=_positive_int, required=True)
    a.add_argument("--k", type=int, required=True)
    a.add_argument("--p", default="auto")
    a.add_argument("--t", type=_positive_int, required=True)
    a.add_argument("--trials", type=_positive_int, default=1000)
    a.add_argument("--oracle", action=argparse.BooleanOptionalAction, default=None)
    common(a)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "bounds":
            return cmd_bounds(args)
        if args.command == "simulate":
            return cmd_simulate(args, parser)
        if args.command == "decode":
            return cmd_decode(args)
        return cmd_audit(args, parser)
    except InputError as exc:
        print(f"grouptest: input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
