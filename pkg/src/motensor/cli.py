"""Command-line interface.

Exit codes: 0 ok, 1 usage, 2 outer budget exhausted, 3 estimator failure,
4 verification failure, 5 dense size budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import ConvergenceError, IterationLimitError, OuterBudgetError, SizeBudgetError
from .family import definition_dense, structured
from .heigen import DEFAULT_SEED, DEFAULT_STARTS, LambdaMinCurve, lambda_min_curve
from .oracle import psd_scan
from .supmo import DEFAULT_EPS, DEFAULT_N_MAX, alpha_star, default_schedule
from .tensor import FamilyKind, FamilySpec, eval_grad, eval_poly
from .verify import run_checks

EXIT_OK, EXIT_USAGE, EXIT_BUDGET, EXIT_ESTIMATOR, EXIT_VERIFY, EXIT_SIZE = range(6)

log = logging.getLogger("motensor")

_FAMILIES = {"moler": FamilyKind.MOLER, "M": FamilyKind.M, "N": FamilyKind.N, "MO": FamilyKind.MO,
             "mo": FamilyKind.MO, "essential": FamilyKind.ESSENTIAL}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


@dataclass
class RunConfig:
    command: str
    m: int | None = None
    n_from: int | None = None
    n_to: int | None = None
    alpha: float | str | None = None
    epsilon: float = DEFAULT_EPS
    seed: int = DEFAULT_SEED
    starts: int = DEFAULT_STARTS
    n_max: int = DEFAULT_N_MAX
    format: str = "json"
    out: str | None = None

    def validate(self, needs_even: bool):
        if self.m is not None:
            if self.m < 2:
                raise UsageError("--order must be >= 2")
            if needs_even and self.m % 2:
                raise UsageError(f"--order must be even for {self.command}, got {self.m}")
        if self.epsilon <= 0:
            raise UsageError("--eps must be positive")
        if self.starts < 1:
            raise UsageError("--starts must be >= 1")
        if self.n_from is not None and (self.n_from < 1 or self.n_to < self.n_from):
            raise UsageError("--dims must satisfy 1 <= from <= to")


def _parse_dims(text):
    try:
        if ":" in text:
            a, b = text.split(":", 1)
            return int(a), int(b)
        return int(text), int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid --dims {text!r}; use N or FROM:TO") from None


def _parse_alpha(text):
    if text == "sup":
        return "sup"
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--alpha takes a number or 'sup', got {text!r}") from None


def _resolve_alpha(cfg: RunConfig):
    if cfg.alpha == "sup":
        trace = alpha_star(cfg.m, cfg.epsilon, n_max=cfg.n_max)
        log.info("alpha*(%d) = %.12g", cfg.m, trace.alpha_star)
        return trace.alpha_star
    return cfg.alpha


def _family_spec(args, cfg: RunConfig) -> FamilySpec:
    kind = _FAMILIES[args.family]
    m = 2 if kind is FamilyKind.MOLER else cfg.m
    if m is None:
        raise UsageError(f"--order is required for family {args.family}")
    if cfg.n_from != cfg.n_to:
        raise UsageError("--dims must be a single value here")
    alpha = None
    if kind is FamilyKind.MO:
        if cfg.alpha is None:
            raise UsageError("--alpha is required for family MO")
        alpha = _resolve_alpha(cfg)
    elif cfg.alpha is not None:
        raise UsageError(f"--alpha only applies to family MO")
    try:
        return FamilySpec(kind, cfg.n_from, m, alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _emit(cfg: RunConfig, text: str):
    if cfg.out:
        with open(cfg.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def cmd_alpha_star(args, cfg: RunConfig) -> int:
    cfg.validate(needs_even=True)
    schedule = None
    if args.schedule:
        schedule = [int(s) for s in args.schedule.split(",")]
    else:
        schedule = default_schedule(cfg.n_max)
    code = EXIT_OK
    try:
        trace = alpha_star(cfg.m, cfg.epsilon, schedule, mode=args.mode)
    except OuterBudgetError as exc:
        log.error("%s", exc)
        trace, code = exc.trace, EXIT_BUDGET
    except IterationLimitError as exc:
        log.error("%s", exc)
        return EXIT_BUDGET
    _emit(cfg, trace.to_csv() if cfg.format == "csv" else _dumps(trace.to_json()))
    return code


def cmd_lambda_min(args, cfg: RunConfig) -> int:
    cfg.validate(needs_even=True)
    if cfg.alpha is None:
        raise UsageError("--alpha is required")
    alpha = _resolve_alpha(cfg)
    curve = LambdaMinCurve(cfg.m, float(alpha), cfg.seed)
    code = EXIT_OK
    try:
        lambda_min_curve(cfg.m, alpha, cfg.n_from, cfg.n_to, cfg.starts, cfg.seed, curve=curve)
    except (ConvergenceError, IterationLimitError) as exc:
        log.error("%s", exc)
        curve.error = str(exc)
        code = EXIT_ESTIMATOR
    for row in curve.rows:
        if row.decreasing is False:
            log.warning("lambda_min not decreasing at n=%d", row.n)
    _emit(cfg, curve.to_csv() if cfg.format == "csv" else _dumps(curve.to_json()))
    return code


def cmd_verify(args, cfg: RunConfig) -> int:
    n = cfg.n_from if cfg.n_from is not None else 4
    m = cfg.m if cfg.m is not None else 4
    checks = run_checks(n, m, inject_fault=args.inject_fault)
    passed = all(c.passed for c in checks)
    for c in checks:
        if not c.passed:
            log.error("check failed: %s (max_diff=%g)", c.name, c.max_diff)
    if cfg.format == "csv":
        text = _csv([["name", "passed", "max_diff"]] + [[c.name, int(c.passed), repr(c.max_diff)] for c in checks])
    else:
        text = _dumps({"passed": passed, "checks": [c.to_json() for c in checks]})
    _emit(cfg, text)
    return EXIT_OK if passed else EXIT_VERIFY


def cmd_materialize(args, cfg: RunConfig) -> int:
    spec = _family_spec(args, cfg)
    try:
        dense = definition_dense(spec)
    except SizeBudgetError as exc:
        log.error("%s", exc)
        return EXIT_SIZE
    if cfg.format == "csv":
        header = [f"i{j + 1}" for j in range(spec.order)] + ["value"]
        data = dense.to_json()["entries"]
        text = _csv([header] + [e["index"] + [e["value"]] for e in data])
    else:
        text = _dumps({"family": spec.to_json(), **dense.to_json()})
    _emit(cfg, text)
    return EXIT_OK


def cmd_eval(args, cfg: RunConfig) -> int:
    spec = _family_spec(args, cfg)
    try:
        x = np.array([float(v) for v in args.x.split(",")])
    except ValueError:
        raise UsageError(f"invalid --x {args.x!r}") from None
    if len(x) != spec.dim:
        raise UsageError(f"--x must have {spec.dim} components")
    T = structured(spec)
    value = float(eval_poly(T, x))
    grad = [float(v) for v in eval_grad(T, x)]
    if cfg.format == "csv":
        text = _csv([["value"] + [f"grad{j + 1}" for j in range(spec.dim)], [repr(value)] + [repr(g) for g in grad]])
    else:
        text = _dumps({"family": spec.to_json(), "x": x.tolist(), "value": value, "grad": grad})
    _emit(cfg, text)
    return EXIT_OK


def cmd_psd_scan(args, cfg: RunConfig) -> int:
    cfg.validate(needs_even=True)
    spec = _family_spec(args, cfg)
    res = psd_scan(structured(spec), samples=args.samples, seed=cfg.seed, grid_dims=args.grid)
    if cfg.format == "csv":
        text = _csv([["min_value", "disproves_psd"], [repr(res.value), int(res.disproves_psd)]])
    else:
        text = _dumps({"family": spec.to_json(), "seed": cfg.seed, **res.to_json()})
    _emit(cfg, text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--out", help="write output to this file instead of stdout")
    common.add_argument("--seed", type=int, default=DEFAULT_SEED)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="motensor", description="MO tensor family: construction, Sup-MO value, H-eigenvalues.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("alpha-star", parents=[common], help="compute the Sup-MO value alpha*(m)")
    p.add_argument("--order", type=int, required=True, help="tensor order m (even)")
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.add_argument("--n-max", type=int, default=DEFAULT_N_MAX, help="largest dimension in the doubling schedule")
    p.add_argument("--schedule", help="comma-separated dimension schedule (overrides --n-max)")
    p.add_argument("--mode", choices=["bisect", "paper"], default="bisect",
                   help="fixed-point update: bracketed bisection or the literal halving rule")
    p.set_defaults(func=cmd_alpha_star)

    p = sub.add_parser("lambda-min", parents=[common], help="smallest H-eigenvalue curve of M - alpha N")
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--alpha", type=_parse_alpha, required=True, help="number, or 'sup' for alpha*(m)")
    p.add_argument("--dims", type=_parse_dims, default=(2, 8), help="N or FROM:TO")
    p.add_argument("--starts", type=int, default=DEFAULT_STARTS)
    p.add_argument("--eps", type=float, default=DEFAULT_EPS)
    p.set_defaults(func=cmd_lambda_min)

    p = sub.add_parser("verify", parents=[common], help="run the identity checks")
    p.add_argument("--order", type=int, default=4)
    p.add_argument("--dims", type=_parse_dims, default=(4, 4))
    p.add_argument("--inject-fault", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    for name, func, help_ in (
        ("materialize", cmd_materialize, "dense export of a family member"),
        ("eval", cmd_eval, "evaluate A x^m and A x^(m-1)"),
        ("psd-scan", cmd_psd_scan, "sampled minimum of A x^m on the m-norm sphere"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--family", choices=sorted(_FAMILIES), required=True)
        p.add_argument("--dims", type=_parse_dims, required=True)
        p.add_argument("--order", type=int)
        p.add_argument("--alpha", type=_parse_alpha)
        p.add_argument("--eps", type=float, default=DEFAULT_EPS)
        if name == "eval":
            p.add_argument("--x", required=True, help="comma-separated vector")
        if name == "psd-scan":
            p.add_argument("--samples", type=int, default=20000)
            p.add_argument("--grid", type=int, default=181)
        p.set_defaults(func=func)
    return parser


def _config(args) -> RunConfig:
    dims = getattr(args, "dims", None)
    return RunConfig(
        command=args.command,
        m=getattr(args, "order", None),
        n_from=dims[0] if dims else None,
        n_to=dims[1] if dims else None,
        alpha=getattr(args, "alpha", None),
        epsilon=getattr(args, "eps", DEFAULT_EPS),
        seed=args.seed,
        starts=getattr(args, "starts", DEFAULT_STARTS),
        n_max=getattr(args, "n_max", DEFAULT_N_MAX),
        format=args.format,
        out=args.out,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    cfg = _config(args)
    try:
        cfg.validate(needs_even=False)
        return args.func(args, cfg)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"motensor {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SizeBudgetError as exc:
        print(f"motensor {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except OuterBudgetError as exc:
        print(f"motensor {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
