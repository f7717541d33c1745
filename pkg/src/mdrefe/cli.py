"""Command-line entry points: experiment runner, budget planner, self-check.

Exit codes: 0 on success, 2 for invalid configuration or arguments, 3 when no
sample size fits the requested budget confidence.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .harness import PRESETS, ConfigError, load_config, run_experiment
from .planner import CostParams, PlanInfeasibleError, lambda0, ntilde_law, s_str, s_str_estimated

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_INFEASIBLE = 3


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part.strip()]


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part.strip()]


def _cmd_run(args) -> int:
    if (args.config is None) == (args.preset is None):
        print("run: give exactly one of --config or --preset", file=sys.stderr)
        return EXIT_BAD_CONFIG
    try:
        config = load_config(args.config) if args.config else PRESETS[args.preset]()
        if args.seed is not None:
            config = replace(config, base_seed=args.seed)
        report = run_experiment(config, args.out)
    except ConfigError as exc:
        print(f"run: invalid config: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    except PlanInfeasibleError as exc:
        print(f"run: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    print(f"wrote {len(report.rows)} rows to {args.out}")
    return EXIT_OK


def _print_single_plan(params: CostParams, p: float, estimated: bool) -> None:
    size = s_str_estimated(params, p) if estimated else s_str(params, p)
    source = "estimated" if estimated else "known"
    print(f"budget C={params.c}  price ratio w={params.w:g}  case ratio a={params.a:g}  alpha={params.alpha:g}")
    print(f"case probability p={p:g} ({source})")
    print(f"s_str  = {size}   (largest stratified size within budget w.p. >= {1 - params.alpha:g})")
    print(f"s_ind  = {params.c}   (i.i.d. design size)")
    print(f"lambda0 = {lambda0(params.a, params.w, p):.6f}   (asymptotic N/C boundary)")
    law = ntilde_law(size, params.a, p)
    print(
        f"raw draws at N={size}: mean {law.mean():.1f}, "
        f"median {law.quantile(0.5)}, 95% {law.quantile(0.95)}, 99% {law.quantile(0.99)}"
    )


def _cmd_plan(args) -> int:
    batch = args.budgets is not None
    try:
        if batch:
            return _plan_batch(args)
        if args.budget is None:
            print("plan: --budget is required (or --budgets for a table)", file=sys.stderr)
            return EXIT_BAD_CONFIG
        given = [v for v in (args.prevalence, args.prevalence_estimate) if v is not None]
        if len(given) != 1:
            print(
                "plan: give exactly one of --prevalence or --prevalence-estimate",
                file=sys.stderr,
            )
            return EXIT_BAD_CONFIG
        params = CostParams(c=args.budget, w=args.price_ratio, a=args.ratio, alpha=args.alpha)
        _print_single_plan(params, given[0], estimated=args.prevalence_estimate is not None)
    except PlanInfeasibleError as exc:
        print(f"plan: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"plan: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    return EXIT_OK


def _plan_batch(args) -> int:
    if args.out is None:
        print("plan: --out is required in batch mode", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if (args.gammas is None) == (args.prevalences is None):
        print("plan: give exactly one of --gammas or --prevalences", file=sys.stderr)
        return EXIT_BAD_CONFIG
    if args.gammas is not None:
        pairs = [(g, g / 2.0) for g in _float_list(args.gammas)]
    else:
        pairs = [(2.0 * p, p) for p in _float_list(args.prevalences)]
    ratios = _float_list(args.price_ratios) if args.price_ratios else [args.price_ratio]
    lines = ["gamma,p,C,w,s_str,lambda0"]
    for gamma, p in pairs:
        for w in ratios:
            for c_budget in _int_list(args.budgets):
                params = CostParams(c=c_budget, w=w, a=args.ratio, alpha=args.alpha)
                size = s_str(params, p)
                lam = lambda0(args.ratio, w, p)
                lines.append(f"{gamma:.6g},{p:.6g},{c_budget},{w:.6g},{size},{lam:.6g}")
    Path(args.out).write_text("\n".join(lines) + "\n")
    print(f"wrote {len(lines) - 1} rows to {args.out}")
    return EXIT_OK


def _cmd_selftest(args) -> int:
    from . import selftest

    return EXIT_OK if selftest.run(full=args.full) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mdrefe",
        description="Case-control feature selection: Monte Carlo runner and budget planner",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run the Monte Carlo comparison, write a TMR CSV")
    run_p.add_argument("--config", type=Path, help="JSON experiment config")
    run_p.add_argument("--preset", choices=sorted(PRESETS), help="named built-in config")
    run_p.add_argument("--seed", type=int, help="override the config's base seed")
    run_p.add_argument("--out", type=Path, required=True, help="output CSV path")
    run_p.set_defaults(func=_cmd_run)

    plan_p = sub.add_parser("plan", help="stratified sample-size planning under a budget")
    plan_p.add_argument("--budget", type=int, help="total budget C")
    plan_p.add_argument("--price-ratio", type=float, default=0.1, dest="price_ratio")
    plan_p.add_argument("--ratio", type=float, default=0.5, help="case ratio a")
    plan_p.add_argument("--alpha", type=float, default=0.05)
    plan_p.add_argument("--prevalence", type=float, help="known case probability")
    plan_p.add_argument(
        "--prevalence-estimate", type=float, dest="prevalence_estimate",
        help="estimated case probability (plug-in planning)",
    )
    plan_p.add_argument("--budgets", help="comma list of budgets: batch table mode")
    plan_p.add_argument("--gammas", help="comma list of response rates (p = gamma/2)")
    plan_p.add_argument("--prevalences", help="comma list of case probabilities")
    plan_p.add_argument("--price-ratios", dest="price_ratios", help="comma list of w levels")
    plan_p.add_argument("--out", type=Path, help="CSV output (batch mode)")
    plan_p.set_defaults(func=_cmd_plan)

    selftest_p = sub.add_parser("selftest", help="run the built-in verification battery")
    selftest_p.add_argument("--full", action="store_true", help="include the slow checks")
    selftest_p.set_defaults(func=_cmd_selftest)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
