"""Command-line front end.

Exit codes: 0 success / prediction confirmed, 1 assertion violated,
2 invalid configuration or arguments.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfg
from .config import ConfigError, RunConfig, load_config
from .contour import MAX_ENUMERATION_ORDER, enumerate_ranks
from .correlations import (
    ZERO_TOL,
    CorrelationEngine,
    CtocSpec,
    SweepTemplate,
    WightmanSpec,
    route_deviation,
    sweep,
)
from .reproduce import (
    GRID_START,
    GRID_STEP,
    GRID_STOP,
    build_model,
    build_observable,
    build_state,
    fig4a,
    fig4b,
    table1,
)
from .symmetry import (
    SymmetryError,
    compose_S,
    tfim_c_transform,
    tfim_t_transform,
    verify_theorem1,
    verify_theorem2,
    verify_theorem3,
)

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _write(out: Path | None, name: str, text: str) -> None:
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    (out / name).write_text(text, encoding="utf-8")


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _grid_from_args(args, default=(GRID_START, GRID_STOP, GRID_STEP)) -> np.ndarray | None:
    start = args.grid_start if args.grid_start is not None else default[0]
    stop = args.grid_stop if args.grid_stop is not None else default[1]
    step = args.grid_step if args.grid_step is not None else default[2]
    return cfg.make_grid(start, stop, step)


def cmd_table1(args) -> int:
    result = table1(args.n, args.coupling, _grid_from_args(args), args.tolerance)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", "observable", "alpha", "correlation", "predicted", "max_abs", "confirmed"])
    for r in result.rows:
        writer.writerow([r.row, r.observable, r.alpha, r.correlation, r.predicted,
                         f"{r.max_abs:.17g}", str(r.confirmed).lower()])
    _write(args.out, "table1.csv", buf.getvalue())
    report = {
        "n_sites": args.n, "coupling": args.coupling, "tolerance": args.tolerance,
        "confirmed": result.confirmed,
        "rows": [vars(r) for r in result.rows],
    }
    _write(args.out, "table1.json", _dumps(report))
    for row, res in result.sweeps.items():
        tag = "antisymmetric" if "-B" in row else "symmetric"
        _write(args.out, f"table1_{tag}.csv", res.to_csv())

    print(f"{'row':<9} {'corr':<7} {'pred':>4} {'max|C|':>12}  ok")
    for r in result.rows:
        print(f"{r.row:<9} {r.correlation:<7} {r.predicted:>4} {r.max_abs:12.3e}  "
              f"{'yes' if r.confirmed else 'NO'}")
    return EXIT_OK if result.confirmed else EXIT_VIOLATION


def cmd_fig4(args) -> int:
    grid = _grid_from_args(args)
    if args.variant == "a":
        result = fig4a(args.n, args.coupling, grid, args.tolerance)
    else:
        result = fig4b(args.n, args.coupling, args.beta, grid, args.tolerance, args.t_breaking)
    _write(args.out, f"fig4{args.variant}.csv", result.sweep.to_csv())
    _write(args.out, f"fig4{args.variant}.json",
           _dumps({"variant": args.variant, "passed": result.passed, "checks": result.checks}))
    for key, value in result.checks.items():
        print(f"{key}: {value}")
    print("PASS" if result.passed else "FAIL")
    return EXIT_OK if result.passed else EXIT_VIOLATION


def cmd_ranks(args) -> int:
    if not 1 <= args.order <= MAX_ENUMERATION_ORDER:
        print(f"error: order must be in 1..{MAX_ENUMERATION_ORDER}", file=sys.stderr)
        return EXIT_CONFIG
    hist = enumerate_ranks(args.order)
    lines = ["rank,count"] + [f"{k},{v}" for k, v in hist.counts.items()]
    _write(args.out, f"ranks_{args.order}.csv", "\n".join(lines) + "\n")
    print(f"order {args.order}: {hist.total} orderings")
    for k, v in hist.counts.items():
        print(f"  rank {k}: {v}")
    return EXIT_OK


def _transforms(config: RunConfig, h, rho) -> dict:
    if config.model.kind != "tfim":
        raise ConfigError("theorems", "symmetry transforms are only defined for the tfim model")
    n = config.model.n_sites
    out = {"T": tfim_t_transform(n)}
    if n % 2 == 0:
        out["C"] = tfim_c_transform(n)
    return out


def run_theorems(config: RunConfig, h, rho, b) -> list[dict]:
    if not config.theorems:
        return []
    transforms = _transforms(config, h, rho)
    reports = []
    for req in config.theorems:
        entry = {"theorem": req.theorem, "trace": req.sigma.trace_label(), "times": list(req.times)}
        try:
            if req.theorem == "C":
                if "C" not in transforms:
                    raise SymmetryError("the C transform needs an even number of sites")
                rep = verify_theorem1(req.sigma, req.times, b, transforms["C"], h, rho, config.tolerance)
            elif req.theorem == "T":
                rep = verify_theorem2(req.sigma, req.times, b, transforms["T"], h, rho, config.tolerance)
            else:
                if "C" not in transforms:
                    raise SymmetryError("the S transform needs an even number of sites")
                s = compose_S(transforms["C"], transforms["T"], h, rho)
                rep = verify_theorem3(req.sigma, req.times, b, s, h, rho, config.tolerance)
            entry.update(rep.to_dict())
        except SymmetryError as exc:
            entry.update({"passed": False, "error": str(exc)})
        reports.append(entry)
    return reports


def _request_spec(req, times, b):
    if req.kind == "C":
        return CtocSpec(req.code, times, b)
    return WightmanSpec(req.code, times, b)


def run_eval(config: RunConfig) -> tuple[dict, str | None]:
    h = build_model(config.model)
    rho = build_state(config.state, h)
    b = build_observable(config.observable, config.model.n_sites)
    report: dict = {"correlations": {}, "theorems": []}
    csv_text = None
    if config.grid is not None:
        grid = config.grid.values()
        axis = config.axis
        swept = [SweepTemplate(_request_spec(r, [t if t is not None else grid[0] for t in r.times], b),
                               name=r.label)
                 for r in config.correlations if None in r.times]
        result = sweep(swept, axis, grid, h, rho)
        csv_text = result.to_csv()
        report["sweep"] = result.to_dict()
    engine = CorrelationEngine(h, rho)
    for req in config.correlations:
        if None in req.times:
            continue
        value = engine.evaluate(_request_spec(req, req.times, b))
        report["correlations"][req.label] = (
            [value.real, value.imag] if isinstance(value, complex) else value)
    report["theorems"] = run_theorems(config, h, rho, b)
    passed = all(t["passed"] for t in report["theorems"])
    if config.route_checks is not None:
        rc = config.route_checks
        dev = route_deviation(rc.instances, rc.seed)
        report["route_check"] = {"instances": rc.instances, "seed": rc.seed,
                                 "max_deviation": dev, "passed": dev <= rc.tolerance}
        passed &= dev <= rc.tolerance
    report["passed"] = passed
    return report, csv_text


def cmd_eval(args) -> int:
    try:
        config = load_config(args.config)
        if any(v is not None for v in (args.grid_start, args.grid_stop, args.grid_step)):
            base = config.grid or cfg.GridSpec(GRID_START, GRID_STOP, GRID_STEP)
            grid = cfg.GridSpec(
                args.grid_start if args.grid_start is not None else base.start,
                args.grid_stop if args.grid_stop is not None else base.stop,
                args.grid_step if args.grid_step is not None else base.step)
            config = replace(config, grid=grid)
            cfg.check_grid_order(config, grid.values())
        if args.tolerance is not None:
            config = replace(config, tolerance=args.tolerance)
        if args.seed is not None and config.route_checks:
            config = replace(config, route_checks=replace(config.route_checks, seed=args.seed))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        report, csv_text = run_eval(config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = args.out
    csv_name = config.output.get("csv", "eval.csv")
    json_name = config.output.get("json", "eval.json")
    if out is None:
        out = Path(args.config).resolve().parent
    if csv_text is not None:
        _write(out, csv_name, csv_text)
    _write(out, json_name, _dumps(report))
    for label, value in report["correlations"].items():
        print(f"{label} = {value}")
    if "route_check" in report:
        rc = report["route_check"]
        print(f"route check over {rc['instances']} instances: max deviation {rc['max_deviation']:.3e}")
    for t in report["theorems"]:
        print(f"theorem {t['theorem']} on {t['trace']}: {'pass' if t['passed'] else 'FAIL'}"
              + (f" (deviation {t['deviation']:.3e})" if "deviation" in t else f" ({t.get('error')})"))
    return EXIT_OK if report["passed"] else EXIT_VIOLATION


def _add_common(p: argparse.ArgumentParser, tolerance: float | None = ZERO_TOL) -> None:
    p.add_argument("--out", type=Path, default=None,
                   help="directory for CSV/JSON output (default: none, or the config's directory for eval)")
    p.add_argument("--tolerance", type=float, default=tolerance,
                   help=f"zero/equality threshold (default: {tolerance})")
    p.add_argument("--grid-start", type=float, default=None, help=f"first t3 value (default: {GRID_START})")
    p.add_argument("--grid-stop", type=float, default=None, help=f"last t3 value (default: {GRID_STOP})")
    p.add_argument("--grid-step", type=float, default=None, help=f"t3 spacing (default: {GRID_STEP})")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=int, default=8, help="number of spins (default: 8)")
    p.add_argument("--lambda", dest="coupling", type=float, default=1.5,
                   help="Ising coupling (default: 1.5)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qnsym",
        description="Higher-order correlations and their C/T/S symmetry constraints "
                    "in small spin chains.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("table1", help="C-symmetry selection rules for order-2/3 CTOCs")
    _add_model(p)
    _add_common(p)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("fig4", help="order-3 correlations of the Ising chain against t3")
    p.add_argument("variant", choices=("a", "b"),
                   help="a: CTOC zero pattern; b: W^{213} = W^{21'3} under time reversal")
    _add_model(p)
    _add_common(p)
    p.add_argument("--beta", type=float, default=cfg.DEFAULT_BETA,
                   help="inverse temperature for variant b (default: 1.0)")
    p.add_argument("--t-breaking", type=float, default=0.0,
                   help="strength of an added field sum_j (X_j + Y_j) that breaks T (negative control)")
    p.set_defaults(func=cmd_fig4)

    p = sub.add_parser("ranks", help="histogram of contour ranks over all orderings")
    p.add_argument("order", type=int, help=f"correlation order, 1..{MAX_ENUMERATION_ORDER}")
    p.add_argument("--out", type=Path, default=None, help="directory for the CSV")
    p.set_defaults(func=cmd_ranks)

    p = sub.add_parser("eval", help="evaluate correlations and theorem checks from a JSON config")
    p.add_argument("config", nargs="?", help="path to the JSON run configuration")
    p.add_argument("--config", dest="config_flag", help="alternative to the positional path")
    _add_common(p, tolerance=None)
    p.add_argument("--seed", type=int, default=None,
                   help="seed for the randomized route cross-check (overrides the config)")
    p.set_defaults(func=cmd_eval)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "eval":
        args.config = args.config or args.config_flag
        if not args.config:
            parser.error("eval needs a config path")
    if getattr(args, "beta", 0) < 0:
        parser.error("--beta must be >= 0")
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
