"""``gridpoly`` command line.

Exit codes: 0 success, 1 usage or runtime error, 2 invalid polygon (for
``validate``) or failed cases (for ``repro``).
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import adversary as adv
from .explore import ExplorationError, make_strategy, run_strategy
from .grid import GridPolygon, PolygonSyntaxError, ValidationError, parse_polygon, render_ascii
from .offline import InstanceTooLarge, competitive_ratio, optimal_tour
from .render import render_svg
from .repro import SCHEMA as REPRO_SCHEMA
from .repro import run_suite

EXIT_OK, EXIT_ERROR, EXIT_INVALID = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(obj: dict) -> None:
    print(json.dumps(obj, sort_keys=True, indent=2))


def _frac(r: Fraction) -> dict:
    return {"exact": f"{r.numerator}/{r.denominator}", "approx": f"{float(r):.6f}"}


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from exc


def _load(path: str) -> GridPolygon:
    try:
        return parse_polygon(_read(path))
    except (PolygonSyntaxError, ValidationError) as exc:
        raise UsageError(f"{path}: {exc}") from exc


def _fraction_arg(text: str) -> Fraction:
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from exc
    return value


# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    text = _read(args.path)
    try:
        polygon = parse_polygon(text)
    except PolygonSyntaxError as exc:
        _emit({"schema": "gridpoly.validate/1", "valid": False, "violation": "syntax",
               "witness": None, "message": str(exc)})
        return EXIT_INVALID
    except ValidationError as exc:
        _emit({"schema": "gridpoly.validate/1", **exc.report.to_dict()})
        return EXIT_INVALID
    _emit({
        "schema": "gridpoly.validate/1",
        "valid": True,
        "cells": len(polygon),
        "start": list(polygon.start),
        "digest": polygon.digest(),
    })
    return EXIT_OK


def cmd_explore(args) -> int:
    polygon = _load(args.path)
    strategy = make_strategy(args.strategy)
    transcript = run_strategy(polygon, strategy, polygon_id=polygon.digest())
    opt = None
    if not args.no_optimal:
        try:
            opt = optimal_tour(polygon).length
        except InstanceTooLarge:
            opt = None
    report = transcript.report(opt)
    if opt is not None:
        report["ratio"] = _frac(competitive_ratio(transcript.steps, opt))
    if hasattr(strategy, "firings"):
        report["tangent_firings"] = [[step, list(c)] for step, c in strategy.firings]
    rendered = None
    if args.render == "ascii":
        rendered = render_ascii(polygon, transcript.path)
    elif args.render == "svg":
        rendered = render_svg(polygon, transcript.path)
    if rendered is not None:
        if args.out:
            Path(args.out).write_text(rendered)
            report["render_file"] = args.out
        else:
            report["render"] = rendered
    if args.transcript:
        Path(args.transcript).write_text(transcript.to_text())
    _emit(report)
    return EXIT_OK


def cmd_optimal(args) -> int:
    polygon = _load(args.path)
    tour = optimal_tour(polygon)
    _emit({"schema": "gridpoly.optimal/1", "cells": len(polygon), **tour.to_dict()})
    return EXIT_OK


def _adversary_strategy(name: str, n: int):
    if name == "scripted-i":
        return adv.triggering_strategy(n, "i")
    return make_strategy(name)


def cmd_adversary(args) -> int:
    if args.epsilon is not None:
        if not 0 < args.epsilon < adv.LIMIT_RATIO - 1:
            raise UsageError("--epsilon must lie strictly between 0 and 2/11")
        needed = adv.blocks_needed(args.epsilon, args.additive)
        n = args.blocks if args.blocks is not None else needed
    else:
        needed = None
        n = args.blocks if args.blocks is not None else 1
    if n < 1:
        raise UsageError("--blocks must be at least 1")
    result = adv.adversary_run(_adversary_strategy(args.strategy, n), n)
    report = result.report()
    report["ratio"] = _frac(result.ratio)
    report["ratio_limit"] = _frac(adv.ratio_limit(n))
    if needed is not None:
        report["epsilon"] = _frac(args.epsilon)["exact"]
        report["additive"] = _frac(args.additive)["exact"]
        report["blocks_needed"] = needed
    polygon_text = render_ascii(result.polygon)
    if args.polygon_out:
        Path(args.polygon_out).write_text(polygon_text)
        report["polygon_file"] = args.polygon_out
    else:
        report["polygon"] = polygon_text
    _emit(report)
    return EXIT_OK


def cmd_repro(args) -> int:
    reports = run_suite(args.suite)
    for r in reports:
        print(r.line(), file=sys.stderr)
    _emit({
        "schema": REPRO_SCHEMA,
        "suite": args.suite,
        "cases": [r.to_dict(timings=args.timings) for r in reports],
        "passed": sum(r.passed for r in reports),
        "failed": sum(not r.passed for r in reports),
    })
    return EXIT_OK if all(r.passed for r in reports) else EXIT_INVALID


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gridpoly", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check that a file holds a simple grid polygon")
    v.add_argument("path")
    v.set_defaults(func=cmd_validate)

    e = sub.add_parser("explore", help="run an online strategy on a polygon")
    e.add_argument("path")
    e.add_argument("--strategy", choices=("lhdfs", "tangent"), default="lhdfs")
    e.add_argument("--render", choices=("ascii", "svg", "none"), default="none")
    e.add_argument("--out", help="write the rendering here instead of into the report")
    e.add_argument("--transcript", help="write the transcript text here")
    e.add_argument("--no-optimal", action="store_true", help="skip the optimal tour")
    e.set_defaults(func=cmd_explore)

    o = sub.add_parser("optimal", help="shortest closed tour visiting every cell")
    o.add_argument("path")
    o.set_defaults(func=cmd_optimal)

    a = sub.add_parser("adversary", help="run a strategy against the block adversary")
    a.add_argument("--strategy", choices=("lhdfs", "tangent", "scripted-i"), default="lhdfs")
    a.add_argument("--blocks", type=int)
    a.add_argument("--epsilon", type=_fraction_arg)
    a.add_argument("--additive", type=_fraction_arg, default=Fraction(0))
    a.add_argument("--polygon-out", help="write the final polygon here")
    a.set_defaults(func=cmd_adversary)

    r = sub.add_parser("repro", help="recompute the reference numbers")
    r.add_argument("--suite", choices=("table1", "flaw", "limit", "merge", "all"), default="all")
    r.add_argument("--timings", action="store_true", help="include per-case runtimes")
    r.set_defaults(func=cmd_repro)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_ERROR
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"gridpoly: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (ExplorationError, adv.StrategyIncomplete, InstanceTooLarge) as exc:
        print(f"gridpoly: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
