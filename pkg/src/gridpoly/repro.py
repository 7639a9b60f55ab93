"""Regression suites that recompute every headline number from scratch.

Each case yields a :class:`ReproReport`.  Expected values are exact
integers or fractions and every case carries a short ``source`` note
saying where the expected value comes from.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from typing import Callable, Iterator

from . import adversary as adv
from .explore import TangentRuleDFS, run_strategy
from .grid import GridPolygon, parse_polygon
from .offline import competitive_ratio, optimal_tour

SCHEMA = "gridpoly.repro/1"
SUITES = ("table1", "flaw", "limit", "merge")


def fixture_text(name: str) -> str:
    return resources.files("gridpoly").joinpath("data", "fixtures", name).read_text()


def load_fixture(name: str) -> GridPolygon:
    return parse_polygon(fixture_text(name))


def _fmt(value) -> str | int | bool:
    if isinstance(value, Fraction):
        return f"{value.numerator}/{value.denominator}"
    return value


@dataclass(frozen=True)
class ReproReport:
    case_id: str
    expected: object
    observed: object
    passed: bool
    runtime_ms: float
    source: str
    detail: str = ""

    def to_dict(self, timings: bool = False) -> dict:
        out = {
            "case": self.case_id,
            "expected": _fmt(self.expected),
            "observed": _fmt(self.observed),
            "pass": self.passed,
            "source": self.source,
        }
        if isinstance(self.observed, Fraction):
            out["observed_approx"] = round(float(self.observed), 6)
        if self.detail:
            out["detail"] = self.detail
        if timings:
            out["runtime_ms"] = round(self.runtime_ms, 1)
        return out

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        return f"{verdict} {self.case_id}: expected {_fmt(self.expected)}, observed {_fmt(self.observed)}"


def _case(case_id: str, source: str, fn: Callable[[], tuple]) -> ReproReport:
    t0 = time.perf_counter()
    expected, observed, detail = fn()
    ms = (time.perf_counter() - t0) * 1000
    return ReproReport(case_id, expected, observed, expected == observed, ms, source, detail)


# ---------------------------------------------------------------------------


def suite_table1() -> Iterator[ReproReport]:
    library = adv.default_library()
    for kind in adv.BLOCK_KINDS:
        block = library[kind]

        def run(block=block):
            report = adv.verify_block_forced_detour(block, library, strict=False)
            opt = optimal_tour(block.geometry).length
            detail = (
                f"optimum {opt} (recorded {block.opt_steps}); cheapest triggering walk "
                f"{report.min_total} via {[tuple(c) for c in report.witness]}"
            )
            if opt != block.opt_steps:
                return block.forced_alg_steps, f"optimum {opt}", detail
            return block.forced_alg_steps, report.min_total, detail

        yield _case(f"table1.{kind}", "block table: forced steps of any strategy", run)


def suite_flaw() -> Iterator[ReproReport]:
    cases = (
        ("flaw.meander", "meander_double_tangent.txt", Fraction(7, 6), 28, 24),
        ("flaw.compact", "compact_tangent_flaw.txt", Fraction(13, 11), 26, 22),
    )
    for case_id, name, ratio, steps, opt in cases:

        def run(name=name, ratio=ratio, steps=steps, opt=opt):
            polygon = load_fixture(name)
            strategy = TangentRuleDFS()
            t = run_strategy(polygon, strategy)
            tour = optimal_tour(polygon)
            observed = competitive_ratio(t.steps, tour.length)
            detail = (
                f"tangent-rule DFS {t.steps} steps (expected {steps}), optimum {tour.length} "
                f"(expected {opt}), rule fired at steps {[s for s, _ in strategy.firings]}"
            )
            if (t.steps, tour.length) != (steps, opt):
                observed = f"{t.steps}/{tour.length}"
            return ratio, observed, detail

        yield _case(case_id, "tangent-rule counterexamples", run)


def suite_limit(scripted_n: int = 3) -> Iterator[ReproReport]:
    yield _case(
        "limit.n1", "closed form at n = 1", lambda: (Fraction(7, 6), adv.ratio_limit(1), "")
    )

    def monotone():
        values = [adv.ratio_limit(n) for n in range(1, 1001)]
        ok = all(a < b for a, b in zip(values, values[1:])) and values[-1] < adv.LIMIT_RATIO
        gap = adv.LIMIT_RATIO - values[-1]
        return True, ok, f"13/11 - ratio_limit(1000) = {_fmt(gap)}"

    yield _case("limit.monotone_below_13_11", "closed form", monotone)

    def epsilon():
        eps = Fraction(1, 1000)
        n = adv.blocks_needed(eps, 0)
        return True, adv.ratio_limit(n) > adv.LIMIT_RATIO - eps, f"blocks_needed(1/1000) = {n}"

    yield _case("limit.blocks_needed", "additive-constant argument", epsilon)

    def scripted():
        result = adv.adversary_run(adv.triggering_strategy(scripted_n), scripted_n)
        detail = (
            f"blocks {result.blocks}, {result.transcript.steps} steps against optimum "
            f"{result.tour.length}"
        )
        return adv.ratio_limit(scripted_n), result.ratio, detail

    yield _case(f"limit.scripted_i_n{scripted_n}", "chain of (i) blocks: 28 + 26(n-1) over 24 + 22(n-1)", scripted)


MERGE_CHAINS = (
    ("i", "i"),
    ("b", "h"),
    ("i", "i", "i"),
    ("d", "h", "i'"),
)


def _blocks(ids) -> list:
    library = adv.default_library()
    return [library.variant(k.rstrip("'"), k.endswith("'")) for k in ids]


def suite_merge() -> Iterator[ReproReport]:
    for ids in MERGE_CHAINS:

        def run(ids=ids):
            blocks = _blocks(ids)
            chain = adv.merge_chain(blocks)
            n = len(blocks)
            direct = optimal_tour(chain.merged_polygon)
            cells_saved = sum(len(b.cells) for b in blocks) - len(chain.merged_polygon)
            steps_saved = sum(b.opt_steps for b in blocks) - direct.length
            detail = (
                f"{len(chain.merged_polygon)} cells, optimum {direct.length} "
                f"({direct.certificate}); spliced cycle {chain.opt_steps}"
            )
            observed = cells_saved if cells_saved == steps_saved == sum(
                b.opt_steps for b in blocks
            ) - chain.opt_steps else f"cells {cells_saved}, steps {steps_saved}"
            return 2 * (n - 1), observed, detail

        yield _case(f"merge.{'-'.join(ids)}", "merge accounting: 2(n-1) saved", run)


def run_suite(name: str) -> list[ReproReport]:
    if name == "all":
        return [r for s in SUITES for r in run_suite(s)]
    table = {
        "table1": suite_table1,
        "flaw": suite_flaw,
        "limit": suite_limit,
        "merge": suite_merge,
    }
    if name not in table:
        raise ValueError(f"unknown suite {name!r}")
    return list(table[name]())
