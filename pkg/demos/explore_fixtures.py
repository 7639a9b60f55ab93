"""Walk both depth-first strategies over the shipped fixture polygons.

For each polygon the script prints the step counts, the optimal closed tour
(when the polygon is small enough for the exact search) and the walk drawn
over the map.  Run with ``python demos/explore_fixtures.py``.
"""

from gridpoly.explore import LeftHandDFS, TangentRuleDFS, run_strategy
from gridpoly.grid import render_ascii
from gridpoly.offline import InstanceTooLarge, optimal_tour
from gridpoly.repro import fixture_text, load_fixture

FIXTURES = (
    "square_2x2.txt",
    "corridor_1x5.txt",
    "meander_double_tangent.txt",
    "compact_tangent_flaw.txt",
    "narrow_passages.txt",
)


def main() -> None:
    for name in FIXTURES:
        polygon = load_fixture(name)
        comment = [line[1:].strip() for line in fixture_text(name).splitlines() if line.startswith(";")]
        print(f"== {name} ({len(polygon)} cells)")
        for line in comment:
            print(f"   {line}")
        try:
            opt = optimal_tour(polygon).length
        except InstanceTooLarge:
            opt = None
        for strategy in (LeftHandDFS(), TangentRuleDFS()):
            t = run_strategy(polygon, strategy)
            ratio = f"  ratio {t.steps}/{opt}" if opt else ""
            fired = getattr(strategy, "firings", [])
            extra = f"  tangent rule fired at steps {[s for s, _ in fired]}" if fired else ""
            print(f"   {strategy.name:8s} {t.steps:3d} steps{ratio}{extra}")
        print(f"   optimum  {opt if opt is not None else 'too large for the exact search'}")
        walk = run_strategy(polygon, TangentRuleDFS()).path
        print("".join("   " + row + "\n" for row in render_ascii(polygon, walk).splitlines()))


if __name__ == "__main__":
    main()
