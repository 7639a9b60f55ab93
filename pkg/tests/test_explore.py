import pytest
from hypothesis import given

from gridpoly.explore import (
    BLOCKED,
    EAST,
    FREE,
    HALT,
    NORTH,
    SOUTH,
    WEST,
    HaltedIncomplete,
    IllegalMove,
    KnowledgeMap,
    LeftHandDFS,
    Move,
    StepLimitExceeded,
    TangentRuleDFS,
    Transcript,
    detect_split_cell,
    left_hand_dfs_decision,
    make_strategy,
    replay,
    run_strategy,
    sense,
    tangent_rule_triggered,
)
from gridpoly.grid import Cell, components4, parse_polygon, polygon_from_cells
from gridpoly.repro import load_fixture
from shapes import corridor, polygons, rect


# --- sensing ---------------------------------------------------------------


def test_sense_corridor_end():
    reading = sense(corridor(2), Cell(0, 0))
    assert tuple(reading) == (BLOCKED, FREE, BLOCKED, BLOCKED)
    assert reading.status(EAST) is FREE


def test_sense_centre_of_square():
    assert set(sense(rect(3, 3), Cell(1, 1))) == {FREE}


def test_sense_next_to_start_of_layers_fixture():
    # the cell east of the start: wall to the north, open elsewhere
    reading = sense(load_fixture("narrow_passages.txt"), Cell(3, 8))
    assert tuple(reading) == (BLOCKED, FREE, FREE, FREE)


def test_sense_outside_polygon_is_illegal():
    with pytest.raises(IllegalMove):
        sense(corridor(2), Cell(5, 5))


def test_knowledge_never_flips():
    kmap = KnowledgeMap()
    kmap.record(Cell(0, 0), sense(corridor(2), Cell(0, 0)))
    with pytest.raises(Exception, match="flipped"):
        kmap.record(Cell(0, 0), sense(rect(2, 2), Cell(0, 0)))


# --- runs ------------------------------------------------------------------


@pytest.mark.parametrize(
    "polygon, steps",
    [(corridor(1), 0), (corridor(2), 2), (rect(2, 2), 4), (corridor(5), 8)],
)
def test_lhdfs_small_polygons(polygon, steps):
    t = run_strategy(polygon, LeftHandDFS())
    assert t.complete and t.steps == steps
    assert t.path[0] == t.path[-1] == polygon.start


def test_first_move_prefers_east():
    p = parse_polygon(".\nS.\n.")
    t = run_strategy(p, LeftHandDFS())
    assert t.moves[0] == Cell(1, 1)


def test_left_hand_order_mid_corridor():
    p = corridor(4)
    kmap = KnowledgeMap()
    for c in (Cell(0, 0), Cell(1, 0)):
        kmap.record(c, sense(p, c))
    assert left_hand_dfs_decision(kmap, Cell(1, 0), EAST, [Cell(0, 0), Cell(1, 0)]) is EAST


def test_dead_end_backtracks_then_halts():
    p = corridor(3)
    kmap = KnowledgeMap()
    stack = [Cell(0, 0), Cell(1, 0), Cell(2, 0)]
    for c in stack:
        kmap.record(c, sense(p, c))
    assert left_hand_dfs_decision(kmap, Cell(2, 0), EAST, stack) is WEST
    assert left_hand_dfs_decision(kmap, Cell(0, 0), WEST, stack) is HALT


def test_narrow_passage_round_trip_takes_six_steps():
    p = load_fixture("narrow_passages.txt")
    path = run_strategy(p, LeftHandDFS()).path
    detour = [Cell(3, 3), Cell(3, 2), Cell(3, 1), Cell(3, 0), Cell(3, 1), Cell(3, 2), Cell(3, 3)]
    starts = [i for i in range(len(path)) if path[i : i + len(detour)] == detour]
    assert len(starts) == 1
    assert len(detour) - 1 == 6


def test_layers_fixture_lhdfs_steps():
    t = run_strategy(load_fixture("narrow_passages.txt"), LeftHandDFS())
    assert t.steps == 62 <= 2 * (46 - 1)


def test_determinism_byte_for_byte():
    p = load_fixture("narrow_passages.txt")
    for name in ("lhdfs", "tangent"):
        a = run_strategy(p, make_strategy(name)).to_text()
        b = run_strategy(p, make_strategy(name)).to_text()
        assert a == b


def test_strategy_object_is_reusable():
    s = LeftHandDFS()
    p = load_fixture("meander_double_tangent.txt")
    assert run_strategy(p, s).moves == run_strategy(p, s).moves


def test_transcript_text_round_trip():
    t = run_strategy(load_fixture("meander_double_tangent.txt"), TangentRuleDFS())
    again = Transcript.from_text(t.to_text())
    assert again == t


def test_unknown_strategy_name():
    with pytest.raises(ValueError, match="unknown strategy"):
        make_strategy("smartdfs")


# --- failure codes ---------------------------------------------------------


class _Scripted:
    name = "scripted"

    def __init__(self, moves):
        self.moves = list(moves)

    def decide(self, kmap, pos, history):
        i = len(history) - 1
        return self.moves[i] if i < len(self.moves) else HALT


def test_illegal_move_into_blocked_cell():
    with pytest.raises(IllegalMove):
        run_strategy(corridor(3), _Scripted([NORTH]))


def test_halting_early_is_incomplete():
    with pytest.raises(HaltedIncomplete):
        run_strategy(corridor(3), _Scripted([EAST, WEST]))


def test_step_limit():
    with pytest.raises(StepLimitExceeded):
        run_strategy(corridor(3), _Scripted([EAST, WEST] * 10), step_limit=5)


# --- tangent rule and split cells -----------------------------------------


def _u_configuration(active_start: Cell) -> tuple[KnowledgeMap, Cell]:
    """Visited U around (1,1) opening to the west at pos (0,1)."""
    kmap = KnowledgeMap()
    kmap.known_free = {Cell(x, y) for x in range(3) for y in range(4)}
    kmap.visited = {Cell(0, 1), Cell(2, 1), Cell(0, 2), Cell(1, 2), Cell(2, 2), active_start}
    kmap.known_blocked = {Cell(x, y) for x in (-1, 3) for y in range(4)}
    return kmap, Cell(0, 1)


def test_tangent_fires_when_line_separates_start():
    kmap, pos = _u_configuration(Cell(0, 0))
    assert tangent_rule_triggered(kmap, pos, Cell(0, 0)) == Cell(1, 1)


def test_tangent_silent_when_start_on_same_side():
    kmap, pos = _u_configuration(Cell(0, 3))
    assert tangent_rule_triggered(kmap, pos, Cell(0, 3)) is None


def test_meander_fires_twice():
    s = TangentRuleDFS()
    t = run_strategy(load_fixture("meander_double_tangent.txt"), s)
    assert t.steps == 28
    assert [step for step, _ in s.firings] == [13, 15]


def test_compact_flaw_fires_twice():
    s = TangentRuleDFS()
    t = run_strategy(load_fixture("compact_tangent_flaw.txt"), s)
    assert t.steps == 26
    assert len(s.firings) == 2


@pytest.mark.parametrize("polygon", [corridor(6), rect(2, 2), rect(2, 5)])
def test_tangent_equals_lhdfs_without_triggers(polygon):
    s = TangentRuleDFS()
    assert run_strategy(polygon, s).moves == run_strategy(polygon, LeftHandDFS()).moves
    assert s.firings == []


def test_corridor_has_no_split():
    p = corridor(5)
    kmap = KnowledgeMap()
    for c in (Cell(0, 0), Cell(1, 0)):
        kmap.record(c, sense(p, c))
    assert detect_split_cell(kmap, Cell(1, 0)) is None


def test_t_junction_splits_into_two_arms():
    bar = {Cell(x, 4) for x in range(5)}
    stem = {Cell(2, y) for y in range(4)}
    p = polygon_from_cells(bar | stem, Cell(2, 0))
    kmap = KnowledgeMap()
    walked = [Cell(2, y) for y in range(5)]
    for c in p.free_cells:  # full map knowledge, only the stem walked
        kmap.record(c, sense(p, c))
    kmap.visited = set(walked)
    found = detect_split_cell(kmap, Cell(2, 4), Cell(2, 0))
    assert found is not None
    _, comps = found
    # independent check: unvisited free cells fall apart into the two arms
    oracle = components4(p.free_cells - set(walked))
    assert sorted(map(frozenset, oracle), key=min) == sorted((c.cells for c in comps), key=min)
    assert len(comps) == 2


# --- properties ------------------------------------------------------------


@given(polygons(max_cells=40))
def test_lhdfs_complete_within_dfs_bound(p):
    t = run_strategy(p, LeftHandDFS())
    assert t.complete
    assert t.steps <= 2 * (len(p) - 1)
    kmap = replay(p, t)
    assert kmap.visited == p.free_cells


@given(polygons(max_cells=30))
def test_tangent_runs_are_legal_and_complete(p):
    t = run_strategy(p, TangentRuleDFS())
    assert replay(p, t).visited == p.free_cells
    assert t.path[-1] == p.start


@given(polygons(max_cells=25))
def test_replay_grows_knowledge_monotonically(p):
    t = run_strategy(p, LeftHandDFS())
    kmap = KnowledgeMap()
    kmap.record(t.start, sense(p, t.start))
    for a, b in zip(t.path, t.path[1:]):
        assert Move.between(a, b) in (NORTH, EAST, SOUTH, WEST)
        before = (set(kmap.known_free), set(kmap.known_blocked))
        kmap.record(b, sense(p, b))
        assert kmap.known_free >= before[0] and kmap.known_blocked >= before[1]
        assert not kmap.known_free & kmap.known_blocked
