from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridpoly.grid import (
    Cell,
    GridPolygon,
    PolygonSyntaxError,
    ValidationError,
    ValidationReport,
    compute_layers,
    is_narrow_passage_cell,
    mirror_horizontal,
    narrow_passages,
    parse_polygon,
    render_ascii,
    validate_simple,
)
from gridpoly.repro import load_fixture
from shapes import cell_sets, corridor, polygons, rect


# --- parsing ---------------------------------------------------------------


def test_parse_smallest_corridor():
    p = parse_polygon("S.")
    assert p.free_cells == {Cell(0, 0), Cell(1, 0)}
    assert p.start == Cell(0, 0)


def test_rows_run_north_to_south():
    p = parse_polygon("; comment\n.#\nS.\n")
    assert p.start == Cell(0, 0)
    assert Cell(0, 1) in p and Cell(1, 1) not in p


def test_ring_around_blocked_cell_is_a_hole():
    with pytest.raises(ValidationError) as err:
        parse_polygon("S..\n.#.\n...")
    assert err.value.report.violation == "hole"
    assert err.value.report.witness == Cell(1, 1)


def test_diagonally_attached_blocked_cell_is_not_a_hole():
    p = load_fixture("narrow_passages.txt")
    # the blocked cell touches the outside only through a corner
    assert Cell(7, 8) not in p
    assert Cell(8, 9) not in p and Cell(8, 8) in p and Cell(7, 9) in p


@pytest.mark.parametrize(
    "text, message",
    [("..", "no start"), ("SS", "2 start"), ("S?", "bad character")],
)
def test_syntax_errors(text, message):
    with pytest.raises(PolygonSyntaxError, match=message):
        parse_polygon(text)


def test_ascii_round_trip_of_fixture():
    p = load_fixture("meander_double_tangent.txt")
    assert parse_polygon(render_ascii(p)).free_cells == p.normalized().free_cells


@given(polygons(max_cells=25))
def test_ascii_round_trip(p):
    q = parse_polygon(render_ascii(p))
    assert q == p.normalized()


# --- validation ------------------------------------------------------------


@pytest.mark.parametrize("start", [(0, 0), (1, 0), (0, 1), (1, 1)])
def test_square_2x2_valid_from_any_cell(start):
    assert isinstance(validate_simple(rect(2, 2).free_cells, Cell(*start)), GridPolygon)


def test_corner_contact_is_disconnected():
    report = validate_simple({Cell(0, 0), Cell(1, 1)}, Cell(0, 0))
    assert isinstance(report, ValidationReport)
    assert report.violation == "disconnected"
    assert report.witness == Cell(1, 1)


def test_annulus_is_invalid():
    ring = {Cell(x, y) for x in range(3) for y in range(3)} - {Cell(1, 1)}
    assert validate_simple(ring, Cell(0, 0)).violation == "hole"


def test_start_must_touch_boundary():
    cells = rect(3, 3).free_cells
    assert validate_simple(cells, Cell(1, 1)).violation == "start"
    assert validate_simple(cells, Cell(9, 9)).violation == "start"


def test_degenerate_polygons_are_valid():
    assert len(parse_polygon("S")) == 1
    assert len(parse_polygon("S.")) == 2


def _oracle_valid(cells, start) -> bool:
    """Independent flood-fill check on a padded grid."""
    xs = [x for x, _ in cells]
    ys = [y for _, y in cells]
    x0, y0 = min(xs) - 1, min(ys) - 1
    w, h = max(xs) - x0 + 2, max(ys) - y0 + 2
    grid = [[False] * h for _ in range(w)]
    for x, y in cells:
        grid[x - x0][y - y0] = True

    def fill(seed, want, steps):
        stack, seen = [seed], {seed}
        while stack:
            i, j = stack.pop()
            for di, dj in steps:
                a, b = i + di, j + dj
                if 0 <= a < w and 0 <= b < h and grid[a][b] == want and (a, b) not in seen:
                    seen.add((a, b))
                    stack.append((a, b))
        return seen

    four = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    eight = four + [(1, 1), (1, -1), (-1, 1), (-1, -1)]
    sx, sy = start[0] - x0, start[1] - y0
    if not grid[sx][sy]:
        return False
    if all(grid[sx + di][sy + dj] for di, dj in four):
        return False
    if len(fill((sx, sy), True, four)) != len(cells):
        return False
    blocked = w * h - len(cells)
    return len(fill((0, 0), False, eight)) == blocked


@given(cell_sets)
def test_validation_matches_flood_fill_oracle(cells):
    start = min(cells)
    result = validate_simple(cells, start)
    assert isinstance(result, GridPolygon) == _oracle_valid(cells, start)


@given(polygons(max_cells=20, min_cells=3), st.integers(0, 10**6))
def test_validation_oracle_on_perturbed_polygons(p, k):
    # toggling one cell of the inflated box gives valid and invalid sets alike
    x0, y0, x1, y1 = p.bbox()
    box = [Cell(x, y) for x in range(x0 - 1, x1 + 2) for y in range(y0 - 1, y1 + 2)]
    flip = box[k % len(box)]
    cells = set(p.free_cells) ^ {flip}
    if not cells:
        return
    start = min(cells)
    result = validate_simple(cells, start)
    assert isinstance(result, GridPolygon) == _oracle_valid(cells, start)


# --- layers ----------------------------------------------------------------


def test_corridor_is_all_layer_one():
    assert set(compute_layers(corridor(7)).values()) == {1}


def test_square_4x4_layers():
    layers = compute_layers(rect(4, 4))
    inner = {Cell(x, y) for x in (1, 2) for y in (1, 2)}
    assert {c for c, k in layers.items() if k == 2} == inner
    assert Counter(layers.values()) == {1: 12, 2: 4}


def test_square_6x6_nested_rings():
    layers = compute_layers(rect(6, 6))
    for c, k in layers.items():
        assert k == min(c.x, c.y, 5 - c.x, 5 - c.y) + 1
    assert Counter(layers.values()) == {1: 20, 2: 12, 3: 4}


@given(polygons(max_cells=30))
def test_layer_one_iff_touching_blocked_cell(p):
    layers = compute_layers(p)
    for c in p.free_cells:
        touches = any(n not in p for n in c.neighbours8())
        assert (layers[c] == 1) == touches


# --- narrow passages -------------------------------------------------------


def test_corridor_interior_is_narrow():
    p = corridor(5)
    assert is_narrow_passage_cell(p, Cell(2, 0))
    assert narrow_passages(p) == [frozenset(p.free_cells)]


def test_deleting_ce_changes_southern_neighbour():
    p = load_fixture("narrow_passages.txt")
    layers = compute_layers(p)
    assert layers[Cell(4, 8)] == 1 and layers[Cell(4, 7)] == 2
    assert not is_narrow_passage_cell(p, Cell(4, 8))


def test_fixture_has_five_passages():
    passages = narrow_passages(load_fixture("narrow_passages.txt"))
    assert len(passages) == 5
    assert frozenset({Cell(3, 0), Cell(3, 1), Cell(3, 2)}) in passages


def test_full_2x3_is_entirely_narrow():
    p = rect(2, 3)
    assert all(is_narrow_passage_cell(p, c) for c in p.free_cells)


def test_thick_square_has_no_passages():
    assert narrow_passages(rect(10, 10)) == []


def test_narrow_test_rejects_inner_layers():
    with pytest.raises(ValueError, match="layer 2"):
        is_narrow_passage_cell(rect(4, 4), Cell(1, 1))


@given(polygons(max_cells=20))
def test_passages_agree_with_cell_test(p):
    layers = compute_layers(p)
    narrow = {
        c for c in p.free_cells if layers[c] == 1 and is_narrow_passage_cell(p, c, layers)
    }
    passages = narrow_passages(p)
    assert set().union(*passages) == narrow if passages else not narrow
    assert sum(len(s) for s in passages) == len(narrow)


# --- mirroring -------------------------------------------------------------


def test_mirror_square_is_itself():
    p = rect(2, 2)
    assert mirror_horizontal(p).free_cells == p.free_cells


def test_mirror_l_tromino():
    p = validate_simple({Cell(0, 0), Cell(0, 1), Cell(1, 0)}, Cell(0, 0))
    m = mirror_horizontal(p)
    assert m.free_cells == {Cell(0, 1), Cell(0, 0), Cell(1, 1)}
    assert m.start == Cell(0, 1)


@given(polygons(max_cells=20))
def test_mirror_preserves_structure(p):
    m = mirror_horizontal(p)
    assert len(m) == len(p)
    assert Counter(compute_layers(m).values()) == Counter(compute_layers(p).values())
    assert len(narrow_passages(m)) == len(narrow_passages(p))
    assert mirror_horizontal(m) == p
