import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gridpoly.adversary import default_library
from gridpoly.explore import LeftHandDFS, run_strategy
from gridpoly.generate import canonical
from gridpoly.grid import Cell, polygon_from_cells
from gridpoly.offline import (
    EXACT_SEARCH,
    HAMILTONIAN,
    InstanceTooLarge,
    brute_force_tour_length,
    competitive_ratio,
    exact_threshold,
    hamiltonian_cycle,
    is_closed_walk,
    is_hamiltonian_cycle,
    min_completion,
    optimal_tour,
    transcript_ratio,
)
from gridpoly.repro import load_fixture
from shapes import corridor, polygons, rect


def test_square_2x2_has_a_four_cycle():
    p = rect(2, 2)
    cycle = hamiltonian_cycle(p)
    assert cycle is not None and len(cycle) - 1 == 4
    assert is_hamiltonian_cycle(p, cycle)


def test_odd_square_has_no_hamiltonian_cycle():
    assert hamiltonian_cycle(rect(3, 3)) is None


def test_block_i_is_hamiltonian():
    block = default_library()["i"]
    cycle = hamiltonian_cycle(block.geometry)
    assert len(cycle) - 1 == 24


@pytest.mark.parametrize(
    "polygon, length, certificate",
    [
        (corridor(5), 8, EXACT_SEARCH),
        (rect(1, 1), 0, EXACT_SEARCH),
        (rect(3, 3), 10, EXACT_SEARCH),
        (rect(2, 2), 4, HAMILTONIAN),
    ],
)
def test_optimal_tour_small(polygon, length, certificate):
    tour = optimal_tour(polygon)
    assert (tour.length, tour.certificate) == (length, certificate)
    assert is_closed_walk(polygon, tour.path)


@pytest.mark.parametrize(
    "name, length", [("meander_double_tangent.txt", 24), ("compact_tangent_flaw.txt", 22)]
)
def test_optimal_tour_fixtures(name, length):
    tour = optimal_tour(load_fixture(name))
    assert tour.length == length
    assert tour.certificate == HAMILTONIAN


def test_large_non_hamiltonian_instance_is_refused():
    with pytest.raises(InstanceTooLarge):
        optimal_tour(load_fixture("narrow_passages.txt"))


def test_threshold_env_override(monkeypatch):
    monkeypatch.setenv("GRIDPOLY_EXACT_THRESHOLD", "4")
    assert exact_threshold() == 4
    with pytest.raises(InstanceTooLarge):
        optimal_tour(corridor(5))
    monkeypatch.delenv("GRIDPOLY_EXACT_THRESHOLD")
    assert exact_threshold() == 26


def test_tie_break_is_reproducible():
    p = rect(3, 3)
    assert optimal_tour(p).path == optimal_tour(p).path


@pytest.mark.parametrize(
    "steps, opt, ratio",
    [(28, 24, Fraction(7, 6)), (26, 22, Fraction(13, 11)), (4, 4, Fraction(1))],
)
def test_competitive_ratio_examples(steps, opt, ratio):
    assert competitive_ratio(steps, opt) == ratio


def test_transcript_ratio():
    p = load_fixture("meander_double_tangent.txt")
    t = run_strategy(p, LeftHandDFS())
    assert transcript_ratio(t, optimal_tour(p)) == Fraction(32, 24)


def test_min_completion_endpoints():
    p = load_fixture("compact_tangent_flaw.txt")
    tour = optimal_tour(p)
    assert min_completion(p, []) == tour.length
    assert min_completion(p, list(tour.path)) == 0


def test_min_completion_rejects_illegal_prefix():
    with pytest.raises(ValueError):
        min_completion(corridor(3), [Cell(0, 0), Cell(2, 0)])


# --- properties ------------------------------------------------------------


@given(polygons(max_cells=11))
def test_matches_brute_force(p):
    assert optimal_tour(p).length == brute_force_tour_length(p)


@given(polygons(max_cells=16))
def test_tour_shape_invariants(p):
    tour = optimal_tour(p)
    assert tour.length % 2 == 0
    assert tour.length >= len(p) or len(p) == 1
    assert (tour.length == len(p)) == (tour.certificate == HAMILTONIAN)
    assert tour.path[0] == tour.path[-1] == p.start
    assert set(tour.path) == p.free_cells


@given(polygons(max_cells=12))
def test_optimum_is_start_independent(p):
    lengths = {optimal_tour(p.with_start(c)).length for c in p.free_cells
               if any(n not in p for n in c.neighbours4())}
    assert len(lengths) == 1


@given(polygons(max_cells=12), st.integers(0, 7))
def test_optimum_invariant_under_square_symmetries(p, k):
    # the exhaustive oracle sweep enumerates shapes only up to symmetry
    image = {c for c in canonical(p.free_cells)} if k == 0 else _transform(p.free_cells, k)
    start = min(image)
    q = polygon_from_cells(image, start)
    assert optimal_tour(q).length == optimal_tour(p).length


def _transform(cells, k):
    fs = [
        lambda x, y: (-x, y), lambda x, y: (x, -y), lambda x, y: (-x, -y),
        lambda x, y: (y, x), lambda x, y: (-y, x), lambda x, y: (y, -x),
        lambda x, y: (-y, -x),
    ]
    return {Cell(*fs[k - 1](c.x, c.y)) for c in cells}


@given(polygons(max_cells=12, min_cells=2), st.randoms(use_true_random=False))
def test_min_completion_changes_by_at_most_one(p, rnd: random.Random):
    prefix = [p.start]
    before = min_completion(p, prefix)
    for _ in range(2 * len(p)):
        prefix.append(rnd.choice(p.free_neighbours(prefix[-1])))
        after = min_completion(p, prefix)
        assert abs(after - before) <= 1
        before = after
