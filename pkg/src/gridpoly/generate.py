"""Polygon generators: exhaustive polyomino enumeration and random shapes."""

from __future__ import annotations

import random
from typing import Iterator

from .grid import Cell, GridPolygon, is_narrow_passage_cell, compute_layers, validate_simple

Shape = tuple[Cell, ...]


def normalize(cells) -> Shape:
    """Translate so the minimum x and y are 0; sorted tuple."""
    cells = list(cells)
    x0 = min(c[0] for c in cells)
    y0 = min(c[1] for c in cells)
    return tuple(sorted(Cell(c[0] - x0, c[1] - y0) for c in cells))


_SYMMETRIES = (
    lambda x, y: (x, y),
    lambda x, y: (-x, y),
    lambda x, y: (x, -y),
    lambda x, y: (-x, -y),
    lambda x, y: (y, x),
    lambda x, y: (-y, x),
    lambda x, y: (y, -x),
    lambda x, y: (-y, -x),
)


def canonical(cells) -> Shape:
    """Representative under translation, rotation and reflection."""
    return min(normalize(f(c[0], c[1]) for c in cells) for f in _SYMMETRIES)


def _grow(shapes: set[Shape], key) -> set[Shape]:
    out: set[Shape] = set()
    for shape in shapes:
        members = set(shape)
        for c in shape:
            for n in c.neighbours4():
                if n not in members:
                    out.add(key(members | {n}))
    return out


def polyominoes(max_cells: int, fixed: bool = True) -> Iterator[Shape]:
    """All polyominoes with 1..max_cells cells, up to translation (``fixed``)
    or up to the eight symmetries of the square."""
    key = normalize if fixed else canonical
    level = {(Cell(0, 0),)}
    for size in range(1, max_cells + 1):
        yield from sorted(level)
        if size < max_cells:
            level = _grow(level, key)


def simple_polygons(max_cells: int, fixed: bool = True) -> Iterator[GridPolygon]:
    """Hole-free polyominoes as polygons started at their lowest-leftmost cell."""
    for shape in polyominoes(max_cells, fixed):
        start = min(shape, key=lambda c: (c.x, c.y))
        result = validate_simple(shape, start)
        if isinstance(result, GridPolygon):
            yield result


def random_polygon(rng: random.Random, max_cells: int, min_cells: int = 1) -> GridPolygon:
    """Random simple polygon by cell accretion; the start is a random boundary cell."""
    target = rng.randint(min_cells, max_cells)
    cells = {Cell(0, 0)}
    frontier = list(Cell(0, 0).neighbours4())
    attempts = 0
    while len(cells) < target and attempts < 50 * target:
        attempts += 1
        n = frontier.pop(rng.randrange(len(frontier)))
        if n in cells:
            continue
        trial = cells | {n}
        if validate_simple(trial, n).__class__ is GridPolygon or _only_start_problem(trial, n):
            cells = trial
            frontier.extend(m for m in n.neighbours4() if m not in cells)
        if not frontier:
            break
    boundary = sorted(c for c in cells if any(m not in cells for m in c.neighbours4()))
    start = rng.choice(boundary)
    result = validate_simple(cells, start)
    assert isinstance(result, GridPolygon), result
    return result


def _only_start_problem(cells: set[Cell], probe: Cell) -> bool:
    boundary = [c for c in cells if any(m not in cells for m in c.neighbours4())]
    return isinstance(validate_simple(cells, min(boundary)), GridPolygon)


def random_corridor(rng: random.Random, max_cells: int) -> GridPolygon:
    """Random width-one corridor (a tree of cells in which every cell is a
    narrow-passage cell), grown cell by cell."""
    target = rng.randint(1, max_cells)
    cells = {Cell(0, 0)}
    tips = [Cell(0, 0)]
    attempts = 0
    while len(cells) < target and attempts < 50 * target:
        attempts += 1
        base = rng.choice(tips)
        n = rng.choice(base.neighbours4())
        if n in cells:
            continue
        # the new cell may touch the corridor only through ``base``
        if any(m in cells for m in n.neighbours8() if m != base):
            continue
        cells.add(n)
        tips.append(n)
    start = min(cells)
    polygon = validate_simple(cells, start)
    assert isinstance(polygon, GridPolygon)
    return polygon


def is_corridor(polygon: GridPolygon) -> bool:
    """Every cell is a narrow-passage cell."""
    layers = compute_layers(polygon)
    return all(
        layers[c] == 1 and is_narrow_passage_cell(polygon, c, layers) for c in polygon.free_cells
    )
