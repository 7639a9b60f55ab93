"""Simple grid polygons: parsing, validation, layers and narrow passages.

Coordinates: ``x`` grows east, ``y`` grows north.  In the ASCII format the
first text row is the northernmost one.
"""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


class Cell(NamedTuple):
    x: int
    y: int

    def __add__(self, other):  # type: ignore[override]
        return Cell(self.x + other[0], self.y + other[1])

    def neighbours4(self) -> tuple["Cell", "Cell", "Cell", "Cell"]:
        """North, east, south, west neighbours, in that order."""
        x, y = self
        return (Cell(x, y + 1), Cell(x + 1, y), Cell(x, y - 1), Cell(x - 1, y))

    def neighbours8(self) -> list["Cell"]:
        x, y = self
        return [Cell(x + dx, y + dy) for dy in (1, 0, -1) for dx in (-1, 0, 1) if dx or dy]


INT32_MIN, INT32_MAX = -(2**31), 2**31 - 1


class PolygonSyntaxError(ValueError):
    """Malformed ASCII polygon text."""


class ValidationError(ValueError):
    """Raised when a cell set is not a simple grid polygon."""

    def __init__(self, report: "ValidationReport"):
        super().__init__(f"{report.violation}: {report.message}")
        self.report = report


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate_simple` for an invalid cell set.

    ``violation`` is one of ``empty``, ``range``, ``start``, ``disconnected``
    or ``hole``; ``witness`` is a cell demonstrating the violation.
    """

    violation: str
    witness: Cell | None
    message: str

    @property
    def ok(self) -> bool:
        return False

    def to_dict(self) -> dict:
        return {
            "valid": False,
            "violation": self.violation,
            "witness": None if self.witness is None else list(self.witness),
            "message": self.message,
        }


@dataclass(frozen=True)
class GridPolygon:
    """A validated simple grid polygon with a start cell on its boundary.

    Construct through :func:`parse_polygon` or :func:`validate_simple`;
    the constructor itself does not validate.
    """

    free_cells: frozenset[Cell]
    start: Cell
    _index: dict = field(default=None, repr=False, compare=False, hash=False)

    def __post_init__(self):
        if self._index is None:
            order = sorted(self.free_cells, key=lambda c: (-c.y, c.x))
            object.__setattr__(self, "_index", {c: i for i, c in enumerate(order)})

    def __len__(self) -> int:
        return len(self.free_cells)

    def __contains__(self, cell) -> bool:
        return cell in self.free_cells

    @property
    def cells(self) -> list[Cell]:
        """Free cells in row-major order (north row first, west to east)."""
        return list(self._index)

    def index(self, cell: Cell) -> int:
        """Row-major index of ``cell``; the bit position used by searches."""
        return self._index[cell]

    def bbox(self) -> tuple[int, int, int, int]:
        xs = [c.x for c in self.free_cells]
        ys = [c.y for c in self.free_cells]
        return min(xs), min(ys), max(xs), max(ys)

    def is_free(self, cell: Cell) -> bool:
        return cell in self.free_cells

    def free_neighbours(self, cell: Cell) -> list[Cell]:
        return [n for n in Cell(*cell).neighbours4() if n in self.free_cells]

    def translated(self, dx: int, dy: int) -> "GridPolygon":
        return GridPolygon(
            frozenset(Cell(c.x + dx, c.y + dy) for c in self.free_cells),
            Cell(self.start.x + dx, self.start.y + dy),
        )

    def normalized(self) -> "GridPolygon":
        """Translate so the bounding box starts at the origin."""
        x0, y0, _, _ = self.bbox()
        return self.translated(-x0, -y0)

    def with_start(self, start: Cell) -> "GridPolygon":
        result = validate_simple(self.free_cells, Cell(*start))
        if isinstance(result, ValidationReport):
            raise ValidationError(result)
        return result

    def digest(self) -> str:
        """Stable short hash of the normalized cell set and start."""
        norm = self.normalized()
        return hashlib.sha256(render_ascii(norm).encode()).hexdigest()[:16]


def _grid_to_text_rows(text: str) -> list[str]:
    rows = []
    for line in text.splitlines():
        if line.lstrip().startswith(";"):
            continue
        rows.append(line.rstrip("\n"))
    while rows and not rows[0].strip():
        rows.pop(0)
    while rows and not rows[-1].strip():
        rows.pop()
    return rows


def parse_cells(text: str) -> tuple[set[Cell], list[Cell]]:
    """Parse ASCII text into free cells and the list of 'S' positions.

    Lines whose first non-blank character is ``;`` are comments.
    """
    rows = _grid_to_text_rows(text)
    free: set[Cell] = set()
    starts: list[Cell] = []
    height = len(rows)
    for r, row in enumerate(rows):
        y = height - 1 - r
        for x, ch in enumerate(row):
            if ch in "# ":
                continue
            if ch == ".":
                free.add(Cell(x, y))
            elif ch == "S":
                free.add(Cell(x, y))
                starts.append(Cell(x, y))
            else:
                raise PolygonSyntaxError(f"bad character {ch!r} at row {r}, column {x}")
    return free, starts


def parse_polygon(text: str) -> GridPolygon:
    """Parse and validate an ASCII polygon ('.' free, '#' blocked, 'S' start)."""
    free, starts = parse_cells(text)
    if not starts:
        raise PolygonSyntaxError("no start cell 'S'")
    if len(starts) > 1:
        raise PolygonSyntaxError(f"{len(starts)} start cells 'S', expected one")
    result = validate_simple(free, starts[0])
    if isinstance(result, ValidationReport):
        raise ValidationError(result)
    return result


def render_ascii(polygon: GridPolygon, path: Iterable[Cell] | None = None) -> str:
    """Render with a tight bounding box.  Cells on ``path`` are drawn as 'o'
    (the result is then an overlay, not parseable)."""
    x0, y0, x1, y1 = polygon.bbox()
    on_path = set(path or ())
    lines = []
    for y in range(y1, y0 - 1, -1):
        row = []
        for x in range(x0, x1 + 1):
            c = Cell(x, y)
            if c == polygon.start:
                row.append("S")
            elif c in on_path:
                row.append("o")
            elif c in polygon.free_cells:
                row.append(".")
            else:
                row.append("#")
        lines.append("".join(row))
    return "\n".join(lines) + "\n"


def components4(cells: Iterable[Cell]) -> list[set[Cell]]:
    """4-connected components, ordered by their minimal cell (lexicographic)."""
    remaining = set(cells)
    comps = []
    while remaining:
        seed = min(remaining)
        comp = {seed}
        queue = deque([seed])
        remaining.discard(seed)
        while queue:
            c = queue.popleft()
            for n in c.neighbours4():
                if n in remaining:
                    remaining.discard(n)
                    comp.add(n)
                    queue.append(n)
        comps.append(comp)
    comps.sort(key=min)
    return comps


def _complement_hole(cells: set[Cell]) -> Cell | None:
    """A blocked cell not 8-connected to the outside, or None."""
    xs = [c.x for c in cells]
    ys = [c.y for c in cells]
    x0, x1, y0, y1 = min(xs) - 1, max(xs) + 1, min(ys) - 1, max(ys) + 1
    blocked = {
        Cell(x, y)
        for x in range(x0, x1 + 1)
        for y in range(y0, y1 + 1)
        if Cell(x, y) not in cells
    }
    seed = Cell(x0, y0)
    seen = {seed}
    queue = deque([seed])
    while queue:
        c = queue.popleft()
        for n in c.neighbours8():
            if n in blocked and n not in seen:
                seen.add(n)
                queue.append(n)
    holes = blocked - seen
    return min(holes) if holes else None


def validate_simple(cells: Iterable[Cell], start: Cell) -> GridPolygon | ValidationReport:
    """Return the polygon, or a report naming the first violated invariant."""
    cells = {Cell(*c) for c in cells}
    start = Cell(*start)
    if not cells:
        return ValidationReport("empty", None, "polygon has no free cells")
    for c in cells:
        if not (INT32_MIN <= c.x <= INT32_MAX and INT32_MIN <= c.y <= INT32_MAX):
            return ValidationReport("range", c, "coordinate outside signed 32-bit range")
    if start not in cells:
        return ValidationReport("start", start, "start is not a free cell")
    if all(n in cells for n in start.neighbours4()):
        return ValidationReport("start", start, "start has no blocked 4-neighbour")
    comps = components4(cells)
    if len(comps) > 1:
        witness = min(comps[1])
        return ValidationReport("disconnected", witness, f"{len(comps)} 4-connected components")
    hole = _complement_hole(cells)
    if hole is not None:
        return ValidationReport("hole", hole, "blocked cell enclosed by free cells")
    return GridPolygon(frozenset(cells), start)


def is_valid_simple(cells: Iterable[Cell], start: Cell) -> bool:
    return isinstance(validate_simple(cells, start), GridPolygon)


def _layers_of(cells: set[Cell]) -> dict[Cell, int]:
    layer: dict[Cell, int] = {}
    level = 1
    current = [set(cells)]
    while current:
        nxt = []
        for comp in current:
            ring = {c for c in comp if any(n not in comp for n in c.neighbours8())}
            for c in ring:
                layer[c] = level
            rest = comp - ring
            if rest:
                nxt.extend(components4(rest))
        current = nxt
        level += 1
    return layer


def compute_layers(polygon: GridPolygon) -> dict[Cell, int]:
    """Layer number of every free cell (1 = touches the boundary, corners count)."""
    return _layers_of(set(polygon.free_cells))


def _layers_after_deletion(cells: set[Cell], c: Cell) -> dict[Cell, int]:
    rest = cells - {c}
    layer: dict[Cell, int] = {}
    for comp in components4(rest):
        layer.update(_layers_of(comp))
    return layer


def is_narrow_passage_cell(
    polygon: GridPolygon, c: Cell, layers: dict[Cell, int] | None = None
) -> bool:
    """Deletion test: removing ``c`` leaves the layer of every cell touching
    it (by an edge or a corner) unchanged."""
    c = Cell(*c)
    if c not in polygon.free_cells:
        raise ValueError(f"{c} is not a free cell")
    layers = compute_layers(polygon) if layers is None else layers
    if layers[c] != 1:
        raise ValueError(f"{c} has layer {layers[c]}, narrow passages live in layer 1")
    after = _layers_after_deletion(set(polygon.free_cells), c)
    return all(after[n] == layers[n] for n in c.neighbours8() if n in polygon.free_cells)


def narrow_passages(polygon: GridPolygon) -> list[frozenset[Cell]]:
    """Maximal 4-connected groups of narrow-passage cells."""
    layers = compute_layers(polygon)
    npc = [
        c for c in polygon.free_cells
        if layers[c] == 1 and is_narrow_passage_cell(polygon, c, layers)
    ]
    return [frozenset(comp) for comp in components4(npc)]


def mirror_horizontal(polygon: GridPolygon, axis2: int | None = None) -> GridPolygon:
    """Reflect about a horizontal line.

    ``axis2`` is twice the y-coordinate of the mirror line; the default is
    the polygon's own midline, so the bounding box is preserved.
    """
    if axis2 is None:
        _, y0, _, y1 = polygon.bbox()
        axis2 = y0 + y1
    flip = lambda c: Cell(c.x, axis2 - c.y)  # noqa: E731
    return GridPolygon(frozenset(map(flip, polygon.free_cells)), flip(polygon.start))


def polygon_from_cells(cells: Iterable[Cell], start: Cell) -> GridPolygon:
    result = validate_simple(cells, start)
    if isinstance(result, ValidationReport):
        raise ValidationError(result)
    return result
