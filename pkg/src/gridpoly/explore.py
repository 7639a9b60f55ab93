"""Online exploration under four-neighbour sensing.

An agent standing in a free cell learns the status of its four edge
neighbours and may step into a known free one.  :func:`run_strategy` drives
a strategy against an environment, checks every move, and produces a
:class:`Transcript`.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Protocol, Sequence

from .grid import Cell, GridPolygon


class Status(Enum):
    FREE = "FREE"
    BLOCKED = "BLOCKED"


FREE, BLOCKED = Status.FREE, Status.BLOCKED


class Move(Enum):
    NORTH = (0, 1)
    EAST = (1, 0)
    SOUTH = (0, -1)
    WEST = (-1, 0)
    HALT = (0, 0)

    @property
    def delta(self) -> tuple[int, int]:
        return self.value

    def left(self) -> "Move":
        return _LEFT[self]

    def right(self) -> "Move":
        return _LEFT[_LEFT[_LEFT[self]]]

    def back(self) -> "Move":
        return _LEFT[_LEFT[self]]

    def apply(self, cell: Cell) -> Cell:
        return Cell(cell.x + self.value[0], cell.y + self.value[1])

    @staticmethod
    def between(a: Cell, b: Cell) -> "Move":
        d = (b[0] - a[0], b[1] - a[1])
        for m in DIRECTIONS:
            if m.value == d:
                return m
        raise ValueError(f"{a} and {b} are not 4-adjacent")


NORTH, EAST, SOUTH, WEST, HALT = Move.NORTH, Move.EAST, Move.SOUTH, Move.WEST, Move.HALT
DIRECTIONS = (NORTH, EAST, SOUTH, WEST)
_LEFT = {NORTH: WEST, WEST: SOUTH, SOUTH: EAST, EAST: NORTH}
# first move out of the start: east, then clockwise
INITIAL_ORDER = (EAST, SOUTH, WEST, NORTH)


class ExplorationError(RuntimeError):
    pass


class IllegalMove(ExplorationError):
    pass


class StepLimitExceeded(ExplorationError):
    pass


class HaltedIncomplete(ExplorationError):
    pass


@dataclass(frozen=True)
class SensorReading:
    north: Status
    east: Status
    south: Status
    west: Status

    def __iter__(self):
        return iter((self.north, self.east, self.south, self.west))

    def status(self, move: Move) -> Status:
        return dict(zip(DIRECTIONS, self))[move]


def sense(polygon: GridPolygon, pos: Cell) -> SensorReading:
    """Ground-truth statuses of the four neighbours of a free cell."""
    pos = Cell(*pos)
    if pos not in polygon.free_cells:
        raise IllegalMove(f"cannot sense from non-free cell {pos}")
    return SensorReading(*(FREE if n in polygon.free_cells else BLOCKED for n in pos.neighbours4()))


class Environment(Protocol):
    start: Cell

    def sense(self, pos: Cell) -> SensorReading: ...

    def explored(self, visited: set[Cell]) -> bool: ...


class PolygonEnvironment:
    """A fixed, fully determined polygon."""

    def __init__(self, polygon: GridPolygon):
        self.polygon = polygon
        self.start = polygon.start

    def sense(self, pos: Cell) -> SensorReading:
        return sense(self.polygon, pos)

    def explored(self, visited: set[Cell]) -> bool:
        return visited >= self.polygon.free_cells


@dataclass
class KnowledgeMap:
    """What the agent has learned so far.  Statuses never change once known."""

    known_free: set[Cell] = field(default_factory=set)
    known_blocked: set[Cell] = field(default_factory=set)
    visited: set[Cell] = field(default_factory=set)

    def status(self, cell: Cell) -> Status | None:
        if cell in self.known_free:
            return FREE
        if cell in self.known_blocked:
            return BLOCKED
        return None

    def record(self, pos: Cell, reading: SensorReading) -> None:
        pos = Cell(*pos)
        if pos in self.known_blocked:
            raise ExplorationError(f"visited cell {pos} was known blocked")
        self.known_free.add(pos)
        self.visited.add(pos)
        for n, st in zip(pos.neighbours4(), reading):
            old = self.status(n)
            if old is not None and old is not st:
                raise ExplorationError(f"status of {n} flipped from {old.name} to {st.name}")
            (self.known_free if st is FREE else self.known_blocked).add(n)

    def unvisited_free(self) -> set[Cell]:
        return self.known_free - self.visited

    def restricted(self, visited: Iterable[Cell]) -> "KnowledgeMap":
        """The map as it was when exactly ``visited`` had been visited."""
        visited = set(visited)
        known = set(visited)
        for c in visited:
            known.update(c.neighbours4())
        return KnowledgeMap(
            self.known_free & known, self.known_blocked & known, visited
        )

    def copy(self) -> "KnowledgeMap":
        return KnowledgeMap(set(self.known_free), set(self.known_blocked), set(self.visited))


@dataclass
class Transcript:
    """Record of one run.  ``moves`` holds the position after every step."""

    polygon_id: str
    start: Cell
    moves: list[Cell]
    revisits: int
    complete: bool
    strategy: str = ""

    @property
    def steps(self) -> int:
        return len(self.moves)

    @property
    def path(self) -> list[Cell]:
        return [self.start] + list(self.moves)

    def to_text(self) -> str:
        lines = [
            "; gridpoly transcript v1",
            f"; polygon {self.polygon_id}",
            f"; strategy {self.strategy}",
            f"; start {self.start.x} {self.start.y}",
            f"; steps {self.steps} revisits {self.revisits} complete {str(self.complete).lower()}",
        ]
        prev = self.start
        for c in self.moves:
            lines.append(f"{c.x - prev.x} {c.y - prev.y}")
            prev = c
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Transcript":
        header: dict[str, list[str]] = {}
        deltas = []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith(";"):
                parts = line[1:].split()
                if parts:
                    header[parts[0]] = parts[1:]
                continue
            dx, dy = map(int, line.split())
            deltas.append((dx, dy))
        start = Cell(int(header["start"][0]), int(header["start"][1]))
        stats = header.get("steps", [])
        info = dict(zip(stats[1::2], stats[2::2]))
        moves = []
        pos = start
        for dx, dy in deltas:
            pos = Cell(pos.x + dx, pos.y + dy)
            moves.append(pos)
        return cls(
            polygon_id=header.get("polygon", [""])[0],
            start=start,
            moves=moves,
            revisits=int(info.get("revisits", 0)),
            complete=info.get("complete") == "true",
            strategy=" ".join(header.get("strategy", [])),
        )

    def report(self, opt_length: int | None = None) -> dict:
        out = {
            "schema": "gridpoly.explore/1",
            "polygon": self.polygon_id,
            "strategy": self.strategy,
            "steps": self.steps,
            "revisits": self.revisits,
            "complete": self.complete,
        }
        if opt_length is not None and self.complete:
            from .offline import competitive_ratio

            r = competitive_ratio(self.steps, opt_length)
            out["optimal"] = opt_length
            out["ratio_vs_optimal"] = f"{r.numerator}/{r.denominator}"
            out["ratio_approx"] = round(float(r), 6)
        return out

    def to_json(self, opt_length: int | None = None) -> str:
        return json.dumps(self.report(opt_length), sort_keys=True)


class Strategy(Protocol):
    name: str

    def decide(self, kmap: KnowledgeMap, pos: Cell, history: Sequence[Cell]) -> Move: ...


def default_step_limit(n_cells: int) -> int:
    return 4 * n_cells + 16


def run_strategy(
    world: GridPolygon | Environment,
    strategy: Strategy,
    step_limit: int | None = None,
    polygon_id: str | None = None,
) -> Transcript:
    """Run ``strategy`` until it halts; every move is checked for legality.

    Raises IllegalMove, StepLimitExceeded or HaltedIncomplete.
    """
    if isinstance(world, GridPolygon):
        env: Environment = PolygonEnvironment(world)
        polygon_id = polygon_id or world.digest()
        if step_limit is None:
            step_limit = default_step_limit(len(world))
    else:
        env = world
        polygon_id = polygon_id or type(env).__name__
        if step_limit is None:
            step_limit = 1_000_000
    pos = Cell(*env.start)
    kmap = KnowledgeMap()
    kmap.record(pos, env.sense(pos))
    history = [pos]
    revisits = 0
    while True:
        move = strategy.decide(kmap, pos, tuple(history))
        if move is HALT:
            if pos != env.start or not env.explored(kmap.visited):
                raise HaltedIncomplete(
                    f"halted at {pos} after {len(history) - 1} steps with "
                    f"{len(kmap.visited)} cells visited"
                )
            break
        if len(history) - 1 >= step_limit:
            raise StepLimitExceeded(f"{strategy.name} exceeded {step_limit} steps")
        nxt = move.apply(pos)
        if kmap.status(nxt) is not FREE:
            raise IllegalMove(f"move {move.name} from {pos} into {kmap.status(nxt)} cell {nxt}")
        if nxt in kmap.visited:
            revisits += 1
        pos = nxt
        kmap.record(pos, env.sense(pos))
        history.append(pos)
    return Transcript(
        polygon_id=polygon_id,
        start=Cell(*env.start),
        moves=history[1:],
        revisits=revisits,
        complete=True,
        strategy=strategy.name,
    )


def replay(polygon: GridPolygon, transcript: Transcript) -> KnowledgeMap:
    """Re-sense a transcript against ``polygon``; raises on any inconsistency."""
    kmap = KnowledgeMap()
    pos = transcript.start
    kmap.record(pos, sense(polygon, pos))
    for nxt in transcript.moves:
        if abs(nxt.x - pos.x) + abs(nxt.y - pos.y) != 1 or kmap.status(nxt) is not FREE:
            raise IllegalMove(f"illegal step {pos} -> {nxt}")
        pos = nxt
        kmap.record(pos, sense(polygon, pos))
    return kmap


# ---------------------------------------------------------------------------
# depth-first strategies


def _heading(history: Sequence[Cell]) -> Move | None:
    if len(history) < 2:
        return None
    return Move.between(history[-2], history[-1])


def _lefthand_order(heading: Move | None) -> tuple[Move, ...]:
    if heading is None:
        return INITIAL_ORDER
    return (heading.left(), heading, heading.right(), heading.back())


class _DFSTrace:
    """DFS bookkeeping rebuilt incrementally from the move history.

    ``stack`` lists visited cells in discovery order.  Backtracking targets
    the latest of them that still has an unvisited neighbour; without
    detours this is the deepest such cell on the DFS tree path, and unlike
    a truncated tree path it never forgets a pending cell when the agent
    branches off early on its way back.
    """

    def __init__(self, start: Cell):
        self.history: list[Cell] = [start]
        self.stack: list[Cell] = [start]
        self.seen: set[Cell] = {start}

    def push(self, cell: Cell) -> None:
        self.history.append(cell)
        if cell not in self.seen:
            self.seen.add(cell)
            self.stack.append(cell)


def lefthand_choice(kmap: KnowledgeMap, pos: Cell, heading: Move | None) -> Move | None:
    """First unvisited known-free neighbour in left/straight/right/back order."""
    for m in _lefthand_order(heading):
        n = m.apply(pos)
        if n in kmap.known_free and n not in kmap.visited:
            return m
    return None


def _has_unvisited_neighbour(kmap: KnowledgeMap, cell: Cell) -> bool:
    return any(n in kmap.known_free and n not in kmap.visited for n in cell.neighbours4())


def _step_towards(kmap: KnowledgeMap, pos: Cell, target: Cell) -> Move:
    """First move of a shortest path over visited cells (ties in move order)."""
    dist = {target: 0}
    queue = deque([target])
    while queue and pos not in dist:
        c = queue.popleft()
        for n in c.neighbours4():
            if n in kmap.visited and n not in dist:
                dist[n] = dist[c] + 1
                queue.append(n)
    for m in DIRECTIONS:
        n = m.apply(pos)
        if dist.get(n, -2) == dist[pos] - 1:
            return m
    raise ExplorationError(f"no visited path from {pos} to {target}")


def left_hand_dfs_decision(
    kmap: KnowledgeMap, pos: Cell, heading: Move | None, stack: Sequence[Cell]
) -> Move:
    """Left-hand DFS step.

    Explore the first unvisited free neighbour in left/straight/right/back
    order; otherwise backtrack, by a shortest known path, to the most
    recently discovered cell that still has unvisited neighbours, or to the
    start.
    """
    m = lefthand_choice(kmap, pos, heading)
    if m is not None:
        return m
    target = stack[0]
    for cell in reversed(stack):
        if _has_unvisited_neighbour(kmap, cell):
            target = cell
            break
    if pos == target:
        return HALT
    return _step_towards(kmap, pos, target)


class _Replaying:
    """Base for strategies whose derived state is a pure function of history."""

    name = "strategy"

    def __init__(self):
        self._trace: _DFSTrace | None = None

    def _sync(self, kmap: KnowledgeMap, history: Sequence[Cell]) -> None:
        t = self._trace
        if t is None or len(t.history) > len(history) or t.history != list(history[: len(t.history)]):
            self._reset(history[0])
            t = self._trace
        for i in range(len(t.history), len(history)):
            t.push(history[i])
            self._observe(kmap, history[: i + 1])

    def _reset(self, start: Cell) -> None:
        self._trace = _DFSTrace(start)

    def _observe(self, kmap: KnowledgeMap, history: Sequence[Cell]) -> None:
        pass


class LeftHandDFS(_Replaying):
    """Depth-first search with a left-hand preference."""

    name = "lhdfs"

    def decide(self, kmap: KnowledgeMap, pos: Cell, history: Sequence[Cell]) -> Move:
        self._sync(kmap, history)
        return left_hand_dfs_decision(kmap, pos, _heading(history), self._trace.stack)


# ---------------------------------------------------------------------------
# split cells and the tangent rule


def _region(kmap: KnowledgeMap) -> tuple[set[Cell], tuple[int, int, int, int]]:
    known = kmap.known_free | kmap.known_blocked
    xs = [c.x for c in known]
    ys = [c.y for c in known]
    return known, (min(xs) - 1, min(ys) - 1, max(xs) + 1, max(ys) + 1)


def _open_components(kmap: KnowledgeMap) -> tuple[dict[Cell, int], list[set[Cell]]]:
    """Components of cells that are neither visited nor known blocked, inside
    the known bounding box grown by one ring (the ring links everything that
    is not enclosed by known cells)."""
    _, (x0, y0, x1, y1) = _region(kmap)
    label: dict[Cell, int] = {}
    comps: list[set[Cell]] = []
    closed = kmap.visited | kmap.known_blocked
    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            seed = Cell(x, y)
            if seed in closed or seed in label:
                continue
            comp = {seed}
            label[seed] = len(comps)
            queue = deque([seed])
            while queue:
                c = queue.popleft()
                for n in c.neighbours4():
                    if (
                        n not in label
                        and n not in closed
                        and x0 <= n.x <= x1
                        and y0 <= n.y <= y1
                    ):
                        label[n] = len(comps)
                        comp.add(n)
                        queue.append(n)
            comps.append(comp)
    return label, comps


def known_distances(kmap: KnowledgeMap, source: Cell) -> dict[Cell, int]:
    """Shortest-path distances from ``source`` through known free cells."""
    dist = {source: 0}
    queue = deque([source])
    while queue:
        c = queue.popleft()
        for n in c.neighbours4():
            if n in kmap.known_free and n not in dist:
                dist[n] = dist[c] + 1
                queue.append(n)
    return dist


@dataclass(frozen=True)
class SplitComponent:
    cells: frozenset[Cell]
    entries: tuple[Cell, ...]
    distance: int | None


def detect_split_cell(
    kmap: KnowledgeMap, pos: Cell, active_start: Cell | None = None
) -> tuple[Cell, list[SplitComponent]] | None:
    """Report a split at ``pos``: its unvisited free neighbours fall into two
    or more separate unexplored components.

    Components are listed farthest-first by known-map distance from
    ``active_start`` to their closest known free cell; ties put the smaller
    component first.
    """
    pos = Cell(*pos)
    label, comps = _open_components(kmap)
    groups: dict[int, list[Cell]] = {}
    for n in pos.neighbours4():
        if n in kmap.known_free and n not in kmap.visited:
            groups.setdefault(label[n], []).append(n)
    if len(groups) < 2:
        return None
    dist = known_distances(kmap, active_start if active_start is not None else pos)
    found = []
    for lab, entries in groups.items():
        comp = comps[lab]
        ds = [dist[c] for c in comp if c in dist and c in kmap.known_free]
        found.append(SplitComponent(frozenset(comp), tuple(entries), min(ds) if ds else None))
    found.sort(key=lambda s: (-(s.distance if s.distance is not None else -1), len(s.cells), min(s.cells)))
    return pos, found


def _line_segment(kmap: KnowledgeMap, c: Cell, axis: Move) -> set[Cell]:
    """Maximal run of known free cells through ``c`` along ``axis``."""
    seg = {c}
    for m in (axis, axis.back()):
        n = m.apply(c)
        while n in kmap.known_free:
            seg.add(n)
            n = m.apply(n)
    return seg


def tangent_rule_triggered(kmap: KnowledgeMap, pos: Cell, active_start: Cell) -> Cell | None:
    """The isolated cell to visit first, if the tangent rule applies at ``pos``.

    A known free, unvisited neighbour ``c`` of ``pos`` qualifies when ``pos``
    and the cell opposite it across ``c`` are visited, the three cells on
    one side of that line are visited (a U around ``c``), and cutting the
    known free region along the line leaves ``active_start`` disconnected
    from the U.
    """
    pos = Cell(*pos)
    for m in DIRECTIONS:
        c = m.apply(pos)
        if c not in kmap.known_free or c in kmap.visited:
            continue
        far = m.apply(c)
        if far not in kmap.visited:
            continue
        for side in (m.left(), m.right()):
            u_cells = [side.apply(pos), side.apply(c), side.apply(far)]
            if not all(u in kmap.visited for u in u_cells):
                continue
            line = _line_segment(kmap, c, m)
            if active_start in line:
                continue
            rest = kmap.known_free - line
            if active_start not in rest:
                continue
            seen = {active_start}
            queue = deque([active_start])
            touched = False
            targets = set(u_cells)
            while queue and not touched:
                x = queue.popleft()
                for n in x.neighbours4():
                    if n in rest and n not in seen:
                        if n in targets:
                            touched = True
                            break
                        seen.add(n)
                        queue.append(n)
            if not touched:
                return c
    return None


class TangentRuleDFS(_Replaying):
    """Left-hand DFS with split-cell preference and the tangent-rule override.

    The active start is the split cell whose component is being explored
    (the global start at depth zero).  At a split the component farther from
    the active start is explored first.
    """

    name = "tangent"

    def _reset(self, start: Cell) -> None:
        super()._reset(start)
        self._frames: list[tuple[Cell, frozenset[Cell]]] = []
        self._start = start
        self._split_target: dict[int, Cell] = {}
        self._fired: list[tuple[int, Cell]] = []

    def active_start(self, kmap: KnowledgeMap) -> Cell:
        while self._frames:
            split, comp = self._frames[-1]
            if any(c not in kmap.visited and c not in kmap.known_blocked for c in comp):
                return split
            self._frames.pop()
        return self._start

    def _observe(self, kmap: KnowledgeMap, history: Sequence[Cell]) -> None:
        pos = history[-1]
        if len(history) < 2 or history.count(pos) > 1:
            return
        view = kmap.restricted(history)
        anchor = self.active_start(view)
        split = detect_split_cell(view, pos, anchor)
        if split is not None:
            _, comps = split
            first = comps[0]
            self._frames.append((pos, first.cells))
            self._split_target[len(history)] = first.entries

    def decide(self, kmap: KnowledgeMap, pos: Cell, history: Sequence[Cell]) -> Move:
        self._sync(kmap, history)
        anchor = self.active_start(kmap)
        c = tangent_rule_triggered(kmap, pos, anchor)
        if c is not None:
            self._fired.append((len(history) - 1, c))
            return Move.between(pos, c)
        heading = _heading(history)
        entries = self._split_target.get(len(history))
        if entries:
            for m in _lefthand_order(heading):
                if m.apply(pos) in entries:
                    return m
        return left_hand_dfs_decision(kmap, pos, heading, self._trace.stack)

    @property
    def firings(self) -> list[tuple[int, Cell]]:
        """(step index, cell) for every tangent-rule override of the last run."""
        return list(self._fired)


STRATEGIES = {"lhdfs": LeftHandDFS, "tangent": TangentRuleDFS}


def make_strategy(name: str):
    try:
        return STRATEGIES[name]()
    except KeyError:
        raise ValueError(f"unknown strategy {name!r}; choose from {sorted(STRATEGIES)}") from None
