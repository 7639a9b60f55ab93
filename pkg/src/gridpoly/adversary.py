"""A reactive block adversary for online exploration.

The adversary builds a polygon out of *blocks* laid out left to right.
Every block is entered through a 2x1 rectangle on its left and left through
a 2x1 rectangle on its right.  While the agent walks inside the current
block, the adversary keeps several block shapes alive at once and answers
each sensing request with the status shared by every live shape.  A small
decision tree, indexed by the cells the agent visits, narrows the candidates
down until one block is committed.  The committed block's exit rectangle
becomes the entry rectangle of the next round.

All block shapes and the decision tree live in ``data/blocks``; the loader
re-derives every stored optimum with :mod:`gridpoly.offline`, so a
transcription error cannot go unnoticed.

Local frame: the entry rectangle is ``(0,0),(0,1)`` and the canonical start
is ``(0,1)``.  A mirrored block reflects ``y -> 1 - y``, which keeps the
entry rectangle in place.
"""

from __future__ import annotations

import heapq
import json
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Iterator, Sequence

from .explore import (
    BLOCKED,
    FREE,
    HALT,
    ExplorationError,
    KnowledgeMap,
    Move,
    SensorReading,
    Status,
    Transcript,
    replay,
    run_strategy,
)
from .grid import Cell, GridPolygon, parse_cells, polygon_from_cells, validate_simple
from .offline import (
    HAMILTONIAN,
    OptimalTour,
    competitive_ratio,
    hamiltonian_cycle,
    is_hamiltonian_cycle,
    min_completion_state,
    optimal_tour,
)

ENTRY_RECT = (Cell(0, 0), Cell(0, 1))
LOCAL_START = Cell(0, 1)
BLOCK_KINDS = ("b", "d", "f", "h", "i")
LIMIT_RATIO = Fraction(13, 11)
REPORT_SCHEMA = "gridpoly.adversary/1"


class BlockValidationError(ValueError):
    """A block in the library does not have its recorded properties."""


class ConsistencyViolation(RuntimeError):
    """The adversary could not answer consistently (an internal bug)."""


class StrategyIncomplete(RuntimeError):
    """The strategy stopped, got stuck or ran away before finishing."""


class UncoveredBehaviour(RuntimeError):
    """Some agent behaviour is not handled by the decision tree."""

    def __init__(self, message: str, sequence: Sequence[Cell] = ()):
        super().__init__(message)
        self.sequence = list(sequence)


class DetourViolation(AssertionError):
    """Some triggering walk completes a block faster than its recorded bound."""

    def __init__(self, report: "DetourReport"):
        super().__init__(
            f"block {report.block}: {report.min_total} steps possible, "
            f"{report.required} required; witness {report.witness}"
        )
        self.report = report


class IncompatibleJunction(ValueError):
    """Two consecutive blocks cannot be merged at their rectangles."""


def _mirror_cell(c: Cell) -> Cell:
    return Cell(c.x, 1 - c.y)


def _pair(cells) -> tuple[Cell, Cell]:
    a, b = sorted((Cell(*c) for c in cells), key=lambda c: c.y)
    return a, b


# ---------------------------------------------------------------------------
# blocks and the decision tree


@dataclass(frozen=True)
class Block:
    """One block in its local frame.

    ``exit_rect`` is ``(lower, upper)``.  ``geometry`` is the block as a
    polygon started at ``(0,1)``.
    """

    kind: str
    geometry: GridPolygon
    exit_rect: tuple[Cell, Cell]
    opt_steps: int
    forced_alg_steps: int
    trigger: tuple[str, ...] = ()
    mirrored: bool = False
    entry_rect: tuple[Cell, Cell] = ENTRY_RECT

    @property
    def id(self) -> str:
        return self.kind + ("'" if self.mirrored else "")

    @property
    def cells(self) -> frozenset[Cell]:
        return self.geometry.free_cells

    @property
    def width(self) -> int:
        return self.exit_rect[0].x

    def mirror(self) -> "Block":
        cells = frozenset(_mirror_cell(c) for c in self.cells)
        return Block(
            kind=self.kind,
            geometry=GridPolygon(cells, LOCAL_START),
            exit_rect=_pair(_mirror_cell(c) for c in self.exit_rect),
            opt_steps=self.opt_steps,
            forced_alg_steps=self.forced_alg_steps,
            trigger=self.trigger,
            mirrored=not self.mirrored,
        )

    def placed(self, origin: Cell) -> frozenset[Cell]:
        """Cells in the global frame when the entry rectangle's lower cell is ``origin``."""
        return frozenset(Cell(c.x + origin.x, c.y + origin.y) for c in self.cells)

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "mirrored": self.mirrored,
            "cells": len(self.cells),
            "exit_rect": [list(c) for c in self.exit_rect],
            "opt_steps": self.opt_steps,
            "forced_alg_steps": self.forced_alg_steps,
        }


@dataclass(frozen=True)
class Trigger:
    """Fires on the first visit of ``cell`` (canonical local frame)."""

    cell: Cell
    goto: str | None = None
    commit: str | None = None
    mirror: bool | None = None


@dataclass(frozen=True)
class Stage:
    name: str
    candidates: tuple[str, ...]
    triggers: tuple[Trigger, ...]
    note: str = ""

    def trigger_at(self, cell: Cell) -> Trigger | None:
        for t in self.triggers:
            if t.cell == cell:
                return t
        return None


@dataclass(frozen=True)
class DecisionTree:
    root: str
    stages: dict

    def __getitem__(self, name: str) -> Stage:
        return self.stages[name]


@dataclass(frozen=True)
class BlockLibrary:
    blocks: dict
    tree: DecisionTree

    def __len__(self) -> int:
        return len(self.blocks)

    def __getitem__(self, kind: str) -> Block:
        return self.blocks[kind]

    def variant(self, kind: str, mirrored: bool) -> Block:
        block = self.blocks[kind]
        return _mirrored_variant(block) if mirrored else block

    def variants(self) -> list[Block]:
        """All blocks together with their horizontal mirror images."""
        return [self.variant(k, m) for k in self.blocks for m in (False, True)]


_MIRROR_CACHE: dict[Block, Block] = {}


def _mirrored_variant(block: Block) -> Block:
    out = _MIRROR_CACHE.get(block)
    if out is None:
        out = _MIRROR_CACHE[block] = block.mirror()
    return out


def _validate_block(block: Block) -> None:
    kind = block.kind
    if set(block.entry_rect) - block.cells or set(block.exit_rect) - block.cells:
        raise BlockValidationError(f"block {kind}: a rectangle cell is not free")
    lo, hi = block.exit_rect
    if lo.x != hi.x or hi.y != lo.y + 1 or lo.x <= 0:
        raise BlockValidationError(f"block {kind}: exit rectangle is not a vertical pair")
    if any(c.x < 0 or c.x > lo.x for c in block.cells):
        raise BlockValidationError(f"block {kind}: cells outside columns 0..{lo.x}")
    for column, rect in ((0, block.entry_rect), (lo.x, block.exit_rect)):
        if {c for c in block.cells if c.x == column} != set(rect):
            raise BlockValidationError(f"block {kind}: column {column} holds more than its rectangle")
    tour = optimal_tour(block.geometry)
    if tour.length != block.opt_steps:
        raise BlockValidationError(
            f"block {kind}: recorded optimum {block.opt_steps}, computed {tour.length}"
        )
    if block.forced_alg_steps <= block.opt_steps:
        raise BlockValidationError(f"block {kind}: forced step count must exceed the optimum")


def _read_data(name: str) -> str:
    return resources.files("gridpoly").joinpath("data", "blocks", name).read_text()


def _parse_block_text(kind: str, text: str) -> GridPolygon:
    cells, starts = parse_cells(text)
    if len(starts) != 1:
        raise BlockValidationError(f"block {kind}: expected exactly one 'S'")
    s = starts[0]
    dx, dy = LOCAL_START.x - s.x, LOCAL_START.y - s.y
    moved = {Cell(c.x + dx, c.y + dy) for c in cells}
    result = validate_simple(moved, LOCAL_START)
    if not isinstance(result, GridPolygon):
        raise BlockValidationError(f"block {kind}: {result.violation} ({result.message})")
    return result


def load_block_library(meta: dict | None = None, texts: dict | None = None) -> BlockLibrary:
    """Load and validate the shipped block library.

    ``meta`` and ``texts`` (kind -> ASCII) override the packaged data, which
    is how tests feed deliberately broken libraries.
    """
    meta = json.loads(_read_data("library.json")) if meta is None else meta
    if meta.get("schema") != "gridpoly.blocks/1":
        raise BlockValidationError(f"unknown library schema {meta.get('schema')!r}")
    blocks = {}
    for kind, info in meta["blocks"].items():
        text = texts[kind] if texts and kind in texts else _read_data(info["file"])
        block = Block(
            kind=kind,
            geometry=_parse_block_text(kind, text),
            exit_rect=_pair(info["exit_rect"]),
            opt_steps=int(info["opt_steps"]),
            forced_alg_steps=int(info["forced_alg_steps"]),
            trigger=tuple(info.get("trigger", ())),
        )
        _validate_block(block)
        blocks[kind] = block
    stages = {}
    for name, st in meta["tree"]["stages"].items():
        triggers = tuple(
            Trigger(Cell(*t["cell"]), t.get("goto"), t.get("commit"), t.get("mirror"))
            for t in st["on_first_visit"]
        )
        stages[name] = Stage(name, tuple(st["candidates"]), triggers, st.get("note", ""))
    tree = DecisionTree(meta["tree"]["root"], stages)
    for st in stages.values():
        for t in st.triggers:
            if (t.goto is None) == (t.commit is None):
                raise BlockValidationError(f"stage {st.name}: trigger needs exactly one of goto/commit")
            if t.goto is not None and t.goto not in stages:
                raise BlockValidationError(f"stage {st.name}: unknown stage {t.goto}")
            if t.commit is not None and t.commit not in st.candidates:
                raise BlockValidationError(f"stage {st.name}: commits non-candidate {t.commit}")
        unknown = set(st.candidates) - set(blocks)
        if unknown:
            raise BlockValidationError(f"stage {st.name}: unknown blocks {sorted(unknown)}")
    return BlockLibrary(blocks, tree)


_LIBRARY: BlockLibrary | None = None


def default_library() -> BlockLibrary:
    """The shipped library, loaded once."""
    global _LIBRARY
    if _LIBRARY is None:
        _LIBRARY = load_block_library()
    return _LIBRARY


# ---------------------------------------------------------------------------
# one round of the decision tree, shared by the environment and the verifiers


@dataclass(frozen=True)
class RoundState:
    """Decision-tree position of one round.  ``mirrored`` is None until known."""

    stage: str
    mirrored: bool | None = None
    committed: str | None = None

    def variants(self, library: BlockLibrary) -> list[Block]:
        if self.committed is not None:
            return [library.variant(self.committed, bool(self.mirrored))]
        kinds = library.tree[self.stage].candidates
        orientations = (False, True) if self.mirrored is None else (self.mirrored,)
        return [library.variant(k, m) for k in kinds for m in orientations]

    def canonical(self, local: Cell) -> Cell:
        return _mirror_cell(local) if self.mirrored else local

    def visit(self, library: BlockLibrary, local: Cell) -> "RoundState":
        """State after the first visit of ``local`` (a cell of this round)."""
        if self.committed is not None:
            return self
        trig = library.tree[self.stage].trigger_at(self.canonical(local))
        if trig is None:
            return self
        mirrored = self.mirrored
        if trig.mirror is not None:
            if mirrored is not None:
                raise ConsistencyViolation(f"orientation fixed twice in stage {self.stage}")
            mirrored = trig.mirror
        if trig.commit is not None:
            if mirrored is None:
                raise ConsistencyViolation(f"commit of {trig.commit} before the orientation is known")
            return RoundState(self.stage, mirrored, trig.commit)
        return RoundState(trig.goto, mirrored, None)

    def status(self, library: BlockLibrary, local: Cell) -> Status | None:
        """Status shared by all live variants, or None if they disagree."""
        seen = {local in b.cells for b in self.variants(library)}
        if len(seen) != 1:
            return None
        return FREE if seen.pop() else BLOCKED


# ---------------------------------------------------------------------------
# the environment


@dataclass
class _Round:
    origin: Cell
    state: RoundState

    def local(self, cell: Cell) -> Cell:
        return Cell(cell.x - self.origin.x, cell.y - self.origin.y)


@dataclass
class AdversaryEnvironment:
    """Lazily committed polygon made of ``n_blocks`` blocks.

    Implements the environment protocol of :func:`gridpoly.explore.run_strategy`.
    """

    library: BlockLibrary
    n_blocks: int
    start: Cell = LOCAL_START
    committed: dict = field(default_factory=dict)
    rounds: list = field(default_factory=list)
    visited: set = field(default_factory=set)
    events: list = field(default_factory=list)

    def __post_init__(self):
        if self.n_blocks < 1:
            raise ValueError("at least one block is needed")
        self.rounds = [_Round(Cell(0, 0), RoundState(self.library.tree.root))]

    # -- bookkeeping -------------------------------------------------------
    def _owner(self, cell: Cell) -> _Round | None:
        owner = None
        for r in self.rounds:
            if r.origin.x <= cell.x:
                owner = r
        return owner

    @property
    def decision_state(self) -> list[RoundState]:
        return [r.state for r in self.rounds]

    @property
    def finalized_blocks(self) -> list[Block]:
        return [
            self.library.variant(r.state.committed, bool(r.state.mirrored))
            for r in self.rounds
            if r.state.committed is not None
        ]

    @property
    def origins(self) -> list[Cell]:
        return [r.origin for r in self.rounds if r.state.committed is not None]

    def _visit(self, cell: Cell) -> None:
        r = self._owner(cell)
        if r is None:
            raise ConsistencyViolation(f"visit of {cell} outside every round")
        before = r.state
        r.state = before.visit(self.library, r.local(cell))
        if r.state is before:
            return
        if r.state.committed is not None:
            block = self.library.variant(r.state.committed, bool(r.state.mirrored))
            self.events.append({"round": len(self.rounds), "cell": list(cell), "commit": block.id})
            if len(self.rounds) < self.n_blocks:
                lo = block.exit_rect[0]
                self.rounds.append(
                    _Round(Cell(r.origin.x + lo.x, r.origin.y + lo.y), RoundState(self.library.tree.root))
                )
        else:
            self.events.append({"round": len(self.rounds), "cell": list(cell), "stage": r.state.stage})

    def status(self, cell: Cell) -> Status:
        r = self._owner(cell)
        if r is None:
            st = BLOCKED
        else:
            st = r.state.status(self.library, r.local(cell))
            if st is None:
                raise ConsistencyViolation(
                    f"live blocks disagree on {cell} in stage {r.state.stage}"
                )
        old = self.committed.get(cell)
        if old is not None and old is not st:
            raise ConsistencyViolation(f"status of {cell} changed from {old.name} to {st.name}")
        self.committed[cell] = st
        return st

    # -- environment protocol ---------------------------------------------
    def sense(self, pos: Cell) -> SensorReading:
        pos = Cell(*pos)
        if self.status(pos) is not FREE:
            raise ConsistencyViolation(f"agent stands on non-free cell {pos}")
        if pos not in self.visited:
            self.visited.add(pos)
            self._visit(pos)
        return SensorReading(*(self.status(n) for n in pos.neighbours4()))

    def all_committed(self) -> bool:
        return len(self.rounds) == self.n_blocks and all(
            r.state.committed is not None for r in self.rounds
        )

    def polygon(self) -> GridPolygon:
        """The committed polygon; only meaningful once every round is committed."""
        return merge_chain(self.finalized_blocks).merged_polygon

    def explored(self, visited: set[Cell]) -> bool:
        if not self.all_committed():
            return False
        cells = set()
        for block, origin in zip(self.finalized_blocks, self.origins):
            cells |= block.placed(origin)
        return visited >= cells


# ---------------------------------------------------------------------------
# chains


@dataclass(frozen=True)
class ChainInstance:
    blocks: tuple[Block, ...]
    origins: tuple[Cell, ...]
    merged_polygon: GridPolygon
    opt_steps: int
    tour: OptimalTour

    @property
    def kinds(self) -> list[str]:
        return [b.id for b in self.blocks]


def chain_origins(blocks: Sequence[Block]) -> list[Cell]:
    origins = [Cell(0, 0)]
    for b in blocks[:-1]:
        lo = b.exit_rect[0]
        o = origins[-1]
        origins.append(Cell(o.x + lo.x, o.y + lo.y))
    return origins


def _block_cycle(block: Block) -> list[Cell]:
    cycle = _CYCLE_CACHE.get(block)
    if cycle is None:
        cycle = hamiltonian_cycle(block.geometry)
        if cycle is None:
            raise IncompatibleJunction(f"block {block.id} has no Hamiltonian cycle to splice")
        _CYCLE_CACHE[block] = cycle
    return cycle


_CYCLE_CACHE: dict[Block, list[Cell]] = {}


def spliced_cycle(blocks: Sequence[Block], origins: Sequence[Cell]) -> list[Cell]:
    """Join the blocks' Hamiltonian cycles into one cycle of the merged chain.

    At every junction both cycles use the rectangle edge; dropping it once
    and keeping the four edges into the two neighbouring columns yields a
    single cycle through every cell.
    """
    adj: dict[Cell, set[Cell]] = {}
    for block, o in zip(blocks, origins):
        cyc = [Cell(c.x + o.x, c.y + o.y) for c in _block_cycle(block)]
        for a, b in zip(cyc, cyc[1:]):
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
    for o in origins[1:]:
        u, w = o, Cell(o.x, o.y + 1)
        adj[u].discard(w)
        adj[w].discard(u)
    start = LOCAL_START
    path = [start]
    prev, cur = None, start
    while True:
        nbrs = sorted(adj[cur] - ({prev} if prev is not None else set()))
        if len(adj[cur]) != 2:
            raise IncompatibleJunction(f"cell {cur} has degree {len(adj[cur])} after splicing")
        nxt = nbrs[0]
        path.append(nxt)
        if nxt == start:
            break
        prev, cur = cur, nxt
        if len(path) > len(adj) + 1:
            raise IncompatibleJunction("splice did not close into one cycle")
    return path


def merge_chain(blocks: Sequence[Block], certify: bool = True) -> ChainInstance:
    """Place ``blocks`` left to right, overlapping each exit with the next entry."""
    blocks = tuple(blocks)
    if not blocks:
        raise ValueError("empty chain")
    origins = chain_origins(blocks)
    cells: set[Cell] = set()
    total = 0
    for block, o in zip(blocks, origins):
        placed = block.placed(o)
        shared = cells & placed
        if cells and shared != {o, Cell(o.x, o.y + 1)}:
            raise IncompatibleJunction(f"block {block.id} at {o} overlaps {len(shared)} cells")
        cells |= placed
        total += len(placed)
    if len(cells) != total - 2 * (len(blocks) - 1):
        raise IncompatibleJunction("cell accounting failed")
    polygon = polygon_from_cells(cells, LOCAL_START)
    if certify:
        cycle = spliced_cycle(blocks, origins)
        if not is_hamiltonian_cycle(polygon, cycle):
            raise IncompatibleJunction("spliced cycle is not Hamiltonian")
        tour = OptimalTour(len(cycle) - 1, tuple(cycle), HAMILTONIAN)
    else:
        tour = OptimalTour(len(polygon), (), "UNCERTIFIED")
    closed_form = sum(b.opt_steps for b in blocks) - 2 * (len(blocks) - 1)
    if certify and tour.length != closed_form:
        raise IncompatibleJunction(
            f"certified optimum {tour.length} differs from the merge formula {closed_form}"
        )
    return ChainInstance(blocks, tuple(origins), polygon, tour.length, tour)


# ---------------------------------------------------------------------------
# running a strategy against the adversary


@dataclass(frozen=True)
class AdversaryResult:
    transcript: Transcript
    polygon: GridPolygon
    tour: OptimalTour
    ratio: Fraction
    chain: ChainInstance
    events: tuple = ()

    def __iter__(self) -> Iterator:
        return iter((self.transcript, self.polygon, self.tour, self.ratio))

    @property
    def blocks(self) -> list[str]:
        return self.chain.kinds

    def report(self) -> dict:
        r = self.ratio
        return {
            "schema": REPORT_SCHEMA,
            "strategy": self.transcript.strategy,
            "blocks": self.blocks,
            "n_blocks": len(self.blocks),
            "steps": self.transcript.steps,
            "optimal": self.tour.length,
            "certificate": self.tour.certificate,
            "ratio": f"{r.numerator}/{r.denominator}",
            "ratio_approx": round(float(r), 6),
            "ratio_limit": _frac(ratio_limit(len(self.blocks))),
            "events": list(self.events),
        }


def _frac(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def adversary_run(
    strategy, n: int, library: BlockLibrary | None = None, step_limit: int | None = None
) -> AdversaryResult:
    """Let ``strategy`` explore an ``n``-block adversary polygon."""
    library = library or default_library()
    env = AdversaryEnvironment(library, n)
    limit = step_limit if step_limit is not None else 200 * n + 100
    try:
        transcript = run_strategy(env, strategy, step_limit=limit, polygon_id=f"adversary-{n}")
    except ExplorationError as exc:
        if isinstance(exc, ConsistencyViolation):
            raise
        raise StrategyIncomplete(str(exc)) from exc
    chain = merge_chain(env.finalized_blocks)
    if chain.origins != tuple(env.origins):
        raise ConsistencyViolation("environment placement differs from the chain placement")
    replay(chain.merged_polygon, transcript)  # every reading must match the final polygon
    _check_readings(env, chain.merged_polygon)
    ratio = competitive_ratio(transcript.steps, chain.opt_steps)
    return AdversaryResult(transcript, chain.merged_polygon, chain.tour, ratio, chain, tuple(env.events))


def _check_readings(env: AdversaryEnvironment, polygon: GridPolygon) -> None:
    for cell, st in env.committed.items():
        if (cell in polygon.free_cells) != (st is FREE):
            raise ConsistencyViolation(f"revealed status of {cell} contradicts the final polygon")


# ---------------------------------------------------------------------------
# exhaustive verification of one round


_START_SITUATIONS = (
    (Cell(0, 1), frozenset({Cell(0, 1)})),
    (Cell(0, 0), frozenset({Cell(0, 0)})),
    (Cell(0, 1), frozenset(ENTRY_RECT)),
    (Cell(0, 0), frozenset(ENTRY_RECT)),
)


def _moves(library: BlockLibrary, st: RoundState, pos: Cell, seq) -> list[Cell]:
    out = []
    for n in pos.neighbours4():
        status = st.status(library, n)
        if status is None:
            raise UncoveredBehaviour(f"ambiguous status of {n} in stage {st.stage}", seq)
        if status is FREE:
            out.append(n)
    return out


def _path(parents: dict, key) -> list[Cell]:
    out = []
    while key is not None:
        out.append(key[0])
        key = parents[key]
    return out[::-1]


@dataclass(frozen=True)
class TotalityReport:
    states: int
    commits: dict
    start_situations: dict
    passed: bool = True

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "check": "decision_tree_totality",
            "pass": self.passed,
            "states": self.states,
            "commits": self.commits,
            "start_situations": self.start_situations,
        }


def verify_decision_tree_totality(library: BlockLibrary | None = None) -> TotalityReport:
    """Walk every pre-commitment state of one round, from all four start situations.

    Checks that (1) every sensed status is shared by all live candidates,
    (2) every live candidate contains every pending trigger cell and none is
    already visited, so exploration cannot finish without a commitment, and
    (3) every block kind, in both orientations, can be committed.
    """
    library = library or default_library()
    root = RoundState(library.tree.root)
    commits: dict[str, int] = {}
    situations: dict[str, list[str]] = {}
    seen = set()
    for pos, visited in _START_SITUATIONS:
        label = f"at {tuple(pos)}, visited {sorted(tuple(c) for c in visited)}"
        reached = set()
        key = (pos, visited, root)
        parents = {key: None}
        queue = deque([key])
        while queue:
            key = queue.popleft()
            pos_, vis, st = key
            seen.add(key)
            seq = _path(parents, key)
            stage = library.tree[st.stage]
            for t in stage.triggers:
                cell = _mirror_cell(t.cell) if st.mirrored else t.cell
                if cell in vis:
                    raise UncoveredBehaviour(f"trigger {tuple(t.cell)} of stage {st.stage} already visited", seq)
                if any(cell not in b.cells for b in st.variants(library)):
                    raise UncoveredBehaviour(f"trigger {tuple(t.cell)} missing from a live block", seq)
            for b in st.variants(library):
                for c in vis:
                    if c not in b.cells:
                        raise UncoveredBehaviour(f"visited {c} not in live block {b.id}", seq)
            for n in _moves(library, st, pos_, seq):
                nst = st if n in vis else st.visit(library, n)
                if nst.committed is not None:
                    block = library.variant(nst.committed, bool(nst.mirrored))
                    if nst.committed not in stage.candidates:
                        raise UncoveredBehaviour(f"committed {block.id} was not live", seq + [n])
                    for c in vis | {n}:
                        for m in c.neighbours4():
                            if st.status(library, m) is not None and (m in block.cells) != (
                                st.status(library, m) is FREE
                            ):
                                raise UncoveredBehaviour(f"commit of {block.id} contradicts {m}", seq + [n])
                    commits[block.id] = commits.get(block.id, 0) + 1
                    reached.add(block.id)
                    continue
                nkey = (n, vis | {n}, nst)
                if nkey not in parents:
                    parents[nkey] = key
                    queue.append(nkey)
        situations[label] = sorted(reached)
    missing = {b.id for b in library.variants()} - set(commits)
    if missing:
        raise UncoveredBehaviour(f"blocks never committed: {sorted(missing)}")
    return TotalityReport(len(seen), dict(sorted(commits.items())), situations)


@dataclass(frozen=True)
class DetourReport:
    block: str
    opt_steps: int
    required: int
    min_total: int
    witness: tuple[Cell, ...]
    per_trigger: dict
    prefixes: int

    @property
    def passed(self) -> bool:
        return self.min_total >= self.required

    @property
    def forced_extra(self) -> int:
        return self.min_total - self.opt_steps

    def to_dict(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "check": "forced_detour",
            "block": self.block,
            "opt_steps": self.opt_steps,
            "required": self.required,
            "min_total": self.min_total,
            "pass": self.passed,
            "witness": [list(c) for c in self.witness],
            "per_trigger": self.per_trigger,
            "prefixes": self.prefixes,
        }


def verify_block_forced_detour(
    block: Block | str, library: BlockLibrary | None = None, strict: bool = True
) -> DetourReport:
    """Fewest total steps of any exploration of a standalone block that the
    decision tree resolves to this block kind.

    Breadth-first search enumerates every pre-commitment state reachable
    from the start ``(0,1)`` with its shortest prefix; each move that commits
    the block is completed optimally on the committed polygon (both
    orientations).  With ``strict`` a result below ``forced_alg_steps``
    raises :class:`DetourViolation`.
    """
    library = library or default_library()
    kind = block if isinstance(block, str) else block.kind
    canon = library[kind]
    root = RoundState(library.tree.root)
    start = LOCAL_START
    key0 = (start, frozenset({start}), root)
    dist = {key0: 0}
    parents = {key0: None}
    queue = deque([key0])
    best = None
    witness: list[Cell] = []
    per_trigger: dict[str, int] = {}
    polys = {m: library.variant(kind, m).geometry.with_start(start) for m in (False, True)}
    while queue:
        key = queue.popleft()
        pos, vis, st = key
        g = dist[key]
        seq = _path(parents, key)
        for n in _moves(library, st, pos, seq):
            nst = st if n in vis else st.visit(library, n)
            if nst.committed is not None:
                if nst.committed != kind:
                    continue
                total = g + 1 + min_completion_state(polys[bool(nst.mirrored)], n, vis | {n})
                label = f"{'mirrored ' if nst.mirrored else ''}{st.stage}:{tuple(st.canonical(n))}"
                per_trigger[label] = min(per_trigger.get(label, total), total)
                if best is None or total < best:
                    best, witness = total, seq + [n]
                continue
            nkey = (n, vis | {n}, nst)
            if nkey not in dist:
                dist[nkey] = g + 1
                parents[nkey] = key
                queue.append(nkey)
    if best is None:
        raise UncoveredBehaviour(f"block {kind} is never committed")
    report = DetourReport(
        block=kind,
        opt_steps=canon.opt_steps,
        required=canon.forced_alg_steps,
        min_total=best,
        witness=tuple(witness),
        per_trigger=dict(sorted(per_trigger.items())),
        prefixes=len(dist),
    )
    if strict and not report.passed:
        raise DetourViolation(report)
    return report


# ---------------------------------------------------------------------------
# asymptotics


def ratio_limit(n: int) -> Fraction:
    """Ratio forced on a chain of ``n`` blocks when every block is of kind (i)."""
    if n < 1:
        raise ValueError("n must be at least 1")
    return Fraction(28 + 26 * (n - 1), 24 + 22 * (n - 1))


def blocks_needed(epsilon, additive=0) -> int:
    """Smallest ``n`` with ``ratio_limit(n) > 13/11 - epsilon`` whose optimum
    also swamps the additive constant: ``A / opt(n) < epsilon / 2``."""
    eps = Fraction(epsilon)
    a = Fraction(additive)
    if not 0 < eps < LIMIT_RATIO - 1:
        raise ValueError("epsilon must lie strictly between 0 and 2/11")
    if a < 0:
        raise ValueError("additive constant must be nonnegative")

    def ok(n: int) -> bool:
        return ratio_limit(n) > LIMIT_RATIO - eps and a / (24 + 22 * (n - 1)) < eps / 2

    # 13/11 - ratio_limit(n) = 4 / (11 (22 n + 2)); solve both inequalities for n
    bound = max(Fraction(4) / (11 * eps), 2 * a / eps)
    n = max(1, (bound - 2) // 22 + 1)
    n = int(n)
    while n > 1 and ok(n - 1):
        n -= 1
    while not ok(n):
        n += 1
    return n


# ---------------------------------------------------------------------------
# a scripted strategy that makes the adversary commit one chosen kind


class ScriptedStrategy:
    """Replays a fixed walk; halts at its end."""

    def __init__(self, walk: Sequence[Cell], name: str = "scripted"):
        self.walk = [Cell(*c) for c in walk]
        self.name = name

    def decide(self, kmap: KnowledgeMap, pos: Cell, history: Sequence[Cell]):
        i = len(history)
        if list(history) != self.walk[:i]:
            raise ExplorationError("the environment diverged from the script")
        if i == len(self.walk):
            return HALT
        return Move.between(pos, self.walk[i])


@dataclass(frozen=True)
class _Level:
    """Cheapest walks for the last ``k`` blocks of an all-``kind`` chain.

    ``walks[(both, end)]`` starts on the entry rectangle's upper cell (the
    lower one already visited iff ``both``), commits the kind in canonical
    orientation in every round, covers everything and stops on entry cell
    ``end``.  Cells are local to the level's own round.
    """

    k: int
    walks: dict


def _block_walks(block: Block, library: BlockLibrary, inner: _Level | None) -> dict:
    cells = sorted(block.cells)
    index = {c: i for i, c in enumerate(cells)}
    nbrs = [[index[n] for n in c.neighbours4() if n in index] for c in cells]
    full = (1 << len(cells)) - 1
    lo, hi = block.exit_rect
    ilo, ihi = index[lo], index[hi]
    dist = []
    for src in range(len(cells)):
        d = [-1] * len(cells)
        d[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in nbrs[u]:
                if d[v] < 0:
                    d[v] = d[u] + 1
                    queue.append(v)
        dist.append(d)

    out = {}
    for both in (False, True):
        # phase 1: every pre-commitment prefix, breadth first
        start_vis = frozenset(ENTRY_RECT) if both else frozenset({LOCAL_START})
        key0 = (LOCAL_START, start_vis, RoundState(library.tree.root))
        prefix_parent = {key0: None}
        queue = deque([key0])
        commits = {}
        while queue:
            key = queue.popleft()
            pos, vis, st = key
            for n in _moves(library, st, pos, ()):
                nst = st if n in vis else st.visit(library, n)
                if nst.mirrored:
                    continue
                if nst.committed is not None:
                    if nst.committed == block.kind:
                        mask = 0
                        for c in vis | {n}:
                            mask |= 1 << index[c]
                        walk = _path(prefix_parent, key) + [n]
                        state = (index[n], mask, inner is None)
                        if state not in commits or len(walk) < len(commits[state]):
                            commits[state] = walk
                    continue
                nkey = (n, vis | {n}, nst)
                if nkey not in prefix_parent:
                    prefix_parent[nkey] = key
                    queue.append(nkey)

        # phase 2: exact completion on the committed block, with the
        # excursion to the right as a weighted edge out of the upper exit cell
        for end in ENTRY_RECT:
            ie = index[end]

            r_min = min(len(w) - 1 for w in inner.walks.values()) if inner else 0
            back = min(dist[ilo][ie], dist[ihi][ie])

            def h(u: int, mask: int, used: bool) -> int:
                unv = full & ~mask
                if used:
                    best = max(bin(unv).count("1"), dist[u][ie])
                    m = unv
                    while m:
                        low = m & -m
                        v = low.bit_length() - 1
                        m ^= low
                        t = dist[u][v] + dist[v][ie]
                        if t > best:
                            best = t
                    return best
                # the excursion (at least r_min steps) is still ahead
                unv &= ~((1 << ilo) | (1 << ihi))
                best = max(bin(unv).count("1") + r_min, dist[u][ihi] + r_min + back)
                m = unv
                while m:
                    low = m & -m
                    v = low.bit_length() - 1
                    m ^= low
                    before = dist[u][v] + dist[v][ihi] + back
                    after = dist[u][ihi] + min(dist[ilo][v], dist[ihi][v]) + dist[v][ie]
                    t = r_min + min(before, after)
                    if t > best:
                        best = t
                return best

            g = {}
            parent = {}
            heap = []
            counter = 0
            for state, walk in commits.items():
                g0 = len(walk) - 1
                if g0 < g.get(state, 1 << 30):
                    g[state] = g0
                    parent[state] = None
                    heapq.heappush(heap, (g0 + h(*state), counter, state))
                    counter += 1
            goal = None
            while heap:
                f, _, state = heapq.heappop(heap)
                u, mask, used = state
                d = g[state]
                if d + h(u, mask, used) < f:
                    continue
                if mask == full and used and u == ie:
                    goal = state
                    break
                edges = [((v, mask | (1 << v), used), 1, None) for v in nbrs[u]]
                if not used and u == ihi:
                    nb = bool((mask >> ilo) & 1)
                    nmask = mask | (1 << ilo) | (1 << ihi)
                    for end_local, landing in ((Cell(0, 0), ilo), (Cell(0, 1), ihi)):
                        sub = inner.walks[(nb, end_local)]
                        edges.append(((landing, nmask, True), len(sub) - 1, (nb, end_local)))
                for nstate, w, label in edges:
                    nd = d + w
                    if nd < g.get(nstate, 1 << 30):
                        g[nstate] = nd
                        parent[nstate] = (state, label)
                        heapq.heappush(heap, (nd + h(*nstate), counter, nstate))
                        counter += 1
            if goal is None:
                raise UncoveredBehaviour(f"no walk for block {block.id} ending at {end}")
            tail: list[Cell] = []
            state = goal
            while parent[state] is not None:
                prev, label = parent[state]
                if label is None:
                    tail.append(cells[state[0]])
                else:
                    sub = inner.walks[label]
                    tail.extend(Cell(c.x + lo.x, c.y + lo.y) for c in reversed(sub[1:]))
                state = prev
            out[(both, end)] = commits[state] + tail[::-1]
    return out


def triggering_walk(n: int, kind: str = "i", library: BlockLibrary | None = None) -> list[Cell]:
    """Shortest closed walk over an ``n``-block adversary run that commits
    ``kind`` (canonical orientation) in every round.

    Dynamic programming from the last block backwards: each block is solved
    by exact search over (position, visited cells, decision-tree state),
    where the part of the chain to its right is a single precomputed
    excursion entered once through the upper exit cell.
    """
    library = library or default_library()
    block = library[kind]
    level = None
    for k in range(1, n + 1):
        level = _Level(k, _block_walks(block, library, level))
    return level.walks[(False, LOCAL_START)]


def triggering_strategy(n: int, kind: str = "i", library: BlockLibrary | None = None) -> ScriptedStrategy:
    return ScriptedStrategy(triggering_walk(n, kind, library), name=f"scripted-{kind}")
