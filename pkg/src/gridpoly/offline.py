"""Exact optimal closed exploration tours.

Two certificates are offered: a Hamiltonian cycle through the start (the
tour length then equals the number of cells, which is a lower bound for
every closed covering walk), or an exact best-first search over
``(position, visited-set)`` states.
"""

from __future__ import annotations

import heapq
import os
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .grid import Cell, GridPolygon

DEFAULT_EXACT_THRESHOLD = 26
HAMILTONIAN = "HAMILTONIAN"
EXACT_SEARCH = "EXACT_SEARCH"

# Move order used for every tie-break: north, east, south, west.
MOVE_ORDER = ((0, 1), (1, 0), (0, -1), (-1, 0))


class BudgetExceeded(RuntimeError):
    """The Hamiltonian search ran out of node budget before deciding."""


class InstanceTooLarge(ValueError):
    """No certificate applies to an instance of this size."""


def exact_threshold() -> int:
    value = os.environ.get("GRIDPOLY_EXACT_THRESHOLD")
    return int(value) if value else DEFAULT_EXACT_THRESHOLD


@dataclass(frozen=True)
class OptimalTour:
    length: int
    path: tuple[Cell, ...]
    certificate: str

    def to_dict(self) -> dict:
        return {
            "length": self.length,
            "certificate": self.certificate,
            "path": [list(c) for c in self.path],
        }


class _Graph:
    """Index-based adjacency of a polygon, with neighbour lists in move order."""

    def __init__(self, polygon: GridPolygon):
        self.polygon = polygon
        self.cells = polygon.cells
        self.n = len(self.cells)
        index = {c: i for i, c in enumerate(self.cells)}
        self.index = index
        self.nbrs: list[list[int]] = []
        self.nbr_mask: list[int] = []
        for c in self.cells:
            ns = [index[n] for n in (Cell(c.x + dx, c.y + dy) for dx, dy in MOVE_ORDER) if n in index]
            self.nbrs.append(ns)
            m = 0
            for j in ns:
                m |= 1 << j
            self.nbr_mask.append(m)
        self.colour_mask = 0
        for i, c in enumerate(self.cells):
            if (c.x + c.y) % 2 == 0:
                self.colour_mask |= 1 << i
        self.full = (1 << self.n) - 1
        self._dist = None

    @property
    def dist(self) -> list[list[int]]:
        if self._dist is None:
            self._dist = [self._bfs(i) for i in range(self.n)]
        return self._dist

    def _bfs(self, src: int) -> list[int]:
        d = [-1] * self.n
        d[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in self.nbrs[u]:
                if d[v] < 0:
                    d[v] = d[u] + 1
                    queue.append(v)
        return d

    def reach(self, seed_mask: int, allowed: int) -> int:
        reach = seed_mask
        frontier = seed_mask
        while frontier:
            grow = 0
            m = frontier
            while m:
                low = m & -m
                grow |= self.nbr_mask[low.bit_length() - 1]
                m ^= low
            frontier = grow & allowed & ~reach
            reach |= frontier
        return reach


def _popcount(x: int) -> int:
    return bin(x).count("1")


def hamiltonian_cycle(polygon: GridPolygon, budget: int = 2_000_000) -> list[Cell] | None:
    """Hamiltonian cycle through the start, as a closed cell list, or None.

    Depth-first search in north/east/south/west order with colour-balance,
    degree, forced-edge and connectivity pruning, so the first cycle found
    is the lexicographically smallest one.  Raises BudgetExceeded when more
    than ``budget`` nodes are expanded.
    """
    g = _Graph(polygon)
    n = g.n
    s = g.index[polygon.start]
    if n == 1:
        return None
    if n == 2:
        return [polygon.start, g.cells[1 - s], polygon.start]
    if n % 2 or _popcount(g.colour_mask) * 2 != n:
        return None
    if any(len(ns) < 2 for ns in g.nbrs):
        return None
    nodes = 0
    path = [s]
    start_bit = 1 << s

    def avail(v: int, unv: int, head: int) -> int:
        return _popcount(g.nbr_mask[v] & (unv | (1 << head) | start_bit))

    def dfs(head: int, unv: int) -> bool:
        nonlocal nodes
        nodes += 1
        if nodes > budget:
            raise BudgetExceeded(f"more than {budget} search nodes")
        if not unv:
            return bool(g.nbr_mask[head] & start_bit)
        if not g.nbr_mask[s] & unv:
            return False
        # colour balance of the remaining path head -> unv -> start
        k = _popcount(unv)
        head_col = (g.colour_mask >> head) & 1
        same = _popcount(unv & (g.colour_mask if head_col else ~g.colour_mask & g.full))
        if same != k // 2:
            return False
        forced = -1
        for v in g.nbrs[head]:
            if not (unv >> v) & 1:
                continue
            a = avail(v, unv, head)
            if a < 2:
                return False
            if a == 2 and head != s:
                if forced >= 0:
                    return False
                forced = v
        if g.reach(g.nbr_mask[head] & unv, unv) != unv:
            return False
        candidates = [forced] if forced >= 0 else [v for v in g.nbrs[head] if (unv >> v) & 1]
        for v in candidates:
            new_unv = unv & ~(1 << v)
            ok = True
            for w in g.nbrs[head]:
                if (new_unv >> w) & 1 and avail(w, new_unv, v) < 2:
                    ok = False
                    break
            if not ok:
                continue
            path.append(v)
            if dfs(v, new_unv):
                return True
            path.pop()
        return False

    import sys

    limit = sys.getrecursionlimit()
    if limit < n + 100:
        sys.setrecursionlimit(n + 100)
    try:
        found = dfs(s, g.full & ~start_bit)
    finally:
        sys.setrecursionlimit(limit)
    if not found:
        return None
    return [g.cells[i] for i in path] + [polygon.start]


def is_hamiltonian_cycle(polygon: GridPolygon, path: Sequence[Cell]) -> bool:
    """Check a closed cell list is a Hamiltonian cycle through the start."""
    if len(path) != len(polygon) + 1 or path[0] != polygon.start or path[-1] != polygon.start:
        return False
    if set(path[:-1]) != set(polygon.free_cells) or len(set(path[:-1])) != len(polygon):
        return False
    return is_closed_walk(polygon, path)


def is_closed_walk(polygon: GridPolygon, path: Sequence[Cell]) -> bool:
    if not path or path[0] != path[-1]:
        return False
    for a, b in zip(path, path[1:]):
        if b not in polygon.free_cells or abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
            return False
    return True


class _Search:
    """Exact search for the shortest walk from a state that visits every
    cell and ends at the start."""

    def __init__(self, polygon: GridPolygon):
        self.g = _Graph(polygon)
        self.s = self.g.index[polygon.start]
        self.dist = self.g.dist
        self._bound: dict[tuple[int, int], int] = {}

    def h(self, pos: int, visited: int) -> int:
        g = self.g
        unv = g.full & ~visited
        d = self.dist
        s = self.s
        if not unv:
            return d[pos][s]
        k = _popcount(unv)
        lb = k if (unv >> s) & 1 else k + 1
        dp = d[pos]
        ds = d[s]
        m = unv
        while m:
            low = m & -m
            u = low.bit_length() - 1
            m ^= low
            t = dp[u] + ds[u]
            if t > lb:
                lb = t
        # the remaining length has the parity of the colour difference
        parity = (((g.colour_mask >> pos) ^ (g.colour_mask >> s)) & 1)
        if lb % 2 != parity:
            lb += 1
        return lb

    def cost(self, pos: int, visited: int) -> int:
        """Minimal remaining steps, by A*."""
        g = self.g
        full = g.full
        s = self.s
        start = (pos, visited)
        best = {start: 0}
        heap = [(self.h(pos, visited), 0, pos, visited)]
        while heap:
            f, gc, u, vis = heapq.heappop(heap)
            if best.get((u, vis), 1 << 60) < gc:
                continue
            if vis == full and u == s:
                return gc
            for v in g.nbrs[u]:
                nvis = vis | (1 << v)
                ng = gc + 1
                key = (v, nvis)
                if ng < best.get(key, 1 << 60):
                    best[key] = ng
                    heapq.heappush(heap, (ng + self.h(v, nvis), ng, v, nvis))
        raise RuntimeError("polygon is not connected")

    def lexmin_path(self, pos: int, visited: int, length: int) -> list[int]:
        """Lexicographically smallest walk of exactly ``length`` steps."""
        g = self.g
        full = g.full
        s = self.s
        dead: dict[tuple[int, int], int] = {}
        path = [pos]

        def dfs(u: int, vis: int, left: int) -> bool:
            if vis == full and u == s and left == 0:
                return True
            if self.h(u, vis) > left or dead.get((u, vis), -1) >= left:
                return False
            for v in g.nbrs[u]:
                path.append(v)
                if dfs(v, vis | (1 << v), left - 1):
                    return True
                path.pop()
            dead[(u, vis)] = left
            return False

        import sys

        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, length + 200))
        try:
            if not dfs(pos, visited, length):
                raise RuntimeError("no walk of the requested length")
        finally:
            sys.setrecursionlimit(limit)
        return path


def _check_size(polygon: GridPolygon, threshold: int | None) -> None:
    threshold = exact_threshold() if threshold is None else threshold
    if len(polygon) > threshold:
        raise InstanceTooLarge(
            f"{len(polygon)} cells exceed the exact-search threshold {threshold}"
        )


def optimal_tour(
    polygon: GridPolygon, threshold: int | None = None, ham_budget: int = 2_000_000
) -> OptimalTour:
    """Provably shortest closed walk from the start that visits every cell."""
    try:
        cycle = hamiltonian_cycle(polygon, budget=ham_budget)
    except BudgetExceeded:
        cycle = None
        _check_size(polygon, threshold)
    if cycle is not None:
        return OptimalTour(len(cycle) - 1, tuple(cycle), HAMILTONIAN)
    _check_size(polygon, threshold)
    search = _Search(polygon)
    s = search.s
    length = search.cost(s, 1 << s)
    path = search.lexmin_path(s, 1 << s, length)
    return OptimalTour(length, tuple(search.g.cells[i] for i in path), EXACT_SEARCH)


def min_completion(
    polygon: GridPolygon,
    prefix: Sequence[Cell],
    threshold: int | None = None,
) -> int:
    """Fewest further steps to visit every unvisited cell and return to start.

    ``prefix`` is the walk so far, starting at the polygon's start; an empty
    prefix means the agent has not moved yet.
    """
    _check_size(polygon, threshold)
    search = _get_search(polygon)
    pos, visited = _state_of(search, polygon, prefix)
    return search.cost(pos, visited)


_SEARCH_CACHE: dict[GridPolygon, _Search] = {}


def _get_search(polygon: GridPolygon) -> _Search:
    search = _SEARCH_CACHE.get(polygon)
    if search is None:
        if len(_SEARCH_CACHE) > 256:
            _SEARCH_CACHE.clear()
        search = _SEARCH_CACHE[polygon] = _Search(polygon)
    return search


def _state_of(search: _Search, polygon: GridPolygon, prefix: Sequence[Cell]) -> tuple[int, int]:
    cells = list(prefix) or [polygon.start]
    if cells[0] != polygon.start:
        cells = [polygon.start] + cells
    index = search.g.index
    visited = 0
    for a, b in zip(cells, cells[1:]):
        if b not in index or abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1:
            raise ValueError(f"illegal prefix step {a} -> {b}")
    for c in cells:
        visited |= 1 << index[c]
    return index[cells[-1]], visited


def min_completion_state(polygon: GridPolygon, pos: Cell, visited: Iterable[Cell]) -> int:
    """Like :func:`min_completion` but from an explicit (position, visited) state."""
    search = _get_search(polygon)
    index = search.g.index
    mask = 0
    for c in visited:
        mask |= 1 << index[c]
    mask |= 1 << index[pos]
    return search.cost(index[pos], mask)


def brute_force_tour_length(polygon: GridPolygon) -> int:
    """Plain breadth-first search over (position, visited-set); no pruning.

    Independent oracle for :func:`optimal_tour` on small instances.
    """
    cells = sorted(polygon.free_cells)
    index = {c: i for i, c in enumerate(cells)}
    nbrs = [[index[n] for n in c.neighbours4() if n in index] for c in cells]
    s = index[polygon.start]
    full = (1 << len(cells)) - 1
    start = (s, 1 << s)
    if full == 1 << s:
        return 0
    seen = {start}
    frontier = [start]
    depth = 0
    while frontier:
        depth += 1
        nxt = []
        for u, vis in frontier:
            for v in nbrs[u]:
                state = (v, vis | (1 << v))
                if state in seen:
                    continue
                if state[1] == full and v == s:
                    return depth
                seen.add(state)
                nxt.append(state)
        frontier = nxt
    raise RuntimeError("polygon is not connected")


def competitive_ratio(steps: int, opt_length: int) -> Fraction:
    """Exact ratio of online steps to the optimal tour length."""
    if opt_length <= 0:
        if steps == 0:
            return Fraction(1)
        raise ValueError("optimal length must be positive")
    return Fraction(steps, opt_length)


def transcript_ratio(transcript, tour: OptimalTour) -> Fraction:
    """Ratio for a complete transcript against an optimal tour of the same polygon."""
    if not transcript.complete:
        raise ValueError("transcript is incomplete")
    return competitive_ratio(transcript.steps, tour.length)
