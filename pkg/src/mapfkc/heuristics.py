"""Admissible cost-to-go estimates for the kinematic SIPP search.

``h1`` and ``h2`` share one structure.  A stopped agent needs the time for
its Manhattan segments plus the rotations it provably cannot avoid; a moving
agent first has to brake to a stop somewhere along its current heading, so
its estimate is the best "run straight and stop after ``s`` cells" option
followed by the stopped estimate from there.  ``h1`` times segments with the
continuous trapezoid bound, ``h2`` with the discretised speed DP.  ``h3`` is
the static shortest-path distance at full speed.
"""
from __future__ import annotations

import heapq
import math
from typing import Callable

from .grid import Cell, GridMap, Heading, neighbors
from .kinematics import InfeasibleTransition, KinematicModel, KinematicParams, min_time_segment

INF = math.inf
KINDS = ("h1", "h2", "h3")


def _stopped_estimate(cell: Cell, heading: Heading, goal: Cell, seg0: Callable[[int], float],
                      rot_q: float) -> float:
    dx, dy = goal[0] - cell[0], goal[1] - cell[1]
    if dx == 0 and dy == 0:
        return 0.0
    if dx == 0 or dy == 0:
        toward = Heading.between((0, 0), (_sign(dx), _sign(dy)))
        return seg0(abs(dx) + abs(dy)) + rot_q * heading.quarter_turns(toward)
    hx = Heading.E if dx > 0 else Heading.W
    hy = Heading.S if dy > 0 else Heading.N
    turns = 1 if heading in (hx, hy) else 2
    return seg0(abs(dx)) + seg0(abs(dy)) + rot_q * turns


def _sign(v: int) -> int:
    return (v > 0) - (v < 0)


class _SegmentHeuristic:
    """Common driver for h1/h2; subclasses supply the two segment timers."""

    def __init__(self, grid: GridMap, model: KinematicModel, goal: Cell):
        self.grid = grid
        self.model = model
        self.goal = goal
        self.rot_q = model.params.rot_time_quarter
        self._memo: dict = {}

    def seg0(self, n_cells: int) -> float:
        raise NotImplementedError

    def run(self, n_cells: int, v_idx: int) -> float:
        raise NotImplementedError

    def stopped(self, cell: Cell, heading: Heading) -> float:
        return _stopped_estimate(cell, heading, self.goal, self.seg0, self.rot_q)

    def __call__(self, cell: Cell, heading: Heading, v_idx: int) -> float:
        key = (cell, heading, v_idx)
        val = self._memo.get(key)
        if val is not None:
            return val
        if v_idx == 0:
            val = self.stopped(cell, heading)
        else:
            val = INF
            c = cell
            s = 0
            while True:
                c = self.grid.step(c, heading)
                if not self.grid.is_free(c):
                    break
                s += 1
                t = self.run(s, v_idx)
                if t < val:
                    val = min(val, t + self(c, heading, 0))
        self._memo[key] = val
        return val


class H1(_SegmentHeuristic):
    """Continuous trapezoid bound per straight segment."""

    def __init__(self, grid, model, goal):
        super().__init__(grid, model, goal)
        self._seg0: dict[int, float] = {}

    def seg0(self, n):
        t = self._seg0.get(n)
        if t is None:
            t = min_time_segment(n * self.model.d, 0.0, 0.0, self.model.params)
            self._seg0[n] = t
        return t

    def run(self, n, v_idx):
        try:
            return min_time_segment(n * self.model.d, self.model.speeds[v_idx], 0.0, self.model.params)
        except InfeasibleTransition:
            return INF


def stop_time_table(model: KinematicModel, max_cells: int) -> list[list[float]]:
    """``T[n][i]``: least time over exactly ``n`` cells from speed index ``i``
    to a stop, using only discretised speeds at cell centres."""
    nv = len(model.speeds)
    T = [[INF] * nv]
    T[0][0] = 0.0
    ach, mt = model.achievable, model.move_times
    for n in range(1, max_cells + 1):
        prev = T[-1]
        row = [INF] * nv
        for i in range(nv):
            best = INF
            for j in ach[i]:
                c = mt[i][j] + prev[j]
                if c < best:
                    best = c
            row[i] = best
        T.append(row)
    return T


class H2(_SegmentHeuristic):
    """Discretised-speed DP bound per straight segment."""

    def __init__(self, grid, model, goal, table=None):
        super().__init__(grid, model, goal)
        n = 2 * max(grid.width, grid.height) + 2
        self.T = table if table is not None and len(table) > n else stop_time_table(model, n)
        self.limit = len(self.T) - 1
        # rest-to-rest segments may be covered in several pieces, so use the
        # cheapest stop-to-stop run of at least n cells
        tail = (self.limit + 1) * model.d / model.params.v_max
        suffix = [0.0] * (self.limit + 2)
        suffix[self.limit + 1] = tail
        for k in range(self.limit, -1, -1):
            suffix[k] = min(self.T[k][0], suffix[k + 1])
        self._suffix = suffix

    def seg0(self, n):
        return self._suffix[min(n, self.limit + 1)]

    def run(self, n, v_idx):
        if n > self.limit:
            return n * self.model.d / self.model.params.v_max
        return self.T[n][v_idx]


class H3:
    """Static shortest-path distance from the goal, traversed at ``v_max``."""

    def __init__(self, grid: GridMap, model_or_speed, goal: Cell):
        speed = model_or_speed if isinstance(model_or_speed, (int, float)) else model_or_speed.params.v_max
        self.goal = goal
        self.scale = grid.cell_size / speed
        self.field = reverse_dijkstra(grid, goal)

    def __call__(self, cell, heading=None, v_idx=0) -> float:
        return self.field.get(cell, INF) * self.scale


def reverse_dijkstra(grid: GridMap, goal: Cell) -> dict[Cell, float]:
    dist = {goal: 0.0}
    heap = [(0.0, goal)]
    while heap:
        d, c = heapq.heappop(heap)
        if d > dist.get(c, INF):
            continue
        for n, _ in neighbors(grid, c):
            nd = d + 1.0
            if nd < dist.get(n, INF):
                dist[n] = nd
                heapq.heappush(heap, (nd, n))
    return dist


def make_heuristic(kind: str, grid: GridMap, model: KinematicModel, goal: Cell, **kw):
    kind = kind.lower()
    if kind == "h1":
        return H1(grid, model, goal)
    if kind == "h2":
        return H2(grid, model, goal, **kw)
    if kind == "h3":
        return H3(grid, model, goal)
    raise ValueError(f"unknown heuristic {kind!r}; choose from {KINDS}")


class FixedSpeedHeuristic:
    """Estimate for the constant-speed baseline: distance at ``v_fixed`` plus
    unavoidable rotations (h1/h2) or static shortest distance (h3)."""

    def __init__(self, kind: str, grid: GridMap, goal: Cell, v_fixed: float, params: KinematicParams):
        self.goal = goal
        self.per_cell = grid.cell_size / v_fixed
        self.rot_q = params.rot_time_quarter
        self.field = reverse_dijkstra(grid, goal) if kind == "h3" else None

    def __call__(self, cell, heading, v_idx=0):
        if self.field is not None:
            return self.field.get(cell, INF) * self.per_cell
        return _stopped_estimate(cell, heading, self.goal, lambda n: n * self.per_cell, self.rot_q)


# thin functional wrappers

def h1(cell, heading, v_idx, goal, grid, model) -> float:
    return H1(grid, model, goal)(cell, heading, v_idx)


def h2(cell, heading, v_idx, goal, grid, model) -> float:
    return H2(grid, model, goal)(cell, heading, v_idx)


def h3(cell, goal, grid, model) -> float:
    return H3(grid, model, goal)(cell)
