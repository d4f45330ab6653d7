"""Single-agent safe-interval search over (cell, heading, speed) states."""
from __future__ import annotations

import heapq
from bisect import bisect_right
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

from .grid import Cell, GridMap, Heading, neighbors
from .kinematics import KinematicModel, KinematicParams
from .reservation import ReservationTable

INF = math.inf
EPS = 1e-9


class SearchTimeout(RuntimeError):
    pass


def rotation_cost(a: Heading, b: Heading, params: KinematicParams) -> float:
    return a.quarter_turns(b) * params.rot_time_quarter


class SearchState:
    __slots__ = ("cell", "heading", "speed_idx", "time", "interval_id", "parent", "depart", "closed")

    def __init__(self, cell, heading, speed_idx, time, interval_id, parent=None, depart=0.0):
        self.cell = cell
        self.heading = heading
        self.speed_idx = speed_idx
        self.time = time
        self.interval_id = interval_id
        self.parent = parent
        self.depart = depart
        self.closed = False

    @property
    def key(self):
        return (self.cell, int(self.heading), self.speed_idx, self.interval_id)

    def __repr__(self):
        return (f"SearchState({self.cell}, {self.heading.name}, v#{self.speed_idx}, "
                f"t={self.time:.4f}, si={self.interval_id})")


@dataclass(frozen=True)
class Action:
    kind: str               # "rotate" | "wait" | "move"
    t_start: float
    t_end: float
    cell_from: Cell
    cell_to: Cell
    v_start: float = 0.0
    v_end: float = 0.0
    heading_from: Heading = Heading.E
    heading_to: Heading = Heading.E

    def to_dict(self) -> dict:
        return {"type": self.kind, "t_start": self.t_start, "t_end": self.t_end,
                "from": list(self.cell_from), "to": list(self.cell_to),
                "v_start": self.v_start, "v_end": self.v_end,
                "heading_from": self.heading_from.name, "heading_to": self.heading_to.name}

    @classmethod
    def from_dict(cls, d: dict) -> "Action":
        return cls(d["type"], float(d["t_start"]), float(d["t_end"]), tuple(d["from"]), tuple(d["to"]),
                   float(d.get("v_start", 0.0)), float(d.get("v_end", 0.0)),
                   Heading.parse(d.get("heading_from", "E")), Heading.parse(d.get("heading_to", "E")))


@dataclass
class Path:
    start: Cell
    start_heading: Heading
    goal: Cell
    actions: list = field(default_factory=list)
    states: list = field(default_factory=list)

    @property
    def cost(self) -> float:
        return self.actions[-1].t_end if self.actions else 0.0


@dataclass
class SearchStats:
    expansions: int = 0
    generated: int = 0
    duplicates: int = 0
    reopened: int = 0
    runtime_ms: float = 0.0

    def to_dict(self) -> dict:
        return {"expansions": self.expansions, "generated": self.generated,
                "duplicates": self.duplicates, "reopened": self.reopened,
                "runtime_ms": self.runtime_ms}


def goal_test(state: SearchState, goal: Cell, table: ReservationTable) -> bool:
    if state.cell != goal or state.speed_idx != 0:
        return False
    return table.safe_intervals(goal)[state.interval_id].end == INF


def get_successors(state: SearchState, grid: GridMap, table: ReservationTable,
                   model: KinematicModel) -> list[SearchState]:
    out = []
    a_end = table.safe_intervals(state.cell)[state.interval_id].end
    mt = model.move_times
    if state.speed_idx == 0:
        params = model.params
        for nxt, h in neighbors(grid, state.cell):
            ready = state.time + rotation_cost(state.heading, h, params)
            safe = table.safe_intervals(nxt)
            for j in model.achievable[0]:
                dt = mt[0][j]
                for k, iv in enumerate(safe):
                    dep = ready if ready > iv.start else iv.start
                    arr = dep + dt
                    if arr > a_end + EPS:
                        break
                    if arr > iv.end + EPS:
                        continue
                    if j == 0 and arr >= iv.end - EPS:
                        # stopped with no time left in the interval
                        continue
                    out.append(SearchState(nxt, h, j, arr, k, state, dep))
        return out
    nxt = grid.step(state.cell, state.heading)
    if not grid.is_free(nxt):
        return out
    row = mt[state.speed_idx]
    for j in model.achievable[state.speed_idx]:
        arr = state.time + row[j]
        if arr > a_end + EPS:
            continue
        k = table.fits(nxt, state.time, arr)
        if k is None:
            continue
        out.append(SearchState(nxt, state.heading, j, arr, k, state, state.time))
    return out


class _Open:
    """Priority queue ordered by (f, larger g, key) with lazy deletion."""

    def __init__(self):
        self.heap = []
        self.count = 0

    def push(self, f, node):
        self.count += 1
        heapq.heappush(self.heap, (round(f, 9), -round(node.time, 9), node.key, self.count, node))

    def pop(self):
        return heapq.heappop(self.heap)

    def __bool__(self):
        return bool(self.heap)


class _MovingDominance:
    """Decides whether a moving state reached at ``state.time`` is no better
    than the same configuration reached earlier.

    A moving agent cannot wait, so the earlier copy only dominates when every
    continuation of the later one, shifted earlier, stays collision-free.  A
    shifted continuation can only clash where some reservation ends inside
    ``(entry - shift, entry]`` for a cell it enters at ``entry``; entries into
    the i-th cell ahead lie between ``i`` cells at full speed and ``i`` cells
    at the slowest speed, and never after the safe interval of the previous
    cell closes.
    """

    def __init__(self, table: ReservationTable, grid: GridMap, model: KinematicModel):
        self.table = table
        self.grid = grid
        self.fast = model.d / model.params.v_max
        self.slow = model.d / model.params.speed_step
        self._rays: dict = {}

    def _ray(self, cell, heading):
        key = (cell, heading)
        ray = self._rays.get(key)
        if ray is None:
            cells, latest = [], -INF
            c = cell
            while True:
                c = self.grid.step(c, heading)
                if not self.grid.is_free(c):
                    break
                ends = self.table.reservation_ends(c)
                if ends:
                    latest = max(latest, ends[-1] - len(cells) * self.fast)
                cells.append((ends, self.table.safe_intervals(c)))
            ray = self._rays[key] = (cells, latest)
        return ray

    def dominated(self, state: SearchState, t_early: float) -> bool:
        cells, latest = self._ray(state.cell, state.heading)
        if latest <= t_early + EPS:
            return True
        t_late = state.time
        shift = t_late - t_early
        fast, slow = self.fast, self.slow
        hi = t_late
        prev_lo = prev_hi = t_late
        prev_safe = None
        for i, (ends, safe) in enumerate(cells):
            lo = t_late + i * fast
            if lo > hi + EPS:
                return True
            if ends:
                k = bisect_right(ends, lo - shift + EPS)
                if k < len(ends) and ends[k] <= hi + EPS:
                    return False
            if prev_safe is None:
                nxt = self.table.safe_intervals(state.cell)[state.interval_id].end
            else:
                nxt = -INF
                for iv in prev_safe:
                    if iv.start > prev_hi + EPS:
                        break
                    if iv.end > prev_lo:
                        nxt = iv.end
            prev_lo, prev_hi, prev_safe = lo, hi, safe
            hi = t_late + (i + 1) * slow
            if nxt < hi:
                hi = nxt
        return True


def sipp(grid: GridMap, table: ReservationTable, model: KinematicModel, heuristic,
         start: Cell, start_heading: Heading, goal: Cell, deadline: Optional[float] = None,
         moving_copies: Optional[int] = None, on_expand=None) -> tuple[Optional[Path], SearchStats]:
    """A*-style safe-interval search from rest at ``start`` (time 0) to rest at
    ``goal`` in a safe interval that never ends.

    Stopped states are merged per (cell, heading, speed, safe interval)
    keeping the earliest arrival, which is exact because a stopped agent can
    wait.  Moving states cannot wait, so a later moving copy is kept unless
    the earlier one provably dominates it.  ``moving_copies`` caps how many
    such copies a key may hold (None: no cap, exact; 1: plain earliest-wins
    merging); past the cap only a strictly earlier copy gets in.
    ``on_expand(state)`` is called for every expanded state.
    """
    t0 = time.perf_counter()
    stats = SearchStats()
    start_heading = Heading.parse(start_heading)
    k0 = table.interval_index(start, 0.0)
    if not grid.is_free(start) or not grid.is_free(goal) or k0 is None:
        stats.runtime_ms = (time.perf_counter() - t0) * 1e3
        return None, stats
    cap = INF if moving_copies is None else max(1, moving_copies)
    dom = _MovingDominance(table, grid, model)
    root = SearchState(start, start_heading, 0, 0.0, k0)
    h0 = heuristic(start, start_heading, 0)
    open_ = _Open()
    best: dict = {root.key: [root]}
    if h0 < INF:
        open_.push(h0, root)

    while open_:
        _, _, _, _, node = open_.pop()
        if node.closed:
            continue
        group = best.get(node.key)
        if node not in group:
            continue
        node.closed = True
        stats.expansions += 1
        if deadline is not None and stats.expansions % 256 == 0 and time.perf_counter() > deadline:
            raise SearchTimeout("search deadline exceeded")
        if on_expand is not None:
            on_expand(node)
        if goal_test(node, goal, table):
            stats.runtime_ms = (time.perf_counter() - t0) * 1e3
            return _build_path(node, start, start_heading, goal, model), stats

        for x in get_successors(node, grid, table, model):
            stats.generated += 1
            h = heuristic(x.cell, x.heading, x.speed_idx)
            if h == INF:
                continue
            group = best.get(x.key)
            if group is None:
                best[x.key] = [x]
                open_.push(x.time + h, x)
                continue
            if x.speed_idx == 0 or cap == 1:
                if group[0].time <= x.time + EPS:
                    stats.duplicates += 1
                    continue
                if group[0].closed:
                    stats.reopened += 1
                best[x.key] = [x]
                open_.push(x.time + h, x)
                continue
            # moving: keep mutually non-dominated arrival times.  A later copy
            # dominated by some earlier one is dominated by the latest earlier
            # one, since its shift window is the narrowest.
            before = [g.time for g in group if g.time <= x.time + EPS]
            if before and (max(before) >= x.time - EPS or dom.dominated(x, max(before))):
                stats.duplicates += 1
                continue
            keep = [g for g in group if g.closed or g.time < x.time or not dom.dominated(g, x.time)]
            if len(keep) >= cap and before:
                stats.duplicates += 1
                continue
            keep.append(x)
            best[x.key] = keep
            open_.push(x.time + h, x)

    stats.runtime_ms = (time.perf_counter() - t0) * 1e3
    return None, stats


def _build_path(node: SearchState, start: Cell, start_heading: Heading, goal: Cell,
                model: KinematicModel) -> Path:
    chain = []
    while node is not None:
        chain.append(node)
        node = node.parent
    chain.reverse()
    speeds = model.speeds
    actions = []
    for p, c in zip(chain, chain[1:]):
        t = p.time
        if p.speed_idx == 0:
            if c.heading != p.heading:
                rot = rotation_cost(p.heading, c.heading, model.params)
                actions.append(Action("rotate", t, t + rot, p.cell, p.cell, 0.0, 0.0, p.heading, c.heading))
                t += rot
            if c.depart > t + EPS:
                actions.append(Action("wait", t, c.depart, p.cell, p.cell, 0.0, 0.0, c.heading, c.heading))
            t = c.depart
        actions.append(Action("move", t, c.time, p.cell, c.cell, speeds[p.speed_idx], speeds[c.speed_idx],
                              c.heading, c.heading))
    return Path(start, start_heading, goal, actions, chain)


# ------------------------------------------------------- constant speed mode

class _FixedState(SearchState):
    __slots__ = ()

    @property
    def key(self):
        return (self.cell, int(self.heading), 0, self.interval_id)


def sipp_fixed_speed(grid: GridMap, table: ReservationTable, v_fixed: float, params: KinematicParams,
                     heuristic, start: Cell, start_heading: Heading, goal: Cell,
                     deadline: Optional[float] = None) -> tuple[Optional[Path], SearchStats]:
    """Safe-interval search for an agent that moves at ``v_fixed`` and can
    stop, start and wait instantly anywhere (rotations still take time)."""
    t0 = time.perf_counter()
    stats = SearchStats()
    start_heading = Heading.parse(start_heading)
    dt = grid.cell_size / v_fixed
    k0 = table.interval_index(start, 0.0)
    if not grid.is_free(start) or not grid.is_free(goal) or k0 is None:
        return None, stats
    root = _FixedState(start, start_heading, 0, 0.0, k0)
    open_ = _Open()
    best = {root.key: root}
    open_.push(heuristic(start, start_heading), root)
    while open_:
        _, _, _, _, node = open_.pop()
        if node.closed or best.get(node.key) is not node:
            continue
        node.closed = True
        stats.expansions += 1
        if deadline is not None and stats.expansions % 256 == 0 and time.perf_counter() > deadline:
            raise SearchTimeout("search deadline exceeded")
        safe_here = table.safe_intervals(node.cell)
        if node.cell == goal and safe_here[node.interval_id].end == INF:
            stats.runtime_ms = (time.perf_counter() - t0) * 1e3
            return _build_fixed_path(node, start, start_heading, goal, v_fixed, params), stats
        a_end = safe_here[node.interval_id].end
        for nxt, h in neighbors(grid, node.cell):
            ready = node.time + rotation_cost(node.heading, h, params)
            for k, iv in enumerate(table.safe_intervals(nxt)):
                dep = max(ready, iv.start)
                arr = dep + dt
                if arr > a_end + EPS:
                    break
                if arr >= iv.end - EPS:
                    continue
                stats.generated += 1
                x = _FixedState(nxt, h, 0, arr, k, node, dep)
                hv = heuristic(nxt, h)
                if hv == INF:
                    continue
                inc = best.get(x.key)
                if inc is not None and inc.time <= arr + EPS:
                    stats.duplicates += 1
                    continue
                if inc is not None and inc.closed:
                    stats.reopened += 1
                best[x.key] = x
                open_.push(arr + hv, x)
    stats.runtime_ms = (time.perf_counter() - t0) * 1e3
    return None, stats


def _build_fixed_path(node, start, start_heading, goal, v_fixed, params) -> Path:
    chain = []
    while node is not None:
        chain.append(node)
        node = node.parent
    chain.reverse()
    actions = []
    for p, c in zip(chain, chain[1:]):
        t = p.time
        if c.heading != p.heading:
            rot = rotation_cost(p.heading, c.heading, params)
            actions.append(Action("rotate", t, t + rot, p.cell, p.cell, 0.0, 0.0, p.heading, c.heading))
            t += rot
        if c.depart > t + EPS:
            actions.append(Action("wait", t, c.depart, p.cell, p.cell, 0.0, 0.0, c.heading, c.heading))
        actions.append(Action("move", c.depart, c.time, p.cell, c.cell, v_fixed, v_fixed, c.heading, c.heading))
    return Path(start, start_heading, goal, actions, chain)
