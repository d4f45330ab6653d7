"""Per-cell reserved time intervals and the safe intervals left between them.

All intervals are half-open ``[start, end)``; ``end`` may be ``inf``.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Iterable, Optional

from .grid import Cell, Instance

INF = math.inf
EPS = 1e-9


@dataclass(frozen=True, order=True)
class TimeInterval:
    start: float
    end: float = INF

    def __post_init__(self):
        if self.end < self.start:
            raise ValueError(f"interval end {self.end} before start {self.start}")

    def contains(self, start: float, end: float) -> bool:
        return self.start <= start + EPS and end <= self.end + EPS

    def to_list(self) -> list:
        return [self.start, None if self.end == INF else self.end]


@dataclass(frozen=True)
class SweepRecord:
    cell: Cell
    interval: TimeInterval


def merge_intervals(intervals: Iterable[tuple[float, float]]) -> list[tuple[float, float]]:
    out: list[list[float]] = []
    for s, e in sorted(intervals):
        if e - s <= 0:
            continue
        if out and s <= out[-1][1] + EPS:
            out[-1][1] = max(out[-1][1], e)
        else:
            out.append([s, e])
    return [(s, e) for s, e in out]


def complement(reserved: list[tuple[float, float]]) -> list[TimeInterval]:
    safe = []
    t = 0.0
    for s, e in reserved:
        if s > t + EPS:
            safe.append(TimeInterval(t, s))
        t = max(t, e)
        if t == INF:
            return safe
    safe.append(TimeInterval(t, INF))
    return safe


class ReservationTable:
    """Reserved intervals per cell.  Safe intervals are cached per cell and
    invalidated on reservation, so queries during a search are cheap."""

    def __init__(self):
        self._reserved: dict[Cell, list[tuple[float, float]]] = {}
        self._safe_cache: dict[Cell, list[TimeInterval]] = {}
        self._ends_cache: dict[Cell, list[float]] = {}

    def reserve(self, cell: Cell, start: float, end: float = INF) -> None:
        cur = self._reserved.get(cell, [])
        self._reserved[cell] = merge_intervals(cur + [(start, end)])
        self._safe_cache.pop(cell, None)
        self._ends_cache.pop(cell, None)

    def reserved(self, cell: Cell) -> list[tuple[float, float]]:
        return list(self._reserved.get(cell, ()))

    def cells(self):
        return self._reserved.keys()

    def safe_intervals(self, cell: Cell) -> list[TimeInterval]:
        safe = self._safe_cache.get(cell)
        if safe is None:
            safe = complement(self._reserved.get(cell, []))
            self._safe_cache[cell] = safe
        return safe

    def interval_index(self, cell: Cell, t: float) -> Optional[int]:
        """Index of the safe interval of ``cell`` containing instant ``t``."""
        for k, iv in enumerate(self.safe_intervals(cell)):
            if iv.start <= t + EPS and t < iv.end - EPS:
                return k
            if iv.start > t + EPS:
                break
        return None

    def fits(self, cell: Cell, start: float, end: float) -> Optional[int]:
        """Index of the safe interval containing ``[start, end)``, or None."""
        for k, iv in enumerate(self.safe_intervals(cell)):
            if iv.start > start + EPS:
                break
            if end <= iv.end + EPS:
                return k
        return None

    def reservation_ends(self, cell: Cell) -> list[float]:
        ends = self._ends_cache.get(cell)
        if ends is None:
            ends = [e for _, e in self._reserved.get(cell, ()) if e != INF]
            self._ends_cache[cell] = ends
        return ends

    def has_end_in(self, cell: Cell, lo: float, hi: float) -> bool:
        """True if some reservation of ``cell`` ends inside ``(lo, hi]``."""
        ends = self.reservation_ends(cell)
        k = bisect.bisect_right(ends, lo + EPS)
        return k < len(ends) and ends[k] <= hi + EPS

    def copy(self) -> "ReservationTable":
        other = ReservationTable()
        other._reserved = {c: list(v) for c, v in self._reserved.items()}
        return other

    def to_json(self) -> dict:
        return {f"{c[0]},{c[1]}": [[s, None if e == INF else e] for s, e in iv]
                for c, iv in sorted(self._reserved.items())}


def safe_intervals(table: ReservationTable, cell: Cell) -> list[TimeInterval]:
    return table.safe_intervals(cell)


def fits(table: ReservationTable, cell: Cell, occupancy: TimeInterval) -> Optional[TimeInterval]:
    k = table.fits(cell, occupancy.start, occupancy.end)
    return None if k is None else table.safe_intervals(cell)[k]


def sweep_of_plan(path) -> list[SweepRecord]:
    """Cells covered by the agent's disk over time, coalesced per cell.

    Moves cover both endpoint cells for their whole duration; waits and
    rotations cover the current cell; the start cell is covered from 0 and
    the goal cell until forever.
    """
    raw: list[tuple[Cell, float, float]] = []
    cell = path.start
    t_end = 0.0
    raw.append((cell, 0.0, 0.0))
    for act in path.actions:
        if act.kind == "move":
            raw.append((act.cell_from, act.t_start, act.t_end))
            raw.append((act.cell_to, act.t_start, act.t_end))
            cell = act.cell_to
        else:
            raw.append((act.cell_from, act.t_start, act.t_end))
        t_end = act.t_end
    raw.append((cell, t_end, INF))

    per_cell: dict[Cell, list[tuple[float, float]]] = {}
    order: list[Cell] = []
    for c, s, e in raw:
        if c not in per_cell:
            per_cell[c] = []
            order.append(c)
        per_cell[c].append((s, e))
    out = []
    for c in order:
        ivs = per_cell[c]
        merged: list[list[float]] = []
        for s, e in sorted(ivs):
            if merged and s <= merged[-1][1] + EPS:
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        out.extend(SweepRecord(c, TimeInterval(s, e)) for s, e in merged if e > s)
    return out


def reserve_plan(table: ReservationTable, path) -> ReservationTable:
    for rec in sweep_of_plan(path):
        table.reserve(rec.cell, rec.interval.start, rec.interval.end)
    return table


def reserve_endpoints(table: ReservationTable, instance: Instance, skip_agent: Optional[int],
                      planned: Iterable[int] = ()) -> ReservationTable:
    """Block start and goal cells of every not-yet-planned agent (other than
    ``skip_agent``) for all time."""
    planned = set(planned)
    for a in instance.agents:
        if a.id == skip_agent or a.id in planned:
            continue
        table.reserve(a.start, 0.0, INF)
        table.reserve(a.goal, 0.0, INF)
    return table
