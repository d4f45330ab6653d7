"""Independent certification of plans.

Nothing here reuses the planner's reservation or transition code: cell
occupancy is recomputed from disk geometry along each move's motion profile,
and kinematic limits are checked from the action list alone.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Optional

from .grid import GridMap, Heading

TOL = 1e-6
INF = math.inf
KINDS = ("speed-bound", "accel-bound", "teleport", "rotation-while-moving", "collision", "goal-not-held")


class PlanStructureError(ValueError):
    pass


@dataclass(frozen=True)
class Violation:
    kind: str
    agents: tuple
    time: float
    cell: Optional[tuple] = None
    detail: str = ""

    def __str__(self):
        who = ",".join(str(a) for a in self.agents)
        return f"{self.kind} agents=[{who}] t={self.time:.6f} cell={self.cell}: {self.detail}"


# ----------------------------------------------------------- motion model

def _rest_to_rest_min_time(d, v_max, a_acc, a_dec):
    if math.isinf(a_acc) and math.isinf(a_dec):
        return d / v_max
    # triangle first; if the peak breaks v_max, cruise in the middle
    peak = math.sqrt(2 * d * a_acc * a_dec / (a_acc + a_dec))
    if peak <= v_max:
        return peak / a_acc + peak / a_dec
    d_ramp = v_max ** 2 / (2 * a_acc) + v_max ** 2 / (2 * a_dec)
    return v_max / a_acc + v_max / a_dec + (d - d_ramp) / v_max


def _displacement_fn(v0, v1, duration, d):
    """Monotone displacement s(tau) on [0, duration] for one cell move."""
    if v0 + v1 > 0:
        a = (v1 - v0) / duration

        def s(tau):
            return v0 * tau + 0.5 * a * tau * tau
        return s
    # rest to rest with symmetric accelerate/cruise/brake shape fitting duration:
    # peak p solves d = p * (duration - p / k) with k the common ramp rate;
    # pick k so the ramps take a third of the time each (any monotone shape works
    # for occupancy since only s == 0 and s == d matter for axis-aligned moves)
    p = 1.5 * d / duration
    ramp = duration / 3.0

    def s(tau):
        if tau <= ramp:
            return 0.5 * p / ramp * tau * tau
        if tau <= 2 * ramp:
            return 0.5 * p * ramp + p * (tau - ramp)
        r = duration - tau
        return d - 0.5 * p / ramp * r * r
    return s


def _overlap_range(cell_offset, radius, cell):
    """Range of along-track displacement ``s`` for which a disk of ``radius``
    centred at (s, 0) overlaps the open square of side ``cell`` centred at
    ``cell_offset`` (along, lateral).  None if it never does."""
    ox, oy = cell_offset
    half = cell / 2.0
    gap_lat = max(0.0, abs(oy) - half)
    if gap_lat >= radius - 1e-12:
        return None
    reach = math.sqrt(radius ** 2 - gap_lat ** 2)
    return (ox - half - reach, ox + half + reach)


def _time_at(s_fn, duration, target):
    """First tau with s(tau) >= target (bisection on a monotone profile)."""
    if target <= s_fn(0.0):
        return 0.0
    end = s_fn(duration)
    if target > end + 1e-9:
        return INF
    if target >= end:
        return duration
    lo, hi = 0.0, duration
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if s_fn(mid) >= target:
            hi = mid
        else:
            lo = mid
    return hi


def occupancy(path, cell_size: float = 1.0, radius: Optional[float] = None) -> dict:
    """Per-cell list of [enter, exit) times the agent's disk overlaps a cell."""
    r = cell_size / 2.0 if radius is None else radius
    raw = defaultdict(list)
    cur = tuple(path.start)
    raw[cur].append([0.0, 0.0])
    for act in path.actions:
        if act.kind != "move":
            raw[cur].append([act.t_start, act.t_end])
            continue
        a, b = tuple(act.cell_from), tuple(act.cell_to)
        ux, uy = b[0] - a[0], b[1] - a[1]
        dur = act.t_end - act.t_start
        s_fn = _displacement_fn(act.v_start, act.v_end, dur, cell_size)
        span = int(math.ceil(r / cell_size)) + 1
        for i in range(-span, span + 2):
            for j in range(-span, span + 1):
                c = (a[0] + ux * i - uy * j, a[1] + uy * i + ux * j)
                rng = _overlap_range((i * cell_size, j * cell_size), r, cell_size)
                if rng is None:
                    continue
                lo, hi = rng
                # open range (lo, hi) of displacement, s runs 0 -> cell_size
                if hi <= 0.0 or lo >= cell_size:
                    continue
                # a cell whose edge the disk already touches is entered at once
                enter = act.t_start + (0.0 if lo <= 1e-9 else _time_at(s_fn, dur, lo + 1e-12))
                leave = act.t_end if hi > cell_size else act.t_start + _time_at(s_fn, dur, hi)
                if leave > enter:
                    raw[c].append([enter, leave])
        cur = b
    end = path.actions[-1].t_end if path.actions else 0.0
    raw[cur].append([end, INF])
    out = {}
    for c, ivs in raw.items():
        ivs.sort()
        merged = []
        for s, e in ivs:
            if merged and s <= merged[-1][1] + TOL:
                merged[-1][1] = max(merged[-1][1], e)
            else:
                merged.append([s, e])
        merged = [iv for iv in merged if iv[1] > iv[0]]
        if merged:
            out[c] = merged
    return out


# ---------------------------------------------------------- agent checks

def validate_agent(path, grid: GridMap, params, agent_id: int = 0, goal=None,
                   infinite_accel: bool = False, v_max: Optional[float] = None) -> list[Violation]:
    """Kinematic feasibility of one agent's action list.

    ``infinite_accel`` relaxes the acceleration and stop-before-turning rules
    for the constant-speed baseline; ``v_max`` overrides ``params.v_max``.
    """
    v_max = params.v_max if v_max is None else v_max
    a_acc = INF if infinite_accel else params.a_acc
    a_dec = INF if infinite_accel else params.a_dec
    d = grid.cell_size
    out = []

    def bad(kind, t, cell, detail):
        out.append(Violation(kind, (agent_id,), t, cell, detail))

    cell = tuple(path.start)
    heading = Heading.parse(path.start_heading)
    speed = 0.0
    t = 0.0
    if not grid.is_free(cell):
        bad("teleport", 0.0, cell, "start cell blocked or out of bounds")
    for k, act in enumerate(path.actions):
        if act.kind not in ("rotate", "wait", "move"):
            raise PlanStructureError(f"agent {agent_id} action {k}: unknown type {act.kind!r}")
        if act.t_end < act.t_start - TOL:
            raise PlanStructureError(f"agent {agent_id} action {k}: ends before it starts")
        if abs(act.t_start - t) > TOL:
            bad("teleport", act.t_start, cell, f"action {k} starts at {act.t_start}, previous ended at {t}")
        if tuple(act.cell_from) != cell:
            bad("teleport", act.t_start, tuple(act.cell_from), f"action {k} starts from {act.cell_from}, agent is at {cell}")
        if act.kind in ("rotate", "wait"):
            if speed > TOL and not infinite_accel:
                bad("rotation-while-moving", act.t_start, cell, f"{act.kind} at speed {speed}")
            if act.kind == "rotate":
                turns = Heading.parse(act.heading_from).quarter_turns(Heading.parse(act.heading_to))
                if Heading.parse(act.heading_from) != heading:
                    bad("rotation-while-moving", act.t_start, cell, "rotation starts from wrong heading")
                need = turns * params.rot_time_quarter
                if act.t_end - act.t_start < need - TOL:
                    bad("rotation-while-moving", act.t_start, cell,
                        f"rotation of {turns} quarter turns in {act.t_end - act.t_start}s (< {need}s)")
                heading = Heading.parse(act.heading_to)
            elif tuple(act.cell_to) != cell:
                bad("teleport", act.t_start, cell, "wait changes position")
            speed = 0.0
        else:
            a, b = tuple(act.cell_from), tuple(act.cell_to)
            if abs(a[0] - b[0]) + abs(a[1] - b[1]) != 1 or not grid.is_free(b):
                bad("teleport", act.t_start, b, f"move {a}->{b} is not to a free 4-neighbour")
            else:
                direction = Heading.between(a, b)
                if direction != heading:
                    bad("rotation-while-moving", act.t_start, a,
                        f"moves {direction.name} while heading {heading.name}")
                heading = direction
            v0, v1 = act.v_start, act.v_end
            if abs(v0 - speed) > TOL and not infinite_accel:
                bad("accel-bound", act.t_start, a, f"speed jumps from {speed} to {v0}")
            for v in (v0, v1):
                if v < -TOL or v > v_max + TOL:
                    bad("speed-bound", act.t_start, a, f"speed {v} outside [0, {v_max}]")
            dur = act.t_end - act.t_start
            if v0 + v1 > 0:
                acc = (v1 - v0) * (v0 + v1) / (2 * d)
                if acc > a_acc + TOL or -acc > a_dec + TOL:
                    bad("accel-bound", act.t_start, a, f"implied acceleration {acc:.6g}")
                expect = 2 * d / (v0 + v1)
                if abs(dur - expect) > TOL * max(1.0, expect):
                    bad("accel-bound", act.t_start, a,
                        f"duration {dur} inconsistent with constant acceleration ({expect})")
            else:
                tmin = _rest_to_rest_min_time(d, v_max, a_acc, a_dec)
                if dur < tmin - TOL:
                    bad("accel-bound", act.t_start, a, f"stop-to-stop move in {dur}s < {tmin}s")
            speed = v1
            cell = b
        t = act.t_end
    goal = tuple(path.goal if goal is None else goal)
    if cell != goal:
        bad("goal-not-held", t, cell, f"ends at {cell}, goal is {goal}")
    if speed > TOL and not infinite_accel:
        bad("goal-not-held", t, cell, f"ends with speed {speed}")
    return out


# -------------------------------------------------------- solution checks

def validate_solution(solution, instance, params=None) -> list[Violation]:
    params = params or solution.params
    fixed = getattr(solution, "fixed_speed", None)
    grid = instance.map
    out = []
    occ = {}
    for a in instance.agents:
        path = solution.paths.get(a.id)
        if path is None:
            continue
        if tuple(path.start) != a.start:
            out.append(Violation("teleport", (a.id,), 0.0, tuple(path.start), f"plan starts at {path.start}, task at {a.start}"))
        if Heading.parse(path.start_heading) != a.start_heading:
            out.append(Violation("rotation-while-moving", (a.id,), 0.0, a.start,
                                 "plan starts with a different heading than the task"))
        out.extend(validate_agent(path, grid, params, a.id, a.goal, infinite_accel=bool(fixed),
                                  v_max=fixed or None))
        occ[a.id] = occupancy(path, grid.cell_size)
    out.extend(collisions(occ))
    return out


def collisions(occ: dict) -> list[Violation]:
    per_cell = defaultdict(list)
    for aid, cells in occ.items():
        for c, ivs in cells.items():
            for s, e in ivs:
                per_cell[c].append((s, e, aid))
    out = []
    for c, items in per_cell.items():
        items.sort()
        for i, (s1, e1, a1) in enumerate(items):
            for s2, e2, a2 in items[i + 1:]:
                if s2 >= e1 - TOL:
                    break
                if a1 != a2 and s1 < e2 - TOL:
                    out.append(Violation("collision", tuple(sorted((a1, a2))), max(s1, s2), c,
                                         f"[{s1:.6g},{e1:.6g}) overlaps [{s2:.6g},{e2:.6g})"))
    return out
