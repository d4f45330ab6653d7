"""Prioritized planning: agents are searched one at a time, each avoiding the
sweeps of those planned before it and the endpoints of those still to come."""
from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .grid import AgentTask, Heading, Instance
from .heuristics import FixedSpeedHeuristic, H2, make_heuristic, stop_time_table
from .kinematics import KinematicModel, KinematicParams
from .reservation import ReservationTable, reserve_endpoints, reserve_plan, sweep_of_plan
from .search import Action, Path, SearchStats, SearchTimeout, sipp, sipp_fixed_speed


@dataclass
class Solution:
    paths: dict = field(default_factory=dict)          # agent id -> Path
    stats: dict = field(default_factory=dict)          # agent id -> SearchStats
    success: bool = True
    failed_agent: Optional[int] = None
    timed_out: bool = False
    runtime_ms: float = 0.0
    order: tuple = ()
    params: Optional[KinematicParams] = None
    fixed_speed: Optional[float] = None

    @property
    def sum_of_costs(self) -> float:
        return sum(p.cost for p in self.paths.values())

    @property
    def makespan(self) -> float:
        return max((p.cost for p in self.paths.values()), default=0.0)

    @property
    def expansions(self) -> int:
        return sum(s.expansions for s in self.stats.values())

    @property
    def generated(self) -> int:
        return sum(s.generated for s in self.stats.values())


def default_order(instance: Instance) -> list[int]:
    return [a.id for a in instance.agents]


def shuffled_order(instance: Instance, seed: int) -> list[int]:
    order = default_order(instance)
    random.Random(seed).shuffle(order)
    return order


def _check_order(instance: Instance, order) -> list[int]:
    if order is None:
        return default_order(instance)
    order = list(order)
    if sorted(order) != sorted(default_order(instance)):
        raise ValueError("priority order must be a permutation of the agent ids")
    return order


def _run_prioritized(instance: Instance, order, search_one, timeout: Optional[float],
                     table_hook=None) -> Solution:
    t0 = time.perf_counter()
    deadline = None if timeout is None else t0 + timeout
    sol = Solution(order=tuple(order))
    planned: list[int] = []
    for agent_id in order:
        task = instance.agent(agent_id)
        table = ReservationTable()
        for pid in planned:
            reserve_plan(table, sol.paths[pid])
        reserve_endpoints(table, instance, skip_agent=agent_id, planned=planned)
        if table_hook is not None:
            table_hook(agent_id, table)
        try:
            path, stats = search_one(task, table, deadline)
        except SearchTimeout:
            path, stats = None, SearchStats()
            sol.timed_out = True
        sol.stats[agent_id] = stats
        if path is None:
            sol.success = False
            sol.failed_agent = agent_id
            break
        sol.paths[agent_id] = path
        planned.append(agent_id)
    sol.runtime_ms = (time.perf_counter() - t0) * 1e3
    return sol


def plan(instance: Instance, model: KinematicModel, heuristic: str = "h2", order: Sequence[int] = None,
         timeout: Optional[float] = None, moving_copies: Optional[int] = 4,
         stop_table=None, table_hook=None) -> Solution:
    """Plan every agent in ``order`` (input order by default).

    ``table_hook(agent_id, table)`` sees each agent's reservation table just
    before its search, for debugging dumps.
    """
    order = _check_order(instance, order)
    grid = instance.map
    if heuristic == "h2" and stop_table is None:
        stop_table = stop_time_table(model, 2 * max(grid.width, grid.height) + 2)

    def search_one(task: AgentTask, table, deadline):
        if heuristic == "h2":
            h = H2(grid, model, task.goal, table=stop_table)
        else:
            h = make_heuristic(heuristic, grid, model, task.goal)
        return sipp(grid, table, model, h, task.start, task.start_heading, task.goal, deadline,
                    moving_copies=moving_copies)

    sol = _run_prioritized(instance, order, search_one, timeout, table_hook)
    sol.params = model.params
    return sol


def plan_fixed_speed(instance: Instance, v_fixed: float, params: KinematicParams, heuristic: str = "h2",
                     order: Sequence[int] = None, timeout: Optional[float] = None,
                     table_hook=None) -> Solution:
    if not v_fixed > 0:
        raise ValueError("v_fixed must be positive")
    order = _check_order(instance, order)
    grid = instance.map

    def search_one(task, table, deadline):
        h = FixedSpeedHeuristic(heuristic, grid, task.goal, v_fixed, params)
        return sipp_fixed_speed(grid, table, v_fixed, params, h, task.start, task.start_heading,
                                task.goal, deadline)

    sol = _run_prioritized(instance, order, search_one, timeout, table_hook)
    sol.params = params
    sol.fixed_speed = v_fixed
    return sol


# ------------------------------------------------------------------- JSON

def solution_to_dict(sol: Solution, instance: Instance) -> dict:
    agents = []
    for a in instance.agents:
        entry = {"id": a.id, "start": list(a.start), "heading": a.start_heading.name,
                 "goal": list(a.goal)}
        if a.id in sol.paths:
            p = sol.paths[a.id]
            entry["cost"] = p.cost
            entry["actions"] = [act.to_dict() for act in p.actions]
        if a.id in sol.stats:
            entry["stats"] = sol.stats[a.id].to_dict()
        agents.append(entry)
    return {
        "agents": agents,
        "params": sol.params.to_dict() if sol.params else None,
        "cell_size": instance.map.cell_size,
        "fixed_speed": sol.fixed_speed,
        "order": list(sol.order),
        "summary": {"success": sol.success, "failed_agent": sol.failed_agent,
                    "timed_out": sol.timed_out, "sum_of_costs": sol.sum_of_costs,
                    "makespan": sol.makespan, "runtime_ms": sol.runtime_ms,
                    "expansions": sol.expansions, "generated": sol.generated},
    }


def solution_to_json(sol: Solution, instance: Instance, indent: int = 1) -> str:
    return json.dumps(solution_to_dict(sol, instance), indent=indent)


def solution_from_dict(data: dict) -> Solution:
    """Rebuild a solution from its JSON form (paths only, no search states)."""
    sol = Solution()
    for entry in data["agents"]:
        if "actions" not in entry:
            continue
        p = Path(tuple(entry["start"]), Heading.parse(entry.get("heading", "E")), tuple(entry["goal"]),
                 [Action.from_dict(a) for a in entry["actions"]])
        sol.paths[int(entry["id"])] = p
    summary = data.get("summary", {})
    sol.success = bool(summary.get("success", True))
    sol.failed_agent = summary.get("failed_agent")
    if data.get("params"):
        sol.params = KinematicParams(**data["params"])
    sol.fixed_speed = data.get("fixed_speed")
    sol.order = tuple(data.get("order", ()))
    return sol


__all__ = ["Solution", "plan", "plan_fixed_speed", "default_order", "shuffled_order",
           "solution_to_dict", "solution_to_json", "solution_from_dict", "sweep_of_plan"]
