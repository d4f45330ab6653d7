"""Benchmark harness: seeded instances x parameter grid -> metrics CSV."""
from __future__ import annotations

import csv
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from statistics import fmean
from typing import Optional

from sklearn.base import clone
from sklearn.model_selection import ParameterGrid

from .estimator import PrioritizedSIPP
from .grid import GridMap, WAREHOUSE_PRESETS, generate_instance, load_map, preset_map
from .validator import validate_solution

log = logging.getLogger(__name__)

WORKERS_ENV = "MAPFKC_WORKERS"
DEFAULT_TIMEOUT = 60.0


@dataclass
class MetricsRow:
    instance_id: str
    seed: int
    step: float
    heuristic: str
    success: bool
    sum_of_costs: float
    makespan: float
    runtime_ms: float
    expansions: int
    generated: int


CSV_FIELDS = [f.name for f in fields(MetricsRow)]
AGG_FIELDS = ["step", "heuristic", "runs", "success_rate", "sum_of_costs", "makespan",
              "runtime_ms", "expansions", "generated"]


@dataclass
class BenchmarkConfig:
    map: str = "map1"                  # preset name or map file path
    agents: int = 20
    seeds: list = field(default_factory=lambda: list(range(50)))
    vmax: float = 2.0
    acc: float = 1.0
    dec: float = 1.0
    steps: list = field(default_factory=lambda: [0.1, 0.25, 0.4, 0.5, 0.66, 1.0])
    heuristics: list = field(default_factory=lambda: ["h1", "h2", "h3"])
    fixed_speeds: list = field(default_factory=list)
    rot_time: float = 1.0
    order_seed: Optional[int] = None
    timeout: float = DEFAULT_TIMEOUT
    validate: bool = False

    def __post_init__(self):
        if not self.seeds or not self.steps or not self.heuristics:
            raise ValueError("seeds, steps and heuristics must be non-empty")
        if not self.timeout > 0:
            raise ValueError("timeout must be positive")
        if self.agents < 1:
            raise ValueError("agents must be positive")

    @classmethod
    def from_dict(cls, data: dict) -> "BenchmarkConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**data)

    def grid(self) -> GridMap:
        if self.map in WAREHOUSE_PRESETS:
            return preset_map(self.map)
        return load_map(self.map)


@dataclass
class RunResult:
    row: MetricsRow
    violations: Optional[int] = None
    solution: object = None


def worker_count(default: int = 1) -> int:
    raw = os.environ.get(WORKERS_ENV)
    if not raw:
        return default
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


def _jobs(cfg: BenchmarkConfig) -> list[tuple[int, dict]]:
    base = {"v_max": [cfg.vmax], "a_acc": [cfg.acc], "a_dec": [cfg.dec], "rot_time": [cfg.rot_time],
            "order_seed": [cfg.order_seed], "timeout": [cfg.timeout]}
    grids = [dict(base, speed_step=list(cfg.steps), heuristic=list(cfg.heuristics), fixed_speed=[None])]
    if cfg.fixed_speeds:
        # baseline ignores the step; keep the first one so the row count stays simple
        grids.append(dict(base, speed_step=[cfg.steps[0]], heuristic=["h2"],
                          fixed_speed=list(cfg.fixed_speeds)))
    return [(seed, p) for seed in cfg.seeds for p in ParameterGrid(grids)]


def _label(params: dict) -> tuple[float, str]:
    if params["fixed_speed"] is not None:
        return params["fixed_speed"], f"fixed-{params['fixed_speed']:g}"
    return params["speed_step"], params["heuristic"]


def run_one(grid: GridMap, n_agents: int, seed: int, params: dict, validate: bool = False,
            keep_solution: bool = False) -> RunResult:
    inst = generate_instance(grid, n_agents, seed)
    est = clone(PrioritizedSIPP()).set_params(**params).fit(grid)
    sol = est.predict(inst)
    step, label = _label(params)
    row = MetricsRow(f"{grid.width}x{grid.height}-n{n_agents}-s{seed}", seed, step, label,
                     sol.success, sol.sum_of_costs, sol.makespan, round(sol.runtime_ms, 3),
                     sol.expansions, sol.generated)
    nviol = len(validate_solution(sol, inst)) if validate else None
    return RunResult(row, nviol, sol if keep_solution else None)


def _run_job(args):
    grid, n, seed, params, validate = args
    return run_one(grid, n, seed, params, validate)


def run_benchmark(cfg: BenchmarkConfig, workers: Optional[int] = None,
                  keep_solutions: bool = False) -> list[RunResult]:
    grid = cfg.grid()
    jobs = _jobs(cfg)
    workers = worker_count() if workers is None else workers
    if workers > 1 and not keep_solutions:
        with ProcessPoolExecutor(workers) as pool:
            # map keeps job order, so output is independent of scheduling
            return list(pool.map(_run_job, [(grid, cfg.agents, s, p, cfg.validate) for s, p in jobs]))
    out = []
    for k, (seed, params) in enumerate(jobs):
        res = run_one(grid, cfg.agents, seed, params, cfg.validate, keep_solutions)
        log.info("[%d/%d] seed=%s %s ok=%s %.0fms", k + 1, len(jobs), seed, _label(params),
                 res.row.success, res.row.runtime_ms)
        out.append(res)
    return out


def aggregate(rows: list[MetricsRow]) -> list[dict]:
    """Means per (step, heuristic).  Cost columns average successful runs
    only (a failed run has no complete cost); effort columns average all."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.step, r.heuristic), []).append(r)
    out = []
    for (step, h), rs in sorted(groups.items(), key=lambda kv: (kv[0][1], kv[0][0])):
        ok = [r for r in rs if r.success]
        out.append({
            "step": step, "heuristic": h, "runs": len(rs), "success_rate": len(ok) / len(rs),
            "sum_of_costs": fmean(r.sum_of_costs for r in ok) if ok else math.nan,
            "makespan": fmean(r.makespan for r in ok) if ok else math.nan,
            "runtime_ms": fmean(r.runtime_ms for r in rs),
            "expansions": fmean(r.expansions for r in rs),
            "generated": fmean(r.generated for r in rs),
        })
    return out


def write_csv(rows: list[MetricsRow], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        w.writeheader()
        for r in rows:
            w.writerow(asdict(r))


def write_aggregates(agg: list[dict], path) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=AGG_FIELDS)
        w.writeheader()
        w.writerows(agg)


def aggregate_path(csv_path) -> Path:
    p = Path(csv_path)
    return p.with_name(p.stem + "_agg" + p.suffix)
