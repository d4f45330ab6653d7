"""Estimator-style wrapper around the planner.

``fit`` takes a map and precomputes everything that depends only on the map
and the kinematic parameters (transition table, stop-time table).  ``predict``
takes an instance on that map and returns a :class:`Solution`.  Hyper-params
live in ``__init__`` so ``get_params``/``set_params``/``clone`` and parameter
grids work unchanged.
"""
from __future__ import annotations

from typing import Optional

from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .grid import GridMap, Instance, InstanceError, check_tasks, is_well_formed
from .heuristics import KINDS, stop_time_table
from .kinematics import KinematicModel, KinematicParams
from .planner import Solution, plan, plan_fixed_speed, shuffled_order


def check_instance(instance, grid: Optional[GridMap] = None, force: bool = False) -> Instance:
    """Input validation for ``predict``: right type, same map, tasks on free
    distinct cells, and well-formed unless ``force``."""
    if not isinstance(instance, Instance):
        raise TypeError(f"expected an Instance, got {type(instance).__name__}")
    if grid is not None and instance.map != grid:
        raise InstanceError("instance is on a different map than the one the planner was fitted on")
    check_tasks(instance.map, instance.agents)
    if not force:
        ok, witnesses = is_well_formed(instance)
        if not ok:
            bad = next(a.id for a in instance.agents if a.id not in witnesses)
            raise InstanceError(f"instance is not well-formed: agent {bad} has no route that avoids "
                                "the other agents' start and goal cells (use force to plan anyway)")
    return instance


class PrioritizedSIPP(BaseEstimator):
    def __init__(self, v_max=2.0, a_acc=1.0, a_dec=1.0, speed_step=0.5, rot_time=1.0,
                 heuristic="h2", order_seed=None, fixed_speed=None, timeout=60.0,
                 moving_copies=4, force=False):
        self.v_max = v_max
        self.a_acc = a_acc
        self.a_dec = a_dec
        self.speed_step = speed_step
        self.rot_time = rot_time
        self.heuristic = heuristic
        self.order_seed = order_seed
        self.fixed_speed = fixed_speed
        self.timeout = timeout
        self.moving_copies = moving_copies
        self.force = force

    def _params(self) -> KinematicParams:
        return KinematicParams(self.v_max, self.a_acc, self.a_dec, self.speed_step, self.rot_time)

    def fit(self, X, y=None):
        grid = X.map if isinstance(X, Instance) else X
        if not isinstance(grid, GridMap):
            raise TypeError(f"fit expects a GridMap or Instance, got {type(X).__name__}")
        if self.heuristic not in KINDS:
            raise ValueError(f"heuristic must be one of {KINDS}, got {self.heuristic!r}")
        if self.timeout is not None and not self.timeout > 0:
            raise ValueError("timeout must be positive")
        self.params_ = self._params()
        self.grid_ = grid
        self.model_ = KinematicModel(self.params_, grid.cell_size)
        # only h2 reads the stop table; it is shared by every agent
        self.stop_table_ = None
        if self.fixed_speed is None and self.heuristic == "h2":
            self.stop_table_ = stop_time_table(self.model_, 2 * max(grid.width, grid.height) + 2)
        return self

    def predict(self, X, table_hook=None) -> Solution:
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit(map) before predict")
        inst = check_instance(X, self.grid_, self.force)
        order = None if self.order_seed is None else shuffled_order(inst, self.order_seed)
        if self.fixed_speed is not None:
            return plan_fixed_speed(inst, self.fixed_speed, self.params_, self.heuristic, order,
                                    self.timeout, table_hook=table_hook)
        return plan(inst, self.model_, self.heuristic, order, self.timeout,
                    moving_copies=self.moving_copies, stop_table=self.stop_table_, table_hook=table_hook)

    def fit_predict(self, X, y=None) -> Solution:
        return self.fit(X).predict(X)
