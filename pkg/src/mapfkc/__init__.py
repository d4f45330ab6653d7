"""Prioritized safe-interval planning for grid fleets with speed and
acceleration limits."""
from .bench import BenchmarkConfig, MetricsRow, aggregate, run_benchmark
from .estimator import PrioritizedSIPP, check_instance
from .grid import (AgentTask, GridMap, Heading, Instance, generate_instance, is_well_formed,
                   load_map, load_scenario, neighbors, parse_map, parse_scenario, preset_map,
                   serialize_map)
from .kinematics import KinematicModel, KinematicParams
from .planner import Solution, plan, plan_fixed_speed
from .validator import Violation, validate_solution

__version__ = "0.1.0"

__all__ = ["AgentTask", "BenchmarkConfig", "MetricsRow", "PrioritizedSIPP", "aggregate", "check_instance",
           "run_benchmark", "GridMap", "Heading", "Instance", "KinematicModel", "KinematicParams",
           "Solution", "Violation", "generate_instance", "is_well_formed", "load_map",
           "load_scenario", "neighbors", "parse_map", "parse_scenario", "plan", "plan_fixed_speed",
           "preset_map", "serialize_map", "validate_solution"]
