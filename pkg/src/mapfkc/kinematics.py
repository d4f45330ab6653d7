"""Speed discretisation, per-cell speed transitions and continuous motion bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

FEAS_SLACK = 1e-9


class InfeasibleTransition(ValueError):
    pass


@dataclass(frozen=True)
class KinematicParams:
    v_max: float = 2.0
    a_acc: float = 1.0
    a_dec: float = 1.0
    speed_step: float = 0.5
    rot_time_quarter: float = 1.0

    def __post_init__(self):
        for name in ("v_max", "a_acc", "a_dec", "speed_step", "rot_time_quarter"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.speed_step > self.v_max + FEAS_SLACK:
            raise ValueError("speed_step must not exceed v_max")

    def to_dict(self) -> dict:
        return {"v_max": self.v_max, "a_acc": self.a_acc, "a_dec": self.a_dec,
                "speed_step": self.speed_step, "rot_time_quarter": self.rot_time_quarter}


def build_speed_set(params: KinematicParams) -> list[float]:
    # the tiny slack keeps e.g. 2/0.4 from flooring to 4
    n = int(math.floor(params.v_max / params.speed_step + 1e-9))
    return [k * params.speed_step for k in range(n + 1)]


def implied_acceleration(v_i: float, v_j: float, d: float) -> float:
    return (v_j - v_i) * (v_i + v_j) / (2.0 * d)


def transition_feasible(v_i: float, v_j: float, d: float, params: KinematicParams) -> bool:
    if v_i == 0 and v_j == 0:
        return True
    a = implied_acceleration(v_i, v_j, d)
    return -params.a_dec - FEAS_SLACK <= a <= params.a_acc + FEAS_SLACK


def rest_to_rest_time(d: float, params: KinematicParams) -> float:
    """Bang-bang time for a stop-to-stop move over ``d``; a cruise phase at
    ``v_max`` is inserted when the triangular peak would exceed it."""
    return min_time_segment(d, 0.0, 0.0, params)


def move_time(v_i: float, v_j: float, d: float, params: KinematicParams) -> float:
    if not transition_feasible(v_i, v_j, d, params):
        raise InfeasibleTransition(f"speed {v_j} not reachable from {v_i} over {d} m")
    if v_i + v_j > 0:
        return 2.0 * d / (v_i + v_j)
    return rest_to_rest_time(d, params)


@dataclass(frozen=True)
class Segment:
    duration: float
    v_start: float
    accel: float

    @property
    def v_end(self) -> float:
        return self.v_start + self.accel * self.duration

    @property
    def distance(self) -> float:
        return self.v_start * self.duration + 0.5 * self.accel * self.duration ** 2


@dataclass(frozen=True)
class MotionProfile:
    segments: tuple

    @property
    def duration(self) -> float:
        return sum(s.duration for s in self.segments)

    @property
    def distance(self) -> float:
        return sum(s.distance for s in self.segments)

    def position(self, t: float) -> float:
        s = 0.0
        for seg in self.segments:
            if t <= seg.duration:
                return s + seg.v_start * t + 0.5 * seg.accel * t * t
            s += seg.distance
            t -= seg.duration
        return s

    def speed(self, t: float) -> float:
        for seg in self.segments:
            if t <= seg.duration:
                return seg.v_start + seg.accel * t
            t -= seg.duration
        return self.segments[-1].v_end if self.segments else 0.0


def _trapezoid(d: float, v_in: float, v_out: float, params: KinematicParams) -> tuple:
    """(peak speed, accel time, cruise time, decel time) of the fastest profile."""
    a, b = params.a_acc, params.a_dec
    peak = math.sqrt((2 * a * b * d + b * v_in ** 2 + a * v_out ** 2) / (a + b))
    cruise = 0.0
    if peak > params.v_max:
        peak = params.v_max
        d_acc = (peak ** 2 - v_in ** 2) / (2 * a)
        d_dec = (peak ** 2 - v_out ** 2) / (2 * b)
        cruise = max(0.0, d - d_acc - d_dec) / peak
    return peak, max(0.0, (peak - v_in) / a), cruise, max(0.0, (peak - v_out) / b)


def profile_for_move(v_i: float, v_j: float, d: float, params: KinematicParams) -> MotionProfile:
    if not transition_feasible(v_i, v_j, d, params):
        raise InfeasibleTransition(f"speed {v_j} not reachable from {v_i} over {d} m")
    if v_i + v_j > 0:
        t = 2.0 * d / (v_i + v_j)
        return MotionProfile((Segment(t, v_i, (v_j - v_i) / t),))
    peak, t_acc, t_cruise, t_dec = _trapezoid(d, 0.0, 0.0, params)
    segs = [Segment(t_acc, 0.0, params.a_acc)]
    if t_cruise > 0:
        segs.append(Segment(t_cruise, peak, 0.0))
    segs.append(Segment(t_dec, peak, -params.a_dec))
    return MotionProfile(tuple(segs))


def min_time_segment(D: float, v_in: float, v_out: float, params: KinematicParams) -> float:
    """Minimum time to cover ``D`` metres from ``v_in`` to ``v_out`` with
    bounded acceleration, deceleration and speed."""
    if D < 0:
        raise ValueError("distance must be non-negative")
    if v_in == v_out and D == 0:
        return 0.0
    if v_out >= v_in:
        need = (v_out ** 2 - v_in ** 2) / (2 * params.a_acc)
    else:
        need = (v_in ** 2 - v_out ** 2) / (2 * params.a_dec)
    if need > D + FEAS_SLACK:
        raise InfeasibleTransition(f"cannot go from {v_in} to {v_out} m/s within {D} m")
    _, t_acc, t_cruise, t_dec = _trapezoid(D, v_in, v_out, params)
    return t_acc + t_cruise + t_dec


@dataclass(frozen=True)
class TransitionTable:
    speeds: tuple
    d: float
    achievable: tuple   # achievable[i] -> tuple of reachable speed indices
    move_time: tuple    # move_time[i][j] -> seconds, inf when infeasible

    def feasible(self, i: int, j: int) -> bool:
        return j in self.achievable[i]


def precompute_transitions(speeds, d: float, params: KinematicParams) -> TransitionTable:
    n = len(speeds)
    achievable = []
    times = []
    for i in range(n):
        row = [math.inf] * n
        reach = []
        for j in range(n):
            if transition_feasible(speeds[i], speeds[j], d, params):
                reach.append(j)
                row[j] = move_time(speeds[i], speeds[j], d, params)
        achievable.append(tuple(reach))
        times.append(tuple(row))
    return TransitionTable(tuple(speeds), d, tuple(achievable), tuple(times))


def rotation_cost(quarter_turns: int, params: KinematicParams) -> float:
    return quarter_turns * params.rot_time_quarter


class KinematicModel:
    """Params plus the speed set and transition table built from them.

    Immutable after construction and safe to share between searches.
    """

    def __init__(self, params: KinematicParams, cell_size: float = 1.0):
        self.params = params
        self.d = float(cell_size)
        self.speeds = tuple(build_speed_set(params))
        self.table = precompute_transitions(self.speeds, self.d, params)

    @property
    def achievable(self):
        return self.table.achievable

    @property
    def move_times(self):
        return self.table.move_time

    def __repr__(self):
        return f"KinematicModel({self.params!r}, cell_size={self.d})"
