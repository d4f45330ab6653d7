import dataclasses
import math

import pytest

from mapfkc.grid import AgentTask, GridMap, Heading, Instance, generate_instance, preset_map
from mapfkc.kinematics import KinematicModel, KinematicParams
from mapfkc.planner import Solution, plan
from mapfkc.reservation import sweep_of_plan
from mapfkc.search import Action, Path
from mapfkc.validator import (PlanStructureError, collisions, occupancy, validate_agent,
                              validate_solution)

P = KinematicParams(2, 1, 1, 1, 1)
E = Heading.E
G = GridMap(6, 6, frozenset())


def mv(t0, t1, a, b, v0=0.0, v1=0.0, h=E):
    return Action("move", t0, t1, a, b, v0, v1, h, h)


def kinds(viol):
    return sorted({v.kind for v in viol})


def test_legal_plan():
    p = Path((0, 0), E, (2, 0), [mv(0, 2, (0, 0), (1, 0), 0, 1), mv(2, 4, (1, 0), (2, 0), 1, 0)])
    assert validate_agent(p, G, P) == []


def test_over_acceleration():
    p = Path((0, 0), E, (2, 0), [mv(0, 1, (0, 0), (1, 0), 0, 2), mv(1, 2, (1, 0), (2, 0), 2, 0)])
    assert kinds(validate_agent(p, G, P)) == ["accel-bound"]


def test_speed_bound():
    p = Path((0, 0), E, (3, 0), [mv(0, 0.8, (0, 0), (1, 0), 2, 3)])
    assert "speed-bound" in kinds(validate_agent(p, G, KinematicParams(2, 9, 9, 1)))


def test_rotation_while_moving():
    acts = [mv(0, 2, (0, 0), (1, 0), 0, 1),
            Action("rotate", 2, 3, (1, 0), (1, 0), 1, 1, E, Heading.S),
            mv(3, 5, (1, 0), (1, 1), 1, 0, Heading.S)]
    assert "rotation-while-moving" in kinds(validate_agent(Path((0, 0), E, (1, 1), acts), G, P))
    # turning at a corner without stopping
    acts = [mv(0, 2, (0, 0), (1, 0), 0, 1), mv(2, 4, (1, 0), (1, 1), 1, 0, Heading.S)]
    assert kinds(validate_agent(Path((0, 0), E, (1, 1), acts), G, P)) == ["rotation-while-moving"]
    # rotation shorter than the quarter-turn time
    acts = [Action("rotate", 0, 0.5, (0, 0), (0, 0), 0, 0, E, Heading.S)]
    assert kinds(validate_agent(Path((0, 0), E, (0, 0), acts), G, P)) == ["rotation-while-moving"]


def test_teleport():
    acts = [mv(0, 2, (0, 0), (1, 0)), mv(2, 4, (2, 0), (3, 0))]
    assert kinds(validate_agent(Path((0, 0), E, (3, 0), acts), G, P)) == ["teleport"]
    acts = [mv(0, 2, (0, 0), (2, 0))]
    assert "teleport" in kinds(validate_agent(Path((0, 0), E, (2, 0), acts), G, P))
    acts = [mv(0, 2, (0, 0), (1, 0)), mv(3, 5, (1, 0), (2, 0))]
    assert kinds(validate_agent(Path((0, 0), E, (2, 0), acts), G, P)) == ["teleport"]


def test_goal_not_held():
    acts = [mv(0, 2, (0, 0), (1, 0), 0, 1)]
    assert kinds(validate_agent(Path((0, 0), E, (1, 0), acts), G, P)) == ["goal-not-held"]
    acts = [mv(0, 2, (0, 0), (1, 0))]
    assert kinds(validate_agent(Path((0, 0), E, (2, 0), acts), G, P)) == ["goal-not-held"]


def test_structure_errors():
    bad = [Action("jump", 0, 1, (0, 0), (0, 0))]
    with pytest.raises(PlanStructureError):
        validate_agent(Path((0, 0), E, (0, 0), bad), G, P)


def _solution(paths, params=P):
    return Solution(paths=paths, params=params)


def test_disjoint_crossing_and_overlapping_sweeps():
    g = GridMap(6, 6, frozenset())
    a = Path((2, 2), E, (4, 2), [mv(0, 2, (2, 2), (3, 2)), mv(2, 4, (3, 2), (4, 2))])
    b = Path((3, 1), Heading.S, (3, 3), [Action("wait", 0, 4, (3, 1), (3, 1), 0, 0, Heading.S, Heading.S),
                                         mv(4, 6, (3, 1), (3, 2), h=Heading.S), mv(6, 8, (3, 2), (3, 3), h=Heading.S)])
    inst = Instance(g, [AgentTask(0, (2, 2), E, (4, 2)), AgentTask(1, (3, 1), Heading.S, (3, 3))])
    assert validate_solution(_solution({0: a, 1: b}), inst) == []
    # b leaves one second too early: both sweep (3,2)
    b2 = Path((3, 1), Heading.S, (3, 3), [Action("wait", 0, 3, (3, 1), (3, 1), 0, 0, Heading.S, Heading.S),
                                          mv(3, 5, (3, 1), (3, 2), h=Heading.S), mv(5, 7, (3, 2), (3, 3), h=Heading.S)])
    viol = validate_solution(_solution({0: a, 1: b2}), inst)
    assert kinds(viol) == ["collision"]
    assert (3, 2) in {v.cell for v in viol}


def test_constructed_overlap():
    occ = {0: {(3, 2): [[1.0, 3.0]]}, 1: {(3, 2): [[2.0, 4.0]]}}
    viol = collisions(occ)
    assert len(viol) == 1 and viol[0].cell == (3, 2) and viol[0].agents == (0, 1)
    assert collisions({0: {(3, 2): [[1.0, 3.0]]}, 1: {(3, 2): [[3.0, 4.0]]}}) == []


def test_parked_agent_is_hit():
    g = GridMap(6, 6, frozenset())
    a = Path((1, 0), E, (2, 0), [mv(0, 2, (1, 0), (2, 0))])
    c = Path((0, 0), E, (3, 0), [Action("wait", 0, 5, (0, 0), (0, 0)),
                                  mv(5, 7, (0, 0), (1, 0)), mv(7, 9, (1, 0), (2, 0)), mv(9, 11, (2, 0), (3, 0))])
    inst = Instance(g, [AgentTask(0, (1, 0), E, (2, 0)), AgentTask(1, (0, 0), E, (3, 0))])
    viol = validate_solution(_solution({0: a, 1: c}), inst)
    assert kinds(viol) == ["collision"] and (2, 0) in {v.cell for v in viol}


def test_occupancy_matches_planner_sweeps():
    g = preset_map("map1")
    inst = generate_instance(g, 12, 5)
    for step in (0.25, 0.66, 1.0):
        sol = plan(inst, KinematicModel(KinematicParams(2, 1, 1, step)))
        for path in sol.paths.values():
            occ = occupancy(path)
            sweep = {}
            for r in sweep_of_plan(path):
                sweep.setdefault(r.cell, []).append([r.interval.start, r.interval.end])
            assert occ.keys() == sweep.keys()
            for c in occ:
                assert len(occ[c]) == len(sweep[c])
                for (s1, e1), (s2, e2) in zip(occ[c], sweep[c]):
                    assert s1 == pytest.approx(s2, abs=1e-6)
                    assert e1 == pytest.approx(e2, abs=1e-6) or e1 == e2 == math.inf


def test_injected_faults_on_real_plan():
    g = preset_map("map1")
    inst = generate_instance(g, 10, 9)
    sol = plan(inst, KinematicModel(P))
    assert validate_solution(sol, inst) == []
    aid = next(i for i, p in sol.paths.items() if len(p.actions) > 3)
    path = sol.paths[aid]

    def with_actions(acts):
        paths = dict(sol.paths)
        paths[aid] = dataclasses.replace(path, actions=acts)
        return Solution(paths=paths, params=sol.params)

    k = next(i for i, a in enumerate(path.actions) if a.kind == "move")
    a = path.actions[k]
    # teleport: shift the move one cell sideways
    off = (a.cell_from[0], a.cell_from[1] + 30)
    acts = list(path.actions)
    acts[k] = dataclasses.replace(a, cell_from=off)
    assert kinds(validate_solution(with_actions(acts), inst)) == ["teleport"]
    # over-acceleration: squeeze a stop-to-stop or accelerating move
    acts = list(path.actions)
    acts[k] = dataclasses.replace(a, v_end=a.v_end + 2.0, t_end=a.t_start + 2 / (a.v_start + a.v_end + 2.0))
    assert "accel-bound" in kinds(validate_solution(with_actions(acts), inst))
    # overlapping sweeps: two agents following the same plan
    other = next(i for i in sol.paths if i != aid)
    paths = dict(sol.paths)
    paths[other] = dataclasses.replace(path)
    viol = validate_solution(Solution(paths=paths, params=sol.params), inst)
    assert "collision" in kinds(viol)
