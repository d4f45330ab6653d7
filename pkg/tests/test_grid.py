import random

import pytest
from hypothesis import given, settings, strategies as st

from mapfkc.grid import (AgentTask, GridMap, Heading, Instance, InstanceError, MapParseError,
                         endpoint_candidates, generate_instance, is_well_formed, neighbors, parse_map,
                         parse_scenario, preset_map, scenario_to_dict, serialize_map, warehouse_map)
from oracles import bfs_well_formed


def test_heading_deltas_and_turns():
    assert Heading.E.delta == (1, 0)
    assert Heading.N.delta == (0, -1)
    assert Heading.E.quarter_turns(Heading.N) == 1
    assert Heading.E.quarter_turns(Heading.W) == 2
    assert Heading.parse("s") is Heading.S
    with pytest.raises(ValueError):
        Heading.parse("up")


def test_parse_map_basic():
    g = parse_map("type octile\nheight 2\nwidth 3\nmap\n.@.\nT..\n")
    assert (g.width, g.height) == (3, 2)
    assert g.blocked == {(1, 0), (0, 1)}
    assert not g.is_free((1, 0)) and g.is_free((2, 1))
    assert not g.in_bounds((3, 0))


def test_parse_map_errors_name_the_line():
    with pytest.raises(MapParseError, match="line 6"):
        parse_map("type octile\nheight 2\nwidth 3\nmap\n...\n..\n")
    with pytest.raises(MapParseError):
        parse_map("height 2\nwidth x\nmap\n")


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 9), st.integers(1, 9), st.data())
def test_map_round_trip(w, h, data):
    cells = [(x, y) for x in range(w) for y in range(h)]
    blocked = data.draw(st.sets(st.sampled_from(cells)))
    g = GridMap(w, h, frozenset(blocked))
    assert parse_map(serialize_map(g)) == g


def test_neighbors():
    g = GridMap(5, 5, frozenset())
    assert [h for _, h in neighbors(g, (2, 2))] == [Heading.N, Heading.E, Heading.S, Heading.W]
    assert len(neighbors(g, (0, 0))) == 2
    walled = GridMap(3, 3, frozenset({(1, 0), (0, 1), (2, 1), (1, 2)}))
    assert neighbors(walled, (1, 1)) == []


def test_instance_rejects_shared_or_blocked_endpoints():
    g = GridMap(4, 1, frozenset({(3, 0)}))
    with pytest.raises(InstanceError):
        Instance(g, [AgentTask(0, (0, 0), "E", (2, 0)), AgentTask(1, (1, 0), "E", (2, 0))])
    with pytest.raises(InstanceError):
        Instance(g, [AgentTask(0, (0, 0), "E", (3, 0))])


def test_well_formed_examples():
    g = GridMap(5, 5, frozenset())
    ok, w = is_well_formed(Instance(g, [AgentTask(0, (0, 0), "E", (4, 4)), AgentTask(1, (4, 0), "S", (0, 4))]))
    assert ok and set(w) == {0, 1}
    # corridor with another agent's goal in the way
    c = GridMap(5, 1, frozenset())
    ok, _ = is_well_formed(Instance(c, [AgentTask(0, (0, 0), "E", (4, 0)), AgentTask(1, (3, 0), "E", (2, 0))]))
    assert not ok
    ok, w = is_well_formed(Instance(g, [AgentTask(0, (1, 1), "E", (1, 1))]))
    assert ok and w[0] == [(1, 1)]


def test_well_formed_agrees_with_independent_bfs():
    rng = random.Random(5)
    for _ in range(100):
        w, h = rng.randint(2, 7), rng.randint(2, 7)
        cells = [(x, y) for x in range(w) for y in range(h)]
        blocked = {c for c in cells if rng.random() < 0.25}
        free = [c for c in cells if c not in blocked]
        n = rng.randint(1, min(3, len(free) // 2)) if len(free) >= 2 else 0
        pts = rng.sample(free, 2 * n)
        pairs = [(pts[2 * i], pts[2 * i + 1]) for i in range(n)]
        inst = Instance(GridMap(w, h, frozenset(blocked)),
                        [AgentTask(i, s, "E", g) for i, (s, g) in enumerate(pairs)])
        assert is_well_formed(inst)[0] == bfs_well_formed(w, h, blocked, pairs)


def test_presets_have_warehouse_layouts():
    m1 = preset_map("map1")
    assert (m1.height, m1.width) == (24, 46)
    assert len(m1.blocked) == 25 * 2 * 5
    m3 = preset_map("map3")
    assert (m3.height, m3.width) == (66, 352)
    assert len(m3.blocked) == 225 * 2 * 20
    m2 = preset_map("map2")
    assert (m2.height, m2.width) == (46, 142)
    for m in (m1, m2, m3):
        assert all(m.is_free((0, y)) for y in range(m.height))


def test_warehouse_spacing_that_does_not_fit():
    with pytest.raises(ValueError):
        preset_map("map1", gap_x=10)
    with pytest.raises(ValueError):
        warehouse_map(10, 10, 4, 4, 2, 2)


def test_generated_instances():
    g = preset_map("map1")
    inst = generate_instance(g, 20, 7)
    cand = set(endpoint_candidates(g))
    assert len(inst.agents) == 20
    cells = [c for a in inst.agents for c in (a.start, a.goal)]
    assert len(set(cells)) == 40
    assert all(c in cand for c in cells)
    assert all(c[0] == 0 or any(g.step(c, h) in g.blocked for h in Heading) for c in cells)
    assert is_well_formed(inst)[0]
    assert generate_instance(g, 20, 7) == inst
    assert generate_instance(g, 0, 1).agents == ()


def test_generation_fails_without_candidates():
    with pytest.raises(InstanceError):
        generate_instance(GridMap(3, 1, frozenset()), 5, 0)


def test_scenario_round_trip():
    g = preset_map("map1")
    inst = generate_instance(g, 5, 1)
    back = parse_scenario(scenario_to_dict(inst.agents), g)
    assert back == inst
    with pytest.raises(InstanceError):
        parse_scenario({"agents": [{"id": 0, "start": [0, 0]}]}, g)
