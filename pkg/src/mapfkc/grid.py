"""Grid environment, agent tasks and instance I/O.

Coordinates are ``(x, y)`` with ``x`` the column and ``y`` the row, origin in
the top-left corner.  Headings map to unit steps as ``E=(+1, 0)``,
``W=(-1, 0)``, ``S=(0, +1)`` and ``N=(0, -1)``.
"""
from __future__ import annotations

import json
import random
from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Optional

Cell = tuple[int, int]


class MapParseError(ValueError):
    pass


class InstanceError(ValueError):
    pass


class Heading(IntEnum):
    N = 0
    E = 1
    S = 2
    W = 3

    @property
    def delta(self) -> Cell:
        return _DELTAS[self]

    def opposite(self) -> "Heading":
        return Heading((self + 2) % 4)

    def quarter_turns(self, other: "Heading") -> int:
        """Number of 90 degree turns between two headings (0, 1 or 2)."""
        diff = abs(int(self) - int(other)) % 4
        return min(diff, 4 - diff)

    @classmethod
    def parse(cls, value) -> "Heading":
        if isinstance(value, Heading):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip().upper()]
            except KeyError:
                raise InstanceError(f"unknown heading {value!r}") from None
        return cls(int(value))

    @classmethod
    def between(cls, a: Cell, b: Cell) -> "Heading":
        d = (b[0] - a[0], b[1] - a[1])
        for h, delta in _DELTAS.items():
            if delta == d:
                return h
        raise ValueError(f"cells {a} and {b} are not 4-adjacent")


_DELTAS = {Heading.N: (0, -1), Heading.E: (1, 0), Heading.S: (0, 1), Heading.W: (-1, 0)}


@dataclass(frozen=True)
class GridMap:
    width: int
    height: int
    blocked: frozenset = frozenset()
    cell_size: float = 1.0

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("grid dimensions must be positive")
        if self.cell_size <= 0:
            raise ValueError("cell_size must be positive")
        object.__setattr__(self, "blocked", frozenset(tuple(c) for c in self.blocked))
        for c in self.blocked:
            if not self.in_bounds(c):
                raise ValueError(f"blocked cell {c} out of bounds")

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_free(self, cell: Cell) -> bool:
        return self.in_bounds(cell) and cell not in self.blocked

    def free_cells(self) -> list[Cell]:
        return [(x, y) for y in range(self.height) for x in range(self.width)
                if (x, y) not in self.blocked]

    def step(self, cell: Cell, heading: Heading) -> Cell:
        dx, dy = heading.delta
        return (cell[0] + dx, cell[1] + dy)


def neighbors(grid: GridMap, cell: Cell) -> list[tuple[Cell, Heading]]:
    """Free 4-neighbours of ``cell`` in N, E, S, W order, with the heading
    pointing from ``cell`` to each neighbour."""
    out = []
    for h in Heading:
        nxt = grid.step(cell, h)
        if grid.is_free(nxt):
            out.append((nxt, h))
    return out


# ---------------------------------------------------------------- map files

BLOCKED_GLYPHS = frozenset("@T")
FREE_GLYPHS = frozenset(".")


def parse_map(text: str, cell_size: float = 1.0) -> GridMap:
    """Parse a MovingAI-style map (``type``/``height``/``width``/``map`` header)."""
    lines = text.splitlines()
    header: dict[str, str] = {}
    i = 0
    while i < len(lines):
        raw = lines[i].strip()
        i += 1
        if not raw:
            continue
        if raw.lower() == "map":
            break
        parts = raw.split()
        if len(parts) != 2 or parts[0].lower() not in ("type", "height", "width"):
            raise MapParseError(f"line {i}: malformed header line {raw!r}")
        header[parts[0].lower()] = parts[1]
    else:
        raise MapParseError("missing 'map' line")
    try:
        height = int(header["height"])
        width = int(header["width"])
    except KeyError as e:
        raise MapParseError(f"missing header field {e.args[0]!r}") from None
    except ValueError:
        raise MapParseError("height/width must be integers") from None
    if height <= 0 or width <= 0:
        raise MapParseError("height/width must be positive")

    rows = lines[i:i + height]
    if len(rows) < height:
        raise MapParseError(f"expected {height} map rows, found {len(rows)}")
    blocked = set()
    for y, row in enumerate(rows):
        lineno = i + y + 1
        row = row.rstrip("\r\n")
        if len(row) != width:
            raise MapParseError(f"line {lineno}: row has {len(row)} cells, expected {width}")
        for x, ch in enumerate(row):
            if ch in BLOCKED_GLYPHS:
                blocked.add((x, y))
            elif ch not in FREE_GLYPHS:
                raise MapParseError(f"line {lineno}: unknown glyph {ch!r}")
    for extra, row in enumerate(lines[i + height:]):
        if row.strip():
            raise MapParseError(f"line {i + height + extra + 1}: trailing content after map rows")
    return GridMap(width, height, frozenset(blocked), cell_size)


def serialize_map(grid: GridMap) -> str:
    rows = ["".join("@" if (x, y) in grid.blocked else "." for x in range(grid.width))
            for y in range(grid.height)]
    return "\n".join(["type octile", f"height {grid.height}", f"width {grid.width}", "map", *rows]) + "\n"


def load_map(path, cell_size: float = 1.0) -> GridMap:
    with open(path) as f:
        return parse_map(f.read(), cell_size)


# -------------------------------------------------------------- agent tasks

@dataclass(frozen=True)
class AgentTask:
    id: int
    start: Cell
    start_heading: Heading
    goal: Cell

    def __post_init__(self):
        object.__setattr__(self, "start", tuple(self.start))
        object.__setattr__(self, "goal", tuple(self.goal))
        object.__setattr__(self, "start_heading", Heading.parse(self.start_heading))


@dataclass(frozen=True)
class Instance:
    map: GridMap
    agents: tuple = ()
    kinematics: Optional[dict] = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "agents", tuple(self.agents))
        check_tasks(self.map, self.agents)

    def agent(self, agent_id: int) -> AgentTask:
        for a in self.agents:
            if a.id == agent_id:
                return a
        raise KeyError(agent_id)


def check_tasks(grid: GridMap, agents: Iterable[AgentTask]) -> None:
    ids, starts, goals = set(), set(), set()
    for a in agents:
        if a.id in ids:
            raise InstanceError(f"duplicate agent id {a.id}")
        ids.add(a.id)
        for what, c in (("start", a.start), ("goal", a.goal)):
            if not grid.is_free(c):
                raise InstanceError(f"agent {a.id}: {what} {c} is blocked or out of bounds")
        if a.start in starts:
            raise InstanceError(f"agent {a.id}: start {a.start} shared with another agent")
        if a.goal in goals:
            raise InstanceError(f"agent {a.id}: goal {a.goal} shared with another agent")
        starts.add(a.start)
        goals.add(a.goal)


def scenario_to_dict(agents: Iterable[AgentTask]) -> dict:
    return {"agents": [{"id": a.id, "start": list(a.start), "heading": a.start_heading.name,
                        "goal": list(a.goal)} for a in agents]}


def parse_scenario(data, grid: GridMap) -> Instance:
    if isinstance(data, str):
        data = json.loads(data)
    try:
        agents = [AgentTask(int(a["id"]), tuple(a["start"]), Heading.parse(a.get("heading", "E")),
                            tuple(a["goal"])) for a in data["agents"]]
    except (KeyError, TypeError, ValueError) as e:
        raise InstanceError(f"malformed scenario: {e}") from None
    return Instance(grid, agents)


def load_scenario(path, grid: GridMap) -> Instance:
    with open(path) as f:
        return parse_scenario(f.read(), grid)


# ---------------------------------------------------------- well-formedness

def _bfs(grid: GridMap, start: Cell, goal: Cell, forbidden) -> Optional[list[Cell]]:
    if start == goal:
        return [start]
    parent = {start: None}
    q = deque([start])
    while q:
        cur = q.popleft()
        for nxt, _ in neighbors(grid, cur):
            if nxt in parent or nxt in forbidden:
                continue
            parent[nxt] = cur
            if nxt == goal:
                path = [nxt]
                while parent[path[-1]] is not None:
                    path.append(parent[path[-1]])
                return path[::-1]
            q.append(nxt)
    return None


def is_well_formed(instance: Instance) -> tuple[bool, dict]:
    """Check that every agent can reach its goal without touching any other
    agent's start or goal cell.

    Returns ``(ok, witnesses)`` where ``witnesses`` maps agent id to one such
    cell path (only complete when ``ok``).
    """
    endpoints = {}
    for a in instance.agents:
        endpoints.setdefault(a.start, set()).add(a.id)
        endpoints.setdefault(a.goal, set()).add(a.id)
    witnesses = {}
    for a in instance.agents:
        forbidden = {c for c, owners in endpoints.items() if owners - {a.id}}
        if a.start in forbidden or a.goal in forbidden:
            return False, witnesses
        path = _bfs(instance.map, a.start, a.goal, forbidden)
        if path is None:
            return False, witnesses
        witnesses[a.id] = path
    return True, witnesses


# ------------------------------------------------------ instance generation

def endpoint_candidates(grid: GridMap) -> list[Cell]:
    """Free cells 4-adjacent to an obstacle, plus free station cells in column 0."""
    out = []
    for c in grid.free_cells():
        if c[0] == 0:
            out.append(c)
            continue
        for h in Heading:
            if grid.step(c, h) in grid.blocked:
                out.append(c)
                break
    return out


def generate_instance(grid: GridMap, n_agents: int, rng_seed: int,
                      max_retries: int = 200) -> Instance:
    """Random well-formed instance with endpoints drawn from
    :func:`endpoint_candidates` and random initial headings.

    All ``2 * n_agents`` endpoints are distinct.  Deterministic for a seed.
    """
    if n_agents < 0:
        raise InstanceError("n_agents must be non-negative")
    candidates = endpoint_candidates(grid)
    if len(candidates) < 2 * n_agents:
        raise InstanceError(f"map has {len(candidates)} candidate endpoints, "
                            f"need {2 * n_agents}")
    rng = random.Random(rng_seed)
    for _ in range(max_retries):
        cells = rng.sample(candidates, 2 * n_agents)
        agents = [AgentTask(i, cells[2 * i], Heading(rng.randrange(4)), cells[2 * i + 1])
                  for i in range(n_agents)]
        inst = Instance(grid, agents)
        if is_well_formed(inst)[0]:
            return inst
    raise InstanceError(f"no well-formed instance found in {max_retries} attempts")


# ---------------------------------------------------------- warehouse maps

WAREHOUSE_PRESETS = {
    # name: (height, width, block rows, block cols, block height, block width)
    "map1": (24, 46, 5, 5, 2, 5),
    "map2": (46, 142, 10, 10, 2, 10),
    "map3": (66, 352, 15, 15, 2, 20),
}


def warehouse_map(height: int, width: int, block_rows: int, block_cols: int,
                  block_h: int, block_w: int, gap_x: Optional[int] = None,
                  gap_y: Optional[int] = None, margin_left: Optional[int] = None,
                  margin_top: Optional[int] = None) -> GridMap:
    """Regular grid of rectangular shelf blocks.

    Gaps default to the even split of the free space; margins default to the
    gap plus half of the leftover so the layout is centred.  Column 0 is
    always kept free for stations.
    """
    def layout(total, n, size, gap, margin, axis):
        free = total - n * size
        if gap is None:
            gap = free // (n + 1)
        if margin is None:
            margin = gap + (free - gap * (n + 1)) // 2
        if gap < 1 or margin < 1 or margin + n * size + (n - 1) * gap > total - 1:
            raise ValueError(f"{n} blocks of {size} with gap {gap} and margin {margin} "
                             f"do not fit in {axis} {total}")
        return [margin + k * (size + gap) for k in range(n)]

    xs = layout(width, block_cols, block_w, gap_x, margin_left, "width")
    ys = layout(height, block_rows, block_h, gap_y, margin_top, "height")
    blocked = {(x0 + dx, y0 + dy) for x0 in xs for y0 in ys
               for dx in range(block_w) for dy in range(block_h)}
    return GridMap(width, height, frozenset(blocked))


def preset_map(name: str, **spacing) -> GridMap:
    try:
        h, w, br, bc, bh, bw = WAREHOUSE_PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(WAREHOUSE_PRESETS)}") from None
    return warehouse_map(h, w, br, bc, bh, bw, **spacing)
