"""FindGoal: a seeded maze with goal rooms, and a scripted BFS expert."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .encoder import Cell, Heading, Observation
from .rng import mix


class Action(IntEnum):
    FORWARD = 0
    TURN_LEFT = 1
    TURN_RIGHT = 2
    NOOP = 3


N_ACTIONS = len(Action)
# (row, col) displacement per heading; row grows southwards
STEP = {Heading.N: (-1, 0), Heading.E: (0, 1), Heading.S: (1, 0), Heading.W: (0, -1)}


@dataclass(frozen=True)
class GridConfig:
    width: int = 17
    height: int = 17
    window_size: int = 3
    goal_rooms: int = 4
    goal_room_size: int = 3
    braid: float = 0.5  # chance of opening each dead end into a loop
    open_fraction: float = 0.4  # share of remaining inner wall segments knocked out
    min_spawn_distance: int = 10
    egocentric: bool = True

    def __post_init__(self):
        if self.width < 5 or self.height < 5 or self.width % 2 == 0 or self.height % 2 == 0:
            raise ValueError("width and height must be odd and >= 5")
        if self.window_size < 3 or self.window_size % 2 == 0:
            raise ValueError("window_size must be odd and >= 3")
        if self.goal_rooms < 1 or self.goal_room_size < 1:
            raise ValueError("need at least one goal room of size >= 1")
        if not 0.0 <= self.braid <= 1.0:
            raise ValueError("braid must lie in [0, 1]")
        if not 0.0 <= self.open_fraction <= 1.0:
            raise ValueError("open_fraction must lie in [0, 1]")


def generate_map(seed: int, cfg: GridConfig) -> np.ndarray:
    """Carve a braided maze and stamp goal rooms; a pure function of ``seed``."""
    rng = np.random.default_rng(mix(seed, 0x4D4150))
    h, w = cfg.height, cfg.width
    grid = np.full((h, w), Cell.WALL, dtype=np.int8)
    rh, rw = (h - 1) // 2, (w - 1) // 2

    # randomized DFS over rooms at odd coordinates
    visited = np.zeros((rh, rw), dtype=bool)
    start = (int(rng.integers(rh)), int(rng.integers(rw)))
    stack = [start]
    visited[start] = True
    grid[2 * start[0] + 1, 2 * start[1] + 1] = Cell.EMPTY
    while stack:
        r, c = stack[-1]
        options = [
            (r + dr, c + dc)
            for dr, dc in ((-1, 0), (0, 1), (1, 0), (0, -1))
            if 0 <= r + dr < rh and 0 <= c + dc < rw and not visited[r + dr, c + dc]
        ]
        if not options:
            stack.pop()
            continue
        nr, nc = options[int(rng.integers(len(options)))]
        visited[nr, nc] = True
        grid[r + nr + 1, c + nc + 1] = Cell.EMPTY
        grid[2 * nr + 1, 2 * nc + 1] = Cell.EMPTY
        stack.append((nr, nc))

    # braid: knock a wall out of some dead ends
    for r in range(rh):
        for c in range(rw):
            y, x = 2 * r + 1, 2 * c + 1
            inner = [
                (y + dy, x + dx)
                for dy, dx in ((-1, 0), (0, 1), (1, 0), (0, -1))
                if 0 < y + 2 * dy < h and 0 < x + 2 * dx < w
            ]
            walls = [p for p in inner if grid[p] == Cell.WALL]
            if len(inner) - len(walls) == 1 and walls and rng.random() < cfg.braid:
                wy, wx = walls[int(rng.integers(len(walls)))]
                grid[wy, wx] = Cell.EMPTY

    # open up the maze: wall segments between two room cells, then pillars stay
    if cfg.open_fraction > 0:
        segments = [
            (y, x)
            for y in range(1, h - 1)
            for x in range(1, w - 1)
            if grid[y, x] == Cell.WALL and (y % 2) != (x % 2)
        ]
        for y, x in segments:
            if rng.random() < cfg.open_fraction:
                grid[y, x] = Cell.EMPTY

    # goal rooms centred on room cells, clipped to the interior
    half = cfg.goal_room_size // 2
    for _ in range(cfg.goal_rooms):
        cy = 2 * int(rng.integers(rh)) + 1
        cx = 2 * int(rng.integers(rw)) + 1
        y0, y1 = max(1, cy - half), min(h - 1, cy - half + cfg.goal_room_size)
        x0, x1 = max(1, cx - half), min(w - 1, cx - half + cfg.goal_room_size)
        grid[y0:y1, x0:x1] = Cell.GOAL
    return grid


def goal_distances(grid: np.ndarray) -> np.ndarray:
    """Cell-step BFS distance from every cell to the nearest goal (-1 if unreachable)."""
    h, w = grid.shape
    dist = np.full((h, w), -1, dtype=np.int64)
    queue = deque()
    for y, x in zip(*np.nonzero(grid == Cell.GOAL)):
        dist[y, x] = 0
        queue.append((int(y), int(x)))
    while queue:
        y, x = queue.popleft()
        for dy, dx in STEP.values():
            ny, nx = y + dy, x + dx
            if 0 <= ny < h and 0 <= nx < w and grid[ny, nx] != Cell.WALL and dist[ny, nx] < 0:
                dist[ny, nx] = dist[y, x] + 1
                queue.append((ny, nx))
    return dist


def choose_spawn(grid: np.ndarray, spawn_seed: int, min_distance: int) -> tuple[tuple[int, int], Heading]:
    """Pick a non-goal cell at least ``min_distance`` cell steps from every goal.

    Falls back to the farthest reachable cells when the map has none that far.
    """
    dist = goal_distances(grid)
    far = np.argwhere(dist >= max(min_distance, 1))
    if len(far) == 0:
        far = np.argwhere(dist == dist.max())
    rng = np.random.default_rng(mix(spawn_seed, 0x535041574E))
    y, x = far[int(rng.integers(len(far)))]
    return (int(y), int(x)), Heading(int(rng.integers(4)))


class GridWorld:
    """Deterministic FindGoal environment.

    ``reset(seed)`` builds the map from ``seed``; the spawn comes from
    ``spawn_seed`` (defaults to ``seed``), so repeated runs on one map can
    start from different places.
    """

    n_actions = N_ACTIONS

    def __init__(self, cfg: GridConfig | None = None):
        self.cfg = cfg or GridConfig()
        self.grid: np.ndarray | None = None
        self.position = (0, 0)
        self.heading = Heading.N
        self.tick = 0
        self.seed = None

    def reset(self, seed: int, spawn_seed: int | None = None) -> Observation:
        self.seed = seed
        self.grid = generate_map(seed, self.cfg)
        self.position, self.heading = choose_spawn(
            self.grid, seed if spawn_seed is None else spawn_seed, self.cfg.min_spawn_distance
        )
        self.tick = 0
        return self.observe()

    def place(self, position: tuple[int, int], heading: Heading) -> Observation:
        """Teleport the agent (test and expert-planning helper)."""
        y, x = position
        if self.grid[y, x] == Cell.WALL:
            raise ValueError(f"cannot place agent inside a wall at {position}")
        self.position, self.heading = (int(y), int(x)), Heading(heading)
        return self.observe()

    @property
    def in_goal(self) -> bool:
        return bool(self.grid[self.position] == Cell.GOAL)

    def passable(self, y: int, x: int) -> bool:
        h, w = self.grid.shape
        return 0 <= y < h and 0 <= x < w and self.grid[y, x] != Cell.WALL

    def step(self, action) -> Observation:
        if self.grid is None:
            raise RuntimeError("step() called before reset()")
        try:
            action = Action(int(action))
        except ValueError:
            raise ValueError(f"unknown action id {action!r}") from None
        self.position, self.heading = transition(self.grid, self.position, self.heading, action)
        self.tick += 1
        return self.observe()

    def observe(self) -> Observation:
        view = window(self.grid, self.position, self.heading if self.cfg.egocentric else Heading.N, self.cfg.window_size)
        return Observation(view, self.heading, self.tick)


def transition(grid: np.ndarray, position, heading: Heading, action: Action):
    """Next (position, heading); moving into a wall or off the map leaves position unchanged."""
    if action == Action.TURN_LEFT:
        return position, Heading((heading - 1) % 4)
    if action == Action.TURN_RIGHT:
        return position, Heading((heading + 1) % 4)
    if action == Action.FORWARD:
        dy, dx = STEP[heading]
        y, x = position[0] + dy, position[1] + dx
        h, w = grid.shape
        if 0 <= y < h and 0 <= x < w and grid[y, x] != Cell.WALL:
            return (y, x), heading
    return position, heading


def window(grid: np.ndarray, position, heading: Heading, size: int) -> np.ndarray:
    """Egocentric ``size`` x ``size`` view: agent at the centre, facing up."""
    r = size // 2
    padded = np.pad(grid, r, constant_values=Cell.OUT_OF_BOUNDS)
    y, x = position
    view = padded[y : y + size, x : x + size]
    # rot90 turns counter-clockwise: facing E needs one turn to bring E to the top
    return np.ascontiguousarray(np.rot90(view, k=int(heading)))


# --------------------------------------------------------------------- expert


@dataclass
class Demonstration:
    seed: int
    observations: list[Observation] = field(default_factory=list)
    actions: list[int] = field(default_factory=list)
    spawn_seed: int | None = None

    @property
    def in_goal_flags(self) -> list[bool]:
        return [o.in_goal for o in self.observations]


def shortest_plan(grid: np.ndarray, position, heading: Heading) -> list[Action]:
    """Fewest FORWARD/TURN actions from (position, heading) into any goal cell.

    BFS over (cell, heading) states; expansions in FORWARD, LEFT, RIGHT order
    make the plan deterministic.
    """
    start = (position, Heading(heading))
    if grid[position] == Cell.GOAL:
        return []
    parent = {start: None}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for action in (Action.FORWARD, Action.TURN_LEFT, Action.TURN_RIGHT):
            nxt = transition(grid, state[0], state[1], action)
            if nxt in parent:
                continue
            parent[nxt] = (state, action)
            if grid[nxt[0]] == Cell.GOAL:
                plan = []
                node = nxt
                while parent[node] is not None:
                    node, a = parent[node]
                    plan.append(a)
                return plan[::-1]
            queue.append(nxt)
    raise RuntimeError(f"no goal reachable from {position}")


def detour_turn(env: GridWorld, rng: np.random.Generator) -> Action | None:
    """A turn towards a passable side cell, chosen at random; None if boxed in."""
    options = []
    for turn in (Action.TURN_LEFT, Action.TURN_RIGHT):
        _, heading = transition(env.grid, env.position, env.heading, turn)
        dy, dx = STEP[heading]
        if env.passable(env.position[0] + dy, env.position[1] + dx):
            options.append(turn)
    if not options:
        return None
    return options[int(rng.integers(len(options)))]


def generate_expert_demo(
    seed: int,
    detour_probability: float = 0.2,
    env: GridWorld | None = None,
    required_consecutive: int = 5,
    extra_dwell: int = 3,
    spawn_seed: int | None = None,
) -> Demonstration:
    """Scripted demonstration on map ``seed``: shortest path to a goal, then dwell.

    With probability ``detour_probability`` per step the expert sidesteps
    (turn towards a random open side cell, move forward) and replans.  Once inside the goal it spends
    ``required_consecutive + extra_dwell`` frames turning or idling there.
    ``spawn_seed`` overrides the start position (the map stays that of ``seed``).
    """
    if not 0.0 <= detour_probability < 1.0:
        raise ValueError("detour_probability must lie in [0, 1)")
    env = env or GridWorld()
    rng = np.random.default_rng(mix(seed, 0x4558504552))
    demo = Demonstration(seed, spawn_seed=seed if spawn_seed is None else spawn_seed)
    obs = env.reset(seed, spawn_seed)

    def act(a):
        nonlocal obs
        demo.observations.append(obs)
        demo.actions.append(int(a))
        obs = env.step(a)

    plan = shortest_plan(env.grid, env.position, env.heading)
    while not env.in_goal:
        if detour_probability > 0 and rng.random() < detour_probability:
            turn = detour_turn(env, rng)
            if turn is not None:
                act(turn)
                act(Action.FORWARD)
                plan = shortest_plan(env.grid, env.position, env.heading)
                continue
        act(plan.pop(0))

    for _ in range(required_consecutive + extra_dwell):
        act(Action(int(rng.integers(1, 4))))  # TURN_LEFT, TURN_RIGHT or NOOP: never leaves the room
    return demo
