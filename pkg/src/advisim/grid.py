"""Dynamic grid world.

A height x width board with one fixed goal, static freeway cells (small
positive reward), and obstacles that take a uniformly random one-cell move
after every full pass of agent moves. Agents move one cell in the four
compass directions or stay; moving off the board keeps the agent in place
and costs the wall penalty. Cells are indexed row-major: ``s = x * width + y``.

Rewards follow the precedence goal > obstacle > freeway > wall bump, else
zero; obstacle and freeway cells pay on entry only, never for staying put.
With ``obstacle_hop`` obstacles relocate uniformly instead of stepping;
with ``obstacle_block`` an occupied cell refuses entry (the mover stays
put and still pays the obstacle penalty). The episode ends when any agent
stands on the goal after a full pass, or when the step limit is reached.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .rng import ENV_STREAM, Stream

N_ACTIONS = 5
UP, DOWN, LEFT, RIGHT, STAY = range(N_ACTIONS)

REWARD_GOAL = 10.0
REWARD_FREEWAY = 0.5
REWARD_OBSTACLE = -1.5
REWARD_WALL = -0.5


@dataclass
class StepResult:
    state: int
    reward: float
    done: bool


@dataclass
class GridWorld:
    """Mutable board state. Build with :func:`make_world`, or directly for
    hand-crafted layouts (tests do)."""

    height: int
    width: int
    goal: tuple[int, int]
    positions: np.ndarray  # (n_agents, 2) int64
    obstacles: np.ndarray  # (n_obstacles, 2) int64
    freeways: np.ndarray  # (n_freeways, 2) int64
    step_limit: int = 1000
    obstacle_hop: bool = False
    obstacle_block: bool = False
    phi_goal: float = REWARD_GOAL
    phi_freeway: float = REWARD_FREEWAY
    phi_obstacle: float = REWARD_OBSTACLE
    phi_wall: float = REWARD_WALL
    steps: int = 0
    winner: int = -1
    # landing-cell lookup tables, kept in sync with the entity arrays
    cell_obstacle: np.ndarray = field(default=None, repr=False)
    cell_freeway: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=np.int64).reshape(-1, 2)
        self.obstacles = np.asarray(self.obstacles, dtype=np.int64).reshape(-1, 2)
        self.freeways = np.asarray(self.freeways, dtype=np.int64).reshape(-1, 2)
        size = self.height * self.width
        if self.cell_obstacle is None:
            self.cell_obstacle = np.zeros(size, dtype=np.int64)
            for x, y in self.obstacles:
                self.cell_obstacle[x * self.width + y] += 1
        if self.cell_freeway is None:
            self.cell_freeway = np.zeros(size, dtype=np.uint8)
            for x, y in self.freeways:
                self.cell_freeway[x * self.width + y] = 1

    @property
    def n_agents(self) -> int:
        return self.positions.shape[0]

    @property
    def n_states(self) -> int:
        return self.height * self.width

    @property
    def goal_state(self) -> int:
        return self.goal[0] * self.width + self.goal[1]

    @property
    def done(self) -> bool:
        return self.winner >= 0 or self.steps >= self.step_limit


def make_world(height: int, width: int, n_agents: int, n_obstacles: int,
               rng: Stream, n_freeways: int | None = None,
               goal: tuple[int, int] | None = None,
               step_limit: int = 1000, obstacle_hop: bool = False,
               obstacle_block: bool = False) -> GridWorld:
    """Build a world: freeways fixed for its lifetime, agents and obstacles
    placed by :func:`reset`.

    Density default for freeways: 2 per 25 cells. The goal defaults to the
    grid center; with the 0.8 discount a central goal outvalues freeway
    round-trips from every cell, a corner goal does not.
    """
    if goal is None:
        goal = (height // 2, width // 2)
    if n_freeways is None:
        n_freeways = 2 * height * width // 25
    size = height * width
    if n_agents + n_obstacles + 1 > size:
        raise ValueError(
            f"grid {height}x{width} cannot hold {n_agents} agents, "
            f"{n_obstacles} obstacles and a goal on distinct cells")
    if n_freeways + 1 > size:
        raise ValueError("more freeway cells than the grid can hold")
    freeways = np.zeros((n_freeways, 2), dtype=np.int64)
    cell_freeway = np.zeros(size, dtype=np.uint8)
    kernels.place_freeways(height, width, goal[0], goal[1], freeways,
                           cell_freeway, rng.states)
    world = GridWorld(
        height=height, width=width, goal=goal,
        positions=np.zeros((n_agents, 2), dtype=np.int64),
        obstacles=np.zeros((n_obstacles, 2), dtype=np.int64),
        freeways=freeways, step_limit=step_limit, obstacle_hop=obstacle_hop,
        obstacle_block=obstacle_block,
        cell_obstacle=np.zeros(size, dtype=np.int64),
        cell_freeway=cell_freeway)
    reset(world, rng)
    return world


def reset(world: GridWorld, rng: Stream) -> GridWorld:
    """Re-place agents and obstacles on distinct non-goal cells and clear
    the episode counters. Identical stream state gives identical placement."""
    kernels.reset_entities(world.height, world.width, world.goal[0],
                           world.goal[1], world.obstacles,
                           world.cell_obstacle, world.positions, rng.states)
    world.steps = 0
    world.winner = -1
    return world


def encode_state(world: GridWorld, agent: int) -> int:
    """Row-major cell index of the agent; inverse is divmod(s, width)."""
    return int(world.positions[agent, 0] * world.width + world.positions[agent, 1])


def step(world: GridWorld, agent: int, action: int, rng: Stream | None = None) -> StepResult:
    """Move one agent and score its landing cell.

    Obstacle dynamics are a per-pass affair, not per agent move; advance
    them with :func:`advance_obstacles` after every agent has moved (or use
    :func:`tick`). ``rng`` is accepted for interface symmetry and unused.
    """
    if not 0 <= action < N_ACTIONS:
        raise ValueError(f"action {action} outside the 5-action set")
    if world.done:
        raise RuntimeError("episode already finished; reset the world first")
    x, y = world.positions[agent]
    nx, ny, bumped = kernels.apply_action(int(x), int(y), action,
                                          world.height, world.width)
    s = int(x) * world.width + int(y)
    ns = nx * world.width + ny
    if (world.obstacle_block and ns != s and ns != world.goal_state
            and world.cell_obstacle[ns] > 0):
        # blocking obstacles: the move is refused, the penalty still applies
        nx, ny, ns = int(x), int(y), s
        r = world.phi_obstacle
    else:
        r = kernels.cell_reward(ns, s, bumped, world.goal_state,
                                world.cell_obstacle, world.cell_freeway,
                                world.phi_goal, world.phi_freeway,
                                world.phi_obstacle, world.phi_wall)
    world.positions[agent, 0] = nx
    world.positions[agent, 1] = ny
    if ns == world.goal_state and world.winner < 0:
        world.winner = agent
    return StepResult(state=ns, reward=float(r), done=ns == world.goal_state)


def advance_obstacles(world: GridWorld, rng: Stream) -> None:
    """One draw per obstacle from the environment stream: a uniform step
    (or relocation when ``obstacle_hop``); draws that would leave the grid
    or land on the goal are discarded, so obstacles never occupy the goal
    and consumption per tick is fixed."""
    kernels.move_obstacles(world.obstacles, world.cell_obstacle, world.height,
                           world.width, world.goal[0], world.goal[1],
                           1 if world.obstacle_hop else 0,
                           rng.view(ENV_STREAM).states)


def tick(world: GridWorld, actions, rng: Stream) -> list[StepResult]:
    """One full pass: every agent moves in id order, then obstacles
    relocate (skipped when the pass ended the episode)."""
    results = [step(world, i, a) for i, a in enumerate(actions)]
    world.steps += 1
    if world.winner < 0 and world.steps < world.step_limit:
        advance_obstacles(world, rng)
    return results
