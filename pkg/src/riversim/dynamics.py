"""Excitement diffusion and per-tick agent behavior.

Each tick every cell takes mu/8 of the summed excitement of its Moore
neighbors (the divisor stays 8 at boundaries, so the field contracts),
hotspot sources are re-clamped to their base level, and non-walkable cells
stay pinned at zero. An agent's utility is its neighborhood excitement
average minus a penalty that grows with neighboring agents' previous-tick
utilities (crowding) and with garbage around the cell (dirtiness).

Wanderers pick a hotspot with probability proportional to base excitement,
walk downhill on that hotspot's BFS distance field, dwell a geometric number
of ticks, then pick the next one. Residents do a home-anchored random walk.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .landscape import MOORE_OFFSETS, Coord, Hotspot, TerrainGrid

# The interaction neighborhood is the 8 surrounding cells; not configurable.
NEIGHBORHOOD_SIZE = 8

# Events reported by step_agent.
RETARGETED = "retargeted"
MOVED = "moved"
ARRIVED = "arrived"
DWELLING = "dwelling"
DWELL_ENDED = "dwell_ended"


class AgentStateError(RuntimeError):
    """An agent broke a movement invariant (e.g. stands on water)."""


class AgentKind(Enum):
    RESIDENT = "Resident"
    VISITOR = "Visitor"
    COMMUNITY_MEMBER = "CommunityMember"


@dataclass
class Agent:
    id: int
    kind: AgentKind
    coord: Coord
    target_hotspot: int | None = None
    dwell_remaining: int | None = None
    carrying_litter: bool = False
    utility: float = 0.0
    home: Coord | None = None
    spawn_tick: int = 0


@dataclass(frozen=True)
class PenaltyParams:
    rho: float       # crowding factor
    epsilon0: float  # dirtiness weight per garbage unit in the 9-cell block


@dataclass(frozen=True)
class ExcitementField:
    p: np.ndarray
    mu: float
    sources: tuple[tuple[Coord, float], ...]

    @classmethod
    def from_grid(cls, grid: TerrainGrid, mu: float) -> "ExcitementField":
        p = np.zeros((grid.height, grid.width), dtype=np.float64)
        sources = tuple((h.coord, h.base_excitement) for h in grid.hotspots)
        for (x, y), base in sources:
            p[y, x] = base
        return cls(p=p, mu=mu, sources=sources)


def _moore_sum(p: np.ndarray) -> np.ndarray:
    # Fixed summation order (MOORE_OFFSETS) keeps results bit-reproducible.
    h, w = p.shape
    total = np.zeros_like(p)
    for dx, dy in MOORE_OFFSETS:
        dst = (slice(max(0, -dy), h - max(0, dy)), slice(max(0, -dx), w - max(0, dx)))
        src = (slice(max(0, dy), h - max(0, -dy)), slice(max(0, dx), w - max(0, -dx)))
        total[dst] += p[src]
    return total


def diffuse_excitement(field: ExcitementField, grid: TerrainGrid) -> ExcitementField:
    """One synchronous relaxation step of the excitement field."""
    if field.p.shape != (grid.height, grid.width):
        raise ValueError(
            f"excitement field shape {field.p.shape} does not match grid "
            f"{(grid.height, grid.width)}"
        )
    p = field.mu * _moore_sum(field.p) / float(NEIGHBORHOOD_SIZE)
    p[~grid.walkable_mask] = 0.0
    for (x, y), base in field.sources:
        p[y, x] = base
    return ExcitementField(p=p, mu=field.mu, sources=field.sources)


def utilities_by_cell(agents: Sequence[Agent]) -> dict[Coord, float]:
    """Sum of agents' last utilities per occupied cell (empty cells absent)."""
    out: dict[Coord, float] = {}
    for agent in agents:
        out[agent.coord] = out.get(agent.coord, 0.0) + agent.utility
    return out


def crowding_penalty(
    coord: Coord,
    utilities: Mapping[Coord, float],
    garbage: np.ndarray,
    params: PenaltyParams,
) -> float:
    """Penalty from crowded neighbors and garbage around the cell.

    `utilities` maps occupied cells to the summed previous-tick utilities of
    the agents standing there (see utilities_by_cell); the dirtiness term
    counts garbage units on the cell itself plus its 8 neighbors.
    """
    x, y = coord
    get = utilities.get
    neighbor_utility = 0.0
    for dx, dy in MOORE_OFFSETS:
        neighbor_utility += get((x + dx, y + dy), 0.0)
    h = len(garbage)
    w = len(garbage[0])
    x_lo, x_hi = max(0, x - 1), min(w, x + 2)
    local_garbage = 0
    for ny in range(max(0, y - 1), min(h, y + 2)):
        row = garbage[ny]
        for nx in range(x_lo, x_hi):
            local_garbage += row[nx]
    return float(
        params.rho * neighbor_utility / float(NEIGHBORHOOD_SIZE)
        + params.epsilon0 * local_garbage
    )


def agent_utility(coord: Coord, field: ExcitementField, penalty: float) -> float:
    """Neighborhood excitement average minus the crowding/dirtiness penalty."""
    x, y = coord
    p = field.p
    h, w = p.shape
    total = 0.0
    for dx, dy in MOORE_OFFSETS:
        nx, ny = x + dx, y + dy
        if 0 <= nx < w and 0 <= ny < h:
            total += p[ny, nx]
    return float(total / float(NEIGHBORHOOD_SIZE) - penalty)


def sample_geometric(p: float, rng) -> int:
    """Geometric sample on {1, 2, ...} with success probability p."""
    if p >= 1.0:
        return 1
    u = rng.random()
    return int(math.log(1.0 - u) / math.log(1.0 - p)) + 1


def choose_next_hotspot(current: int | None, hotspots: Sequence[Hotspot], rng) -> int:
    """Sample a hotspot index != current, weighted by base excitement.

    A single hotspot is always returned outright; otherwise one rng.random()
    draw is consumed.
    """
    n = len(hotspots)
    if n == 0:
        raise ValueError("no hotspots configured")
    if n == 1:
        return 0
    indices = [i for i in range(n) if i != current]
    weights = [hotspots[i].base_excitement for i in indices]
    total = sum(weights)
    if total <= 0:
        raise ValueError("hotspot excitement weights sum to zero")
    r = rng.random() * total
    acc = 0.0
    for i, wgt in zip(indices, weights):
        acc += wgt
        if r < acc:
            return i
    return indices[-1]


def step_agent(
    agent: Agent,
    grid: TerrainGrid,
    dist_fields: Mapping[int, np.ndarray],
    rng,
    dwell_p: float,
) -> str:
    """Advance a wandering agent one tick; returns what happened.

    Without a target: pick one (one rng.random draw). En route: step to the
    walkable neighbor that strictly reduces BFS distance to the target, ties
    broken uniformly (one rng.randrange draw); if no neighbor improves, the
    target is unreachable and gets re-sampled. At the target: dwell for a
    geometric number of ticks, then clear the target.
    """
    if not grid.is_walkable(agent.coord):
        raise AgentStateError(
            f"agent {agent.id} is standing on non-walkable cell {agent.coord}"
        )
    if agent.target_hotspot is None:
        agent.target_hotspot = choose_next_hotspot(None, grid.hotspots, rng)
        agent.dwell_remaining = None
        return RETARGETED

    target = grid.hotspots[agent.target_hotspot].coord
    if agent.coord != target:
        dist = dist_fields[agent.target_hotspot]
        x, y = agent.coord
        here = dist[y][x]
        walk = grid.walkable_rows
        width, height = grid.width, grid.height
        best = None
        ties: list[Coord] = []
        for dx, dy in MOORE_OFFSETS:
            nx, ny = x + dx, y + dy
            if not (0 <= nx < width and 0 <= ny < height):
                continue
            if not walk[ny][nx]:
                continue
            d = dist[ny][nx]
            if best is None or d < best:
                best = d
                ties = [(nx, ny)]
            elif d == best:
                ties.append((nx, ny))
        if best is not None and best < here:
            agent.coord = ties[rng.randrange(len(ties))]
            return ARRIVED if agent.coord == target else MOVED
        agent.target_hotspot = choose_next_hotspot(agent.target_hotspot, grid.hotspots, rng)
        agent.dwell_remaining = None
        return RETARGETED

    if agent.dwell_remaining is None:
        agent.dwell_remaining = sample_geometric(dwell_p, rng)
    agent.dwell_remaining -= 1
    if agent.dwell_remaining <= 0:
        agent.target_hotspot = None
        agent.dwell_remaining = None
        return DWELL_ENDED
    return DWELLING


def step_resident(agent: Agent, grid: TerrainGrid, rng, home_range: int) -> None:
    """Home-anchored random walk: move to (or stay on) a walkable cell within
    home_range of home, uniformly; consumes exactly one rng.randrange draw."""
    if not grid.is_walkable(agent.coord):
        raise AgentStateError(
            f"agent {agent.id} is standing on non-walkable cell {agent.coord}"
        )
    hx, hy = agent.home if agent.home is not None else agent.coord
    x, y = agent.coord
    walk = grid.walkable_rows
    width, height = grid.width, grid.height
    candidates = [agent.coord]
    for dx, dy in MOORE_OFFSETS:
        nx, ny = x + dx, y + dy
        if not (0 <= nx < width and 0 <= ny < height):
            continue
        if walk[ny][nx] and max(abs(nx - hx), abs(ny - hy)) <= home_range:
            candidates.append((nx, ny))
    agent.coord = candidates[rng.randrange(len(candidates))]
