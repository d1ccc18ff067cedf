"""Tick loop, scenario construction, metrics, and invariant enforcement.

Phase order inside one tick is fixed:

1. settlement growth (prepark, only when houses_per_tick > 0)
2. excitement diffusion
3. visitor despawn then spawn (park)
4. agents act in ascending id order: move, update utility against the
   previous tick's utilities and the tick-start garbage snapshot, decide on
   littering, community cleanup
5. house waste generation (prepark)
6. metrics row + invariant checks

A single random.Random(seed) drives the run and every draw happens in the
order above, so a (config, seed) pair replays to byte-identical metrics.
Draw schedule: one randrange per house placement; one random for visitor
spawn plus one randrange for the entrance when it fires; per wanderer one
random on (re)targeting, one randrange per move, one random per dwell start;
one randrange per resident walk; one random per litter decision reached; per
house one random for emission plus one for river-vs-ground when it emits.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .config import SCENARIO_PREPARK, ConfigError, SimConfig
from .dynamics import (
    ARRIVED,
    DWELL_ENDED,
    DWELLING,
    Agent,
    AgentKind,
    AgentStateError,
    ExcitementField,
    PenaltyParams,
    agent_utility,
    crowding_penalty,
    diffuse_excitement,
    step_agent,
    step_resident,
    utilities_by_cell,
)
from .landscape import (
    Coord,
    RiverFeatures,
    RoadFeatures,
    TerrainGrid,
    compute_river_features,
    compute_road_features,
    load_terrain_files,
    walkable_distance_field,
)
from .settlement import (
    BuildRecord,
    House,
    PlacementFields,
    compute_placement_fields,
    grow_settlement,
    place_next_house,
)
from .waste import (
    DirtinessIndex,
    GarbageField,
    community_cleanup,
    dirtiness_index,
    generate_domestic_waste,
    visitor_litter_decision,
)

CSV_HEADER = (
    "tick,population,n_houses,total_in_place,river_total,collected_total,"
    "dirtiness,garbage_per_capita,littering_events"
)


class InvariantViolation(RuntimeError):
    """A simulation invariant broke; carries the tick it happened on."""

    def __init__(self, tick: int, message: str):
        super().__init__(f"tick {tick}: {message}")
        self.tick = tick


@dataclass(frozen=True)
class MetricsRow:
    tick: int
    population: int
    n_houses: int
    total_in_place: int
    river_total: int
    collected_total: int
    dirtiness: float
    garbage_per_capita: float
    littering_events: int

    def csv_line(self) -> str:
        return (
            f"{self.tick},{self.population},{self.n_houses},{self.total_in_place},"
            f"{self.river_total},{self.collected_total},{self.dirtiness:.6f},"
            f"{self.garbage_per_capita:.6f},{self.littering_events}"
        )


def metrics_to_csv(rows: list[MetricsRow]) -> str:
    return "\n".join([CSV_HEADER] + [row.csv_line() for row in rows]) + "\n"


@dataclass
class SimState:
    config: SimConfig
    grid: TerrainGrid
    features: RiverFeatures
    roads: RoadFeatures
    field: ExcitementField
    garbage: GarbageField
    dirtiness: DirtinessIndex
    rng: random.Random
    agents: list[Agent] = field(default_factory=list)
    houses: list[House] = field(default_factory=list)
    metrics: list[MetricsRow] = field(default_factory=list)
    build_log: list[BuildRecord] = field(default_factory=list)
    # per-hotspot BFS distance fields as nested lists (fast scalar reads)
    hotspot_dist: dict[int, list[list[float]]] = field(default_factory=dict)
    entrances: tuple[Coord, ...] = ()
    placement: PlacementFields | None = None
    tick: int = 0
    next_agent_id: int = 0
    # reusable all-zero snapshot rows for garbage-free ticks (read-only)
    zero_rows: list[list[int]] | None = None


@dataclass
class RunResult:
    metrics: list[MetricsRow]
    frames: list[tuple[int, str]]
    state: SimState


def _spawn_agent(state: SimState, kind: AgentKind, coord: Coord, *,
                 home: Coord | None = None) -> Agent:
    agent = Agent(
        id=state.next_agent_id,
        kind=kind,
        coord=coord,
        home=home,
        spawn_tick=state.tick,
    )
    state.next_agent_id += 1
    state.agents.append(agent)
    return agent


def _resolve_entrances(state: SimState) -> tuple[Coord, ...]:
    """Park entrances: configured coords, or every walkable map-edge cell
    from which at least one hotspot is reachable (row-major order)."""
    grid = state.grid
    config = state.config
    if config.entrances is not None:
        for coord in config.entrances:
            if not grid.in_bounds(coord):
                raise ConfigError(f"park.entrances coordinate {coord} is out of bounds")
            if not grid.is_walkable(coord):
                raise ConfigError(f"park.entrances coordinate {coord} is not walkable")
        return tuple(config.entrances)
    found = []
    for y in range(grid.height):
        for x in range(grid.width):
            if x not in (0, grid.width - 1) and y not in (0, grid.height - 1):
                continue
            if not grid.walkable_mask[y, x]:
                continue
            if any(math.isfinite(d[y][x]) for d in state.hotspot_dist.values()):
                found.append((x, y))
    return tuple(found)


def init_scenario(config: SimConfig, grid: TerrainGrid | None = None) -> SimState:
    """Build the tick-0 state for the configured scenario.

    prepark: grow the settlement to its target (unless growth is spread over
    ticks) and house one resident per house. park: place community members
    round-robin on the hotspots and arm visitor spawning.
    """
    config.validate()
    if grid is None:
        grid = load_terrain_files(
            config.terrain_file,
            config.elevation_file,
            legend=config.legend,
            hotspot_base=config.hotspot_base_excitement,
        )
    if grid.n_river == 0:
        raise ConfigError("map has no river cells; the dirtiness index is undefined")

    state = SimState(
        config=config,
        grid=grid,
        features=compute_river_features(grid, config.d_streams, config.d_branch),
        roads=compute_road_features(grid),
        field=ExcitementField.from_grid(grid, config.mu),
        garbage=GarbageField.zeros(grid.width, grid.height),
        dirtiness=DirtinessIndex(),
        rng=random.Random(config.seed),
    )

    if config.scenario == SCENARIO_PREPARK:
        state.placement = compute_placement_fields(grid, state.features, state.roads, config)
        if config.houses_per_tick == 0 and config.houses > 0:
            grow_settlement(state, config.houses, state.rng)
            for house in state.houses:
                _spawn_agent(state, AgentKind.RESIDENT, house.coord, home=house.coord)
    else:
        if not grid.hotspots:
            raise ConfigError("park scenario requires at least one hotspot on the map")
        state.hotspot_dist = {
            i: walkable_distance_field(grid, [h.coord]).tolist()
            for i, h in enumerate(grid.hotspots)
        }
        state.entrances = _resolve_entrances(state)
        if config.visitor_spawn_rate > 0 and not state.entrances:
            raise ConfigError("no walkable map-edge entrance reaches a hotspot")
        for i in range(config.n_community):
            hotspot = grid.hotspots[i % len(grid.hotspots)]
            _spawn_agent(state, AgentKind.COMMUNITY_MEMBER, hotspot.coord, home=hotspot.coord)

    _record_metrics(state, littering=0)
    return state


def _watchers(agents: list[Agent], me: Agent, radius: int) -> tuple[int, bool]:
    """(other agents within radius, any of them a community member)."""
    x, y = me.coord
    count = 0
    community = False
    for other in agents:
        if other is me:
            continue
        ox, oy = other.coord
        if max(abs(ox - x), abs(oy - y)) <= radius:
            count += 1
            if other.kind is AgentKind.COMMUNITY_MEMBER:
                community = True
    return count, community


def _drop_litter(state: SimState, coord: Coord) -> None:
    x, y = coord
    if state.config.riverside_drift and state.features.dist_to_river[y, x] == 1.0:
        state.garbage.dump_to_river()
    else:
        state.garbage.drop_at(coord)


def _record_metrics(state: SimState, littering: int) -> None:
    garbage = state.garbage
    dirt = dirtiness_index(garbage, state.grid)
    state.dirtiness.series.append(dirt)
    population = len(state.agents)
    per_capita = (garbage.in_place_total + garbage.river_total) / max(population, 1)
    state.metrics.append(MetricsRow(
        tick=state.tick,
        population=population,
        n_houses=len(state.houses),
        total_in_place=garbage.in_place_total,
        river_total=garbage.river_total,
        collected_total=garbage.collected_total,
        dirtiness=dirt,
        garbage_per_capita=per_capita,
        littering_events=littering,
    ))


def _check_invariants(state: SimState) -> None:
    garbage = state.garbage
    if not garbage.ledger_balanced():
        raise InvariantViolation(
            state.tick,
            "garbage ledger out of balance: "
            f"generated={garbage.generated_total} standing={garbage.in_place_total} "
            f"river={garbage.river_total} collected={garbage.collected_total}",
        )
    walk = state.grid.walkable_mask
    for agent in state.agents:
        x, y = agent.coord
        if not walk[y, x]:
            raise InvariantViolation(
                state.tick, f"agent {agent.id} occupies non-walkable cell {(x, y)}"
            )


def step(state: SimState) -> SimState:
    """Advance the world one tick (mutates and returns state)."""
    config = state.config
    rng = state.rng
    grid = state.grid
    state.tick += 1
    tick = state.tick
    prepark = config.scenario == SCENARIO_PREPARK
    littering = 0

    # 1. settlement growth spread over the run
    if prepark and config.houses_per_tick > 0 and len(state.houses) < config.houses:
        for _ in range(min(config.houses_per_tick, config.houses - len(state.houses))):
            house = place_next_house(state, rng)
            if house is None:
                break
            _spawn_agent(state, AgentKind.RESIDENT, house.coord, home=house.coord)

    # 2. excitement diffusion
    state.field = diffuse_excitement(state.field, grid)

    # 3. visitor despawn, then spawn
    if not prepark:
        if any(a.kind is AgentKind.VISITOR for a in state.agents):
            state.agents = [
                a for a in state.agents
                if not (a.kind is AgentKind.VISITOR and tick - a.spawn_tick >= config.visit_length)
            ]
        if config.visitor_spawn_rate > 0 and rng.random() < config.visitor_spawn_rate:
            coord = state.entrances[rng.randrange(len(state.entrances))]
            _spawn_agent(state, AgentKind.VISITOR, coord)

    # 4. agent actions, ascending id order; penalties read the tick-start
    # garbage values, never this tick's drops
    previous_utilities = utilities_by_cell(state.agents)
    if state.garbage.in_place_total == 0:
        if state.zero_rows is None:
            state.zero_rows = [[0] * grid.width for _ in range(grid.height)]
        garbage_snapshot = state.zero_rows
    else:
        garbage_snapshot = state.garbage.in_place.tolist()
    params = PenaltyParams(rho=config.rho, epsilon0=config.epsilon0)
    try:
        for agent in state.agents:
            event = ""
            if agent.kind is AgentKind.RESIDENT:
                step_resident(agent, grid, rng, config.resident_range)
            elif agent.kind is AgentKind.COMMUNITY_MEMBER and config.community_stationary:
                pass
            else:
                event = step_agent(agent, grid, state.hotspot_dist, rng, config.dwell_p)
                if agent.kind is AgentKind.VISITOR and event == ARRIVED:
                    agent.carrying_litter = True
            penalty = crowding_penalty(agent.coord, previous_utilities, garbage_snapshot, params)
            agent.utility = agent_utility(agent.coord, state.field, penalty)
            if (
                agent.kind is AgentKind.VISITOR
                and agent.carrying_litter
                and event in (DWELLING, DWELL_ENDED)
            ):
                nearby, community_near = _watchers(state.agents, agent, config.warn_radius)
                if visitor_litter_decision(agent, nearby, community_near, rng, config):
                    _drop_litter(state, agent.coord)
                    agent.carrying_litter = False
                    littering += 1
            if agent.kind is AgentKind.COMMUNITY_MEMBER:
                community_cleanup(agent.coord, state.garbage, config)
    except AgentStateError as exc:
        raise InvariantViolation(tick, str(exc)) from exc

    # 5. domestic waste
    if prepark:
        generate_domestic_waste(state.houses, state.garbage, rng, config)

    # 6. metrics and invariants
    _record_metrics(state, littering)
    _check_invariants(state)
    return state


def render_frame(state: SimState) -> str:
    """Text snapshot: the terrain map with garbage digits (saturating at 9),
    'h' for houses, and 'A' for agents layered on top."""
    rows = [list(line) for line in state.grid.chars]
    in_place = state.garbage.in_place
    for y, x in zip(*np.nonzero(in_place)):
        rows[y][x] = str(min(9, int(in_place[y, x])))
    for house in state.houses:
        x, y = house.coord
        rows[y][x] = "h"
    for agent in state.agents:
        x, y = agent.coord
        rows[y][x] = "A"
    return "\n".join("".join(row) for row in rows) + "\n"


def run(config: SimConfig, grid: TerrainGrid | None = None) -> RunResult:
    """Initialize and advance config.ticks ticks; collect metrics and frames."""
    state = init_scenario(config, grid=grid)
    frames: list[tuple[int, str]] = []
    if config.frame_every:
        frames.append((0, render_frame(state)))
    for _ in range(config.ticks):
        step(state)
        if config.frame_every and state.tick % config.frame_every == 0:
            frames.append((state.tick, render_frame(state)))
    return RunResult(metrics=state.metrics, frames=frames, state=state)
