"""Site selection rules and stepwise settlement growth.

Hard rules make a cell unbuildable outright: the three traditional taboos
(land between two streams, land near a river branching point, land lying
below the river), the highland-behind taboo, a flood-avoidance river buffer,
and the obvious NotBuildable/Occupied checks. The preference score then
ranks the surviving candidates: people build next to existing neighbors,
close to the road they earn from, and as far from the river as the cap
allows. Growth is greedy; each placement picks uniformly among the
top-scoring sites (within score_tolerance), spending exactly one RNG draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .landscape import (
    BUILDABLE_CODE,
    Coord,
    RiverFeatures,
    RoadFeatures,
    TerrainGrid,
    shifted,
)

RULE_NOT_BUILDABLE = "NotBuildable"
RULE_OCCUPIED = "Occupied"
RULE_SRI_MADAYUNG = "SriMadayung"
RULE_TALAGA_KAHUDANAN = "TalagaKahudanan"
RULE_SI_BAREUBEU = "SiBareubeu"
RULE_RIVER_BUFFER = "RiverBuffer"
RULE_HIGHLAND_BEHIND = "HighlandBehind"

ALL_RULES = (
    RULE_NOT_BUILDABLE,
    RULE_OCCUPIED,
    RULE_SRI_MADAYUNG,
    RULE_TALAGA_KAHUDANAN,
    RULE_SI_BAREUBEU,
    RULE_RIVER_BUFFER,
    RULE_HIGHLAND_BEHIND,
)

# Compass directions in 45-degree steps, indexed by round(atan2(dy, dx) / 45deg).
_COMPASS8: tuple[tuple[int, int], ...] = (
    (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1),
)


@dataclass
class House:
    coord: Coord
    built_tick: int
    waste_rate: float


@dataclass(frozen=True)
class SiteEvaluation:
    coord: Coord
    violated_rules: list[str]
    preference_score: float


@dataclass(frozen=True)
class BuildRecord:
    """One line of the settlement build log: when and where, at what score."""

    tick: int
    x: int
    y: int
    score: float


@dataclass(frozen=True)
class PlacementFields:
    """Precomputed static part of the placement problem.

    legal_static is True where no house-independent rule fires; base_score is
    the road + river part of the preference score. Only Occupied and the
    neighbor-count term change as houses are added.
    """

    legal_static: np.ndarray
    base_score: np.ndarray


def behind_direction(coord: Coord, roads: RoadFeatures) -> Coord | None:
    """Unit compass step pointing away from the nearest road, or None.

    Facades face the nearest road; "behind" is the opposite direction,
    quantized to the nearest of the 8 compass directions. Returns None when
    the map has no road or the coord is itself a road cell.
    """
    x, y = coord
    rx = int(roads.nearest_road_x[y, x])
    ry = int(roads.nearest_road_y[y, x])
    if rx < 0:
        return None
    vx, vy = rx - x, ry - y
    if vx == 0 and vy == 0:
        return None
    angle = math.atan2(-vy, -vx)
    k = int(round(angle / (math.pi / 4))) % 8
    return _COMPASS8[k]


def _highland_behind(
    coord: Coord, grid: TerrainGrid, roads: RoadFeatures, radius: int, delta: float
) -> bool:
    direction = behind_direction(coord, roads)
    if direction is None:
        return False
    dx, dy = direction
    x, y = coord
    threshold = grid.elevation[y, x] + delta
    for step in range(1, radius + 1):
        cx, cy = x + dx * step, y + dy * step
        if not (0 <= cx < grid.width and 0 <= cy < grid.height):
            break
        if grid.elevation[cy, cx] >= threshold:
            return True
    return False


def forbidden_site(
    coord: Coord,
    grid: TerrainGrid,
    features: RiverFeatures,
    roads: RoadFeatures,
    houses: list[House],
    config,
) -> list[str]:
    """Every rule the site violates; empty means buildable right now."""
    x, y = coord
    violated = []
    if grid.cells[y, x] != BUILDABLE_CODE:
        violated.append(RULE_NOT_BUILDABLE)
    if any(h.coord == coord for h in houses):
        violated.append(RULE_OCCUPIED)
    if features.between_streams[y, x]:
        violated.append(RULE_SRI_MADAYUNG)
    if features.branch_proximity[y, x]:
        violated.append(RULE_TALAGA_KAHUDANAN)
    if features.below_river[y, x]:
        violated.append(RULE_SI_BAREUBEU)
    if features.dist_to_river[y, x] < config.river_buffer:
        violated.append(RULE_RIVER_BUFFER)
    if _highland_behind(coord, grid, roads, config.highland_radius, config.highland_delta):
        violated.append(RULE_HIGHLAND_BEHIND)
    return violated


def site_preference_score(
    coord: Coord,
    grid: TerrainGrid,
    features: RiverFeatures,
    roads: RoadFeatures,
    houses: list[House],
    config,
) -> float:
    """Soft desirability of a legal site; higher is better, terms nonnegative."""
    x, y = coord
    r = config.neighbor_radius
    neighbors = sum(
        1 for h in houses if max(abs(h.coord[0] - x), abs(h.coord[1] - y)) <= r
    )
    road_term = config.w_road / (1.0 + float(roads.dist_to_road[y, x]))
    river_term = config.w_river_far * min(
        float(features.dist_to_river[y, x]), float(config.river_far_cap)
    )
    return config.w_neighbor * neighbors + road_term + river_term


def evaluate_site(
    coord: Coord,
    grid: TerrainGrid,
    features: RiverFeatures,
    roads: RoadFeatures,
    houses: list[House],
    config,
) -> SiteEvaluation:
    return SiteEvaluation(
        coord=coord,
        violated_rules=forbidden_site(coord, grid, features, roads, houses, config),
        preference_score=site_preference_score(coord, grid, features, roads, houses, config),
    )


def _highland_mask(
    grid: TerrainGrid, roads: RoadFeatures, radius: int, delta: float
) -> np.ndarray:
    shape = (grid.height, grid.width)
    out = np.zeros(shape, dtype=bool)
    if int(roads.nearest_road_x.max(initial=-1)) < 0:
        return out
    yy, xx = np.indices(shape)
    vx = roads.nearest_road_x - xx
    vy = roads.nearest_road_y - yy
    has_direction = (roads.nearest_road_x >= 0) & ((vx != 0) | (vy != 0))
    angle = np.arctan2(-vy.astype(np.float64), -vx.astype(np.float64))
    k = np.rint(angle / (np.pi / 4)).astype(np.int64) % 8
    threshold = grid.elevation + delta
    for ki, (dx, dy) in enumerate(_COMPASS8):
        selected = has_direction & (k == ki)
        if not selected.any():
            continue
        for step in range(1, radius + 1):
            ahead = shifted(grid.elevation, dx * step, dy * step, -np.inf)
            out |= selected & (ahead >= threshold)
    return out


def compute_placement_fields(
    grid: TerrainGrid, features: RiverFeatures, roads: RoadFeatures, config
) -> PlacementFields:
    """Vectorized equivalent of the per-cell rule/score functions.

    Must agree with forbidden_site / site_preference_score cell for cell;
    the test suite enforces that equivalence.
    """
    buildable = grid.cells == BUILDABLE_CODE
    bad = (
        ~buildable
        | features.between_streams
        | features.branch_proximity
        | features.below_river
        | (features.dist_to_river < config.river_buffer)
        | _highland_mask(grid, roads, config.highland_radius, config.highland_delta)
    )
    base_score = config.w_road / (1.0 + roads.dist_to_road) + config.w_river_far * np.minimum(
        features.dist_to_river, float(config.river_far_cap)
    )
    legal = ~bad
    legal.flags.writeable = False
    base_score.flags.writeable = False
    return PlacementFields(legal_static=legal, base_score=base_score)


def place_next_house(state, rng) -> House | None:
    """Place one house on the best available site, or nothing if none is legal.

    Ties within score_tolerance of the maximum are broken uniformly at
    random; each call consumes exactly one rng.randrange draw.
    """
    config = state.config
    fields: PlacementFields = state.placement
    h, w = fields.legal_static.shape
    occupied = np.zeros((h, w), dtype=bool)
    neighbor_count = np.zeros((h, w), dtype=np.float64)
    r = config.neighbor_radius
    for house in state.houses:
        x, y = house.coord
        occupied[y, x] = True
        neighbor_count[max(0, y - r): y + r + 1, max(0, x - r): x + r + 1] += 1.0

    legal = fields.legal_static & ~occupied
    if not legal.any():
        return None
    score = fields.base_score + config.w_neighbor * neighbor_count
    top = score[legal].max()
    band = legal & (score >= top - config.score_tolerance)
    ys, xs = np.nonzero(band)
    i = rng.randrange(len(ys))
    coord = (int(xs[i]), int(ys[i]))
    house = House(coord=coord, built_tick=state.tick, waste_rate=config.waste_rate)
    state.houses.append(house)
    state.build_log.append(
        BuildRecord(tick=state.tick, x=coord[0], y=coord[1], score=float(score[coord[1], coord[0]]))
    )
    return house


def grow_settlement(state, n_houses: int, rng):
    """Place up to n_houses houses, stopping early when no legal site remains."""
    for _ in range(n_houses):
        if place_next_house(state, rng) is None:
            break
    return state


def demolish_all(state):
    """Tear down every house; the land becomes open space.

    Garbage standing on former house cells is hauled away (counted as
    collected) when demolition_clears_garbage is set, otherwise left in
    place. River garbage and the dirtiness history are untouched.
    """
    garbage = state.garbage
    if state.config.demolition_clears_garbage:
        for house in state.houses:
            x, y = house.coord
            units = int(garbage.in_place[y, x])
            if units:
                garbage.collect_at((x, y), units)
    state.houses.clear()
    return state
