"""Annotated terrain grids and the static fields derived from them.

A map is a rectangular block of legend characters plus an optional
whitespace-separated elevation sheet of the same shape. Loading produces an
immutable TerrainGrid; ``compute_river_features`` / ``compute_road_features``
derive the distance fields and masks that placement rules and agents consume.

Conventions used throughout the package:

* Coordinates are ``(x, y)`` with x the column and y the row; backing numpy
  arrays are indexed ``[y, x]``.
* All grid distances are Chebyshev (the metric induced by the 8-cell Moore
  neighborhood).
* Where a unique "nearest" source cell is needed, ties resolve by smallest
  Chebyshev distance, then smallest squared Euclidean distance, then
  row-major order.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

Coord = tuple[int, int]


class TerrainError(ValueError):
    """Malformed terrain text, legend, or elevation input."""


class TerrainClass(Enum):
    RIVER = "River"
    RIVERBANK = "Riverbank"
    ROAD = "Road"
    BUILDABLE = "Buildable"
    DELTA = "Delta"
    TREES = "Trees"
    PARK_PATH = "ParkPath"
    OBSTACLE = "Obstacle"


# Stable small-int codes for the cell array.
CLASS_CODES: dict[TerrainClass, int] = {c: i for i, c in enumerate(TerrainClass)}
CODE_CLASSES: tuple[TerrainClass, ...] = tuple(TerrainClass)

RIVER_CODE = CLASS_CODES[TerrainClass.RIVER]
ROAD_CODE = CLASS_CODES[TerrainClass.ROAD]
BUILDABLE_CODE = CLASS_CODES[TerrainClass.BUILDABLE]

# Marker names a legend may use on top of the terrain class names.
HOTSPOT_MARKER = "Hotspot"
BRANCH_MARKER = "Branch"

DEFAULT_LEGEND: dict[str, str] = {
    "~": "River",
    "r": "Riverbank",
    "=": "Road",
    ".": "Buildable",
    "d": "Delta",
    "t": "Trees",
    "p": "ParkPath",
    "#": "Obstacle",
    "H": HOTSPOT_MARKER,   # ParkPath cell that also registers a hotspot
    "B": BRANCH_MARKER,    # River cell forced to count as a branch point
}

_WALKABLE = frozenset({
    TerrainClass.ROAD,
    TerrainClass.BUILDABLE,
    TerrainClass.PARK_PATH,
    TerrainClass.RIVERBANK,
    TerrainClass.DELTA,
})

# Moore neighborhood offsets (dx, dy): row-major scan of the 3x3 block with
# the center excluded. Every neighbor iteration in the package uses this order.
MOORE_OFFSETS: tuple[tuple[int, int], ...] = (
    (-1, -1), (0, -1), (1, -1),
    (-1, 0), (1, 0),
    (-1, 1), (0, 1), (1, 1),
)

_CARDINAL_OFFSETS: tuple[tuple[int, int], ...] = ((1, 0), (-1, 0), (0, 1), (0, -1))


def walkable(terrain_class: TerrainClass) -> bool:
    """Whether agents may stand on cells of this class."""
    return terrain_class in _WALKABLE


@dataclass(frozen=True)
class Hotspot:
    coord: Coord
    base_excitement: float
    name: str


@dataclass(frozen=True)
class TerrainGrid:
    """Static world description; all arrays are read-only after load."""

    width: int
    height: int
    cells: np.ndarray          # (H, W) uint8 class codes
    elevation: np.ndarray      # (H, W) float64
    stream_labels: np.ndarray  # (H, W) int32, 0 = not river
    hotspots: tuple[Hotspot, ...]
    branch_markers: frozenset[Coord]
    legend: dict[str, str]
    chars: tuple[str, ...]     # original map rows, for frame rendering
    walkable_mask: np.ndarray  # (H, W) bool
    walkable_rows: tuple[tuple[bool, ...], ...]  # same data, cheap scalar reads
    n_river: int

    def in_bounds(self, coord: Coord) -> bool:
        x, y = coord
        return 0 <= x < self.width and 0 <= y < self.height

    def class_at(self, coord: Coord) -> TerrainClass:
        x, y = coord
        return CODE_CLASSES[self.cells[y, x]]

    def is_walkable(self, coord: Coord) -> bool:
        x, y = coord
        return bool(self.walkable_mask[y, x])


@dataclass(frozen=True)
class RiverFeatures:
    """Per-cell river geometry used by the placement rules.

    dist_to_river is the Chebyshev distance to the nearest River cell
    (``inf`` on river-free maps). between_streams marks cells that lie within
    d_streams of two river cells belonging to different stream components.
    branch_proximity marks cells within d_branch of a branch cell.
    below_river marks cells strictly lower than their nearest River cell.
    """

    dist_to_river: np.ndarray
    between_streams: np.ndarray
    branch_proximity: np.ndarray
    below_river: np.ndarray


@dataclass(frozen=True)
class RoadFeatures:
    """Chebyshev distance to the nearest Road cell plus that cell's coords.

    nearest_road_x / nearest_road_y are -1 where the map has no roads.
    """

    dist_to_road: np.ndarray
    nearest_road_x: np.ndarray
    nearest_road_y: np.ndarray


def shifted(arr: np.ndarray, dx: int, dy: int, fill) -> np.ndarray:
    """Array whose [y, x] entry is arr[y+dy, x+dx], or `fill` out of bounds."""
    h, w = arr.shape
    out = np.full_like(arr, fill)
    dst_y = slice(max(0, -dy), h - max(0, dy))
    dst_x = slice(max(0, -dx), w - max(0, dx))
    src_y = slice(max(0, dy), h - max(0, -dy))
    src_x = slice(max(0, dx), w - max(0, -dx))
    out[dst_y, dst_x] = arr[src_y, src_x]
    return out


def _dilate8(mask: np.ndarray) -> np.ndarray:
    out = mask.copy()
    for dx, dy in MOORE_OFFSETS:
        out |= shifted(mask, dx, dy, False)
    return out


def chebyshev_distance_field(source_mask: np.ndarray) -> np.ndarray:
    """Exact Chebyshev distance to the nearest source cell; inf if none."""
    dist = np.full(source_mask.shape, np.inf)
    covered = source_mask.copy()
    dist[covered] = 0.0
    d = 0
    while covered.any() and not covered.all():
        frontier = _dilate8(covered) & ~covered
        if not frontier.any():
            break
        d += 1
        dist[frontier] = d
        covered |= frontier
    return dist


def walkable_distance_field(grid: TerrainGrid, sources: Iterable[Coord]) -> np.ndarray:
    """BFS distance over walkable cells only; inf where unreachable."""
    passable = grid.walkable_mask
    covered = np.zeros_like(passable)
    for x, y in sources:
        if passable[y, x]:
            covered[y, x] = True
    dist = np.full(passable.shape, np.inf)
    dist[covered] = 0.0
    d = 0
    while True:
        frontier = _dilate8(covered) & passable & ~covered
        if not frontier.any():
            break
        d += 1
        dist[frontier] = d
        covered |= frontier
    return dist


def nearest_cell_fields(source_mask: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-cell nearest source cell under the package tie-break convention.

    Returns (chebyshev distance, nearest y, nearest x); the coordinate arrays
    hold -1 where the mask is empty.
    """
    h, w = source_mask.shape
    yy, xx = np.indices((h, w))
    best_cheb = np.full((h, w), np.inf)
    best_eucl = np.full((h, w), np.inf)
    near_y = np.full((h, w), -1, dtype=np.int64)
    near_x = np.full((h, w), -1, dtype=np.int64)
    for sy, sx in zip(*np.nonzero(source_mask)):
        ady = np.abs(yy - sy)
        adx = np.abs(xx - sx)
        cheb = np.maximum(ady, adx)
        eucl = ady * ady + adx * adx
        better = (cheb < best_cheb) | ((cheb == best_cheb) & (eucl < best_eucl))
        best_cheb[better] = cheb[better]
        best_eucl[better] = eucl[better]
        near_y[better] = sy
        near_x[better] = sx
    return best_cheb, near_y, near_x


def neighbors8(coord: Coord, grid: TerrainGrid) -> list[Coord]:
    """In-bounds Moore neighbors of coord, in MOORE_OFFSETS order."""
    if not grid.in_bounds(coord):
        raise ValueError(
            f"coordinate {coord} out of bounds for {grid.width}x{grid.height} grid"
        )
    x, y = coord
    out = []
    for dx, dy in MOORE_OFFSETS:
        nx, ny = x + dx, y + dy
        if 0 <= nx < grid.width and 0 <= ny < grid.height:
            out.append((nx, ny))
    return out


def _label_streams(river_mask: np.ndarray) -> np.ndarray:
    """8-connected components of the river mask, labeled 1.. in row-major
    discovery order."""
    h, w = river_mask.shape
    labels = np.zeros((h, w), dtype=np.int32)
    next_label = 0
    for sy, sx in zip(*np.nonzero(river_mask)):
        if labels[sy, sx]:
            continue
        next_label += 1
        queue = deque([(sx, sy)])
        labels[sy, sx] = next_label
        while queue:
            cx, cy = queue.popleft()
            for dx, dy in MOORE_OFFSETS:
                nx, ny = cx + dx, cy + dy
                if 0 <= nx < w and 0 <= ny < h and river_mask[ny, nx] and not labels[ny, nx]:
                    labels[ny, nx] = next_label
                    queue.append((nx, ny))
    return labels


def _validate_legend(legend: Mapping[str, str]) -> None:
    valid = {c.value for c in TerrainClass} | {HOTSPOT_MARKER, BRANCH_MARKER}
    for ch, name in legend.items():
        if len(ch) != 1:
            raise TerrainError(f"legend keys must be single characters, got {ch!r}")
        if name not in valid:
            raise TerrainError(f"legend maps {ch!r} to unknown class {name!r}")


def _split_rows(text: str) -> list[str]:
    rows = [line.rstrip("\r") for line in text.split("\n")]
    while rows and rows[-1] == "":
        rows.pop()
    return rows


def load_terrain(
    terrain_text: str,
    elevation_text: str | None = None,
    *,
    legend: Mapping[str, str] | None = None,
    hotspot_base: float = 1.0,
) -> TerrainGrid:
    """Parse a character map (and optional elevation sheet) into a TerrainGrid.

    Rows must all have the same width. Hotspot marker cells become ParkPath
    cells and register a hotspot with excitement ``hotspot_base``; branch
    marker cells become River cells that always count as branch points.
    A missing elevation sheet means elevation 0 everywhere.
    """
    active = dict(DEFAULT_LEGEND) if legend is None else dict(legend)
    _validate_legend(active)

    rows = _split_rows(terrain_text)
    if not rows:
        raise TerrainError("terrain text is empty")
    width = len(rows[0])
    height = len(rows)
    if width == 0:
        raise TerrainError("terrain row 0 is empty")

    cells = np.zeros((height, width), dtype=np.uint8)
    hotspots: list[Hotspot] = []
    branch_markers: set[Coord] = set()
    for y, row in enumerate(rows):
        if len(row) != width:
            raise TerrainError(f"terrain row {y} has {len(row)} cells, expected {width}")
        for x, ch in enumerate(row):
            name = active.get(ch)
            if name is None:
                raise TerrainError(
                    f"character {ch!r} at row {y}, column {x} is not in the legend"
                )
            if name == HOTSPOT_MARKER:
                cells[y, x] = CLASS_CODES[TerrainClass.PARK_PATH]
                hotspots.append(Hotspot((x, y), hotspot_base, f"H{len(hotspots)}"))
            elif name == BRANCH_MARKER:
                cells[y, x] = RIVER_CODE
                branch_markers.add((x, y))
            else:
                cells[y, x] = CLASS_CODES[TerrainClass(name)]

    if elevation_text is None:
        elevation = np.zeros((height, width), dtype=np.float64)
    else:
        erows = _split_rows(elevation_text)
        if len(erows) != height:
            raise TerrainError(
                f"elevation has {len(erows)} rows, terrain has {height}"
            )
        elevation = np.zeros((height, width), dtype=np.float64)
        for y, erow in enumerate(erows):
            tokens = erow.split()
            if len(tokens) != width:
                raise TerrainError(
                    f"elevation row {y} has {len(tokens)} values, expected {width}"
                )
            for x, tok in enumerate(tokens):
                try:
                    elevation[y, x] = float(tok)
                except ValueError:
                    raise TerrainError(
                        f"elevation value {tok!r} at row {y}, column {x} is not numeric"
                    ) from None

    river_mask = cells == RIVER_CODE
    stream_labels = _label_streams(river_mask)
    walk = np.zeros((height, width), dtype=bool)
    for cls in _WALKABLE:
        walk |= cells == CLASS_CODES[cls]

    for arr in (cells, elevation, stream_labels, walk):
        arr.flags.writeable = False

    return TerrainGrid(
        width=width,
        height=height,
        cells=cells,
        elevation=elevation,
        stream_labels=stream_labels,
        hotspots=tuple(hotspots),
        branch_markers=frozenset(branch_markers),
        legend=active,
        chars=tuple(rows),
        walkable_mask=walk,
        walkable_rows=tuple(tuple(bool(v) for v in row) for row in walk),
        n_river=int(np.count_nonzero(river_mask)),
    )


def load_terrain_files(
    terrain_path: str | Path,
    elevation_path: str | Path | None = None,
    *,
    legend: Mapping[str, str] | None = None,
    hotspot_base: float = 1.0,
) -> TerrainGrid:
    terrain_text = Path(terrain_path).read_text(encoding="utf-8")
    elevation_text = None
    if elevation_path is not None:
        elevation_text = Path(elevation_path).read_text(encoding="utf-8")
    return load_terrain(
        terrain_text, elevation_text, legend=legend, hotspot_base=hotspot_base
    )


def default_map_paths() -> tuple[Path, Path]:
    """Paths of the riverside map shipped with the package."""
    maps = Path(__file__).parent / "maps"
    return maps / "riverside.txt", maps / "riverside_elev.txt"


def compute_river_features(
    grid: TerrainGrid, d_streams: int = 3, d_branch: int = 2
) -> RiverFeatures:
    """Derive the river masks and distance field for a loaded grid.

    Branch cells are River cells with River neighbors in at least 3 of the 4
    cardinal directions, plus any cells the legend marked as branches.
    """
    shape = (grid.height, grid.width)
    river = grid.cells == RIVER_CODE
    if not river.any():
        false = np.zeros(shape, dtype=bool)
        return RiverFeatures(
            dist_to_river=np.full(shape, np.inf),
            between_streams=false,
            branch_proximity=false.copy(),
            below_river=false.copy(),
        )

    dist = chebyshev_distance_field(river)

    within_count = np.zeros(shape, dtype=np.int32)
    for sid in range(1, int(grid.stream_labels.max()) + 1):
        reach = grid.stream_labels == sid
        for _ in range(d_streams):
            reach = _dilate8(reach)
        within_count += reach
    between = within_count >= 2

    cardinal_rivers = np.zeros(shape, dtype=np.int32)
    for dx, dy in _CARDINAL_OFFSETS:
        cardinal_rivers += shifted(river, dx, dy, False)
    branch = river & (cardinal_rivers >= 3)
    if grid.branch_markers:
        branch = branch.copy()
        for x, y in grid.branch_markers:
            branch[y, x] = True
    proximity = branch.copy()
    for _ in range(d_branch):
        proximity = _dilate8(proximity)

    if np.all(grid.elevation == grid.elevation.flat[0]):
        # Uniform elevation: "strictly below nearest river cell" cannot hold.
        below = np.zeros(shape, dtype=bool)
    else:
        _, near_y, near_x = nearest_cell_fields(river)
        below = grid.elevation < grid.elevation[near_y, near_x]

    for arr in (dist, between, proximity, below):
        arr.flags.writeable = False
    return RiverFeatures(
        dist_to_river=dist,
        between_streams=between,
        branch_proximity=proximity,
        below_river=below,
    )


def compute_road_features(grid: TerrainGrid) -> RoadFeatures:
    shape = (grid.height, grid.width)
    road = grid.cells == ROAD_CODE
    if not road.any():
        return RoadFeatures(
            dist_to_road=np.full(shape, np.inf),
            nearest_road_x=np.full(shape, -1, dtype=np.int64),
            nearest_road_y=np.full(shape, -1, dtype=np.int64),
        )
    dist, near_y, near_x = nearest_cell_fields(road)
    for arr in (dist, near_y, near_x):
        arr.flags.writeable = False
    return RoadFeatures(dist_to_road=dist, nearest_road_x=near_x, nearest_road_y=near_y)
