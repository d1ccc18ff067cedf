"""Brute-force reference implementations used as independent oracles.

Everything here is written the slow, obvious way (explicit loops over cells
and sources) and stays deliberately independent of the production code paths
it checks.
"""

from collections import deque

import numpy as np


def bf_chebyshev_distances(shape, sources):
    """Min over sources of max(|dx|, |dy|), computed per cell."""
    h, w = shape
    out = np.full((h, w), np.inf)
    for y in range(h):
        for x in range(w):
            for sx, sy in sources:
                d = max(abs(sx - x), abs(sy - y))
                if d < out[y, x]:
                    out[y, x] = d
    return out


def bf_flood_fill_components(mask):
    """8-connected components as a list of coordinate frozensets."""
    h, w = mask.shape
    seen = np.zeros((h, w), dtype=bool)
    components = []
    for y in range(h):
        for x in range(w):
            if not mask[y, x] or seen[y, x]:
                continue
            comp = set()
            queue = deque([(x, y)])
            seen[y, x] = True
            while queue:
                cx, cy = queue.popleft()
                comp.add((cx, cy))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        if dx == 0 and dy == 0:
                            continue
                        nx, ny = cx + dx, cy + dy
                        if 0 <= nx < w and 0 <= ny < h and mask[ny, nx] and not seen[ny, nx]:
                            seen[ny, nx] = True
                            queue.append((nx, ny))
            components.append(frozenset(comp))
    return components


def bf_diffuse(p, mu, walkable, sources):
    """One diffusion step: mu * (Moore-neighbor sum) / 8, walls pinned to 0,
    sources re-clamped afterwards."""
    h, w = p.shape
    out = np.zeros_like(p)
    for y in range(h):
        for x in range(w):
            if not walkable[y, x]:
                continue
            total = 0.0
            for dy in (-1, 0, 1):
                for dx in (-1, 0, 1):
                    if dx == 0 and dy == 0:
                        continue
                    nx, ny = x + dx, y + dy
                    if 0 <= nx < w and 0 <= ny < h:
                        total += p[ny, nx]
            out[y, x] = mu * total / 8.0
    for (x, y), base in sources:
        out[y, x] = base
    return out


def bf_nearest_source(shape, sources):
    """Nearest source per cell under the (chebyshev, euclidean^2, row-major)
    tie-break; returns dict (x, y) -> (sx, sy)."""
    h, w = shape
    ordered = sorted(sources, key=lambda s: (s[1], s[0]))
    out = {}
    for y in range(h):
        for x in range(w):
            best = None
            best_key = None
            for sx, sy in ordered:
                cheb = max(abs(sx - x), abs(sy - y))
                eucl = (sx - x) ** 2 + (sy - y) ** 2
                key = (cheb, eucl)
                if best_key is None or key < best_key:
                    best_key = key
                    best = (sx, sy)
            out[(x, y)] = best
    return out
