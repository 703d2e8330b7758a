"""Base-station cells, the confirmed-case registry, and area-at-risk queries."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np


class ValidationError(ValueError):
    pass


@dataclass(frozen=True)
class CellRegion:
    cell_id: int
    x0: float
    y0: float
    x1: float
    y1: float
    closed_x: bool = False  # rightmost column owns its right edge
    closed_y: bool = False  # topmost row owns its top edge

    @property
    def rect(self) -> tuple[float, float, float, float]:
        return (self.x0, self.y0, self.x1, self.y1)

    def contains(self, x, y):
        """Half-open membership test; works on scalars and arrays."""
        in_x = (x >= self.x0) & ((x <= self.x1) if self.closed_x else (x < self.x1))
        in_y = (y >= self.y0) & ((y <= self.y1) if self.closed_y else (y < self.y1))
        return in_x & in_y


def grid_edges(length: float, count: int) -> list[float]:
    return [length * k / count for k in range(count)] + [float(length)]


def make_cell_grid(width: float, height: float, grid: tuple[int, int]) -> list[CellRegion]:
    """Partition the area into ``cols x rows`` equal cells, row-major ids."""
    cols, rows = grid
    xs = grid_edges(width, cols)
    ys = grid_edges(height, rows)
    cells = []
    for r in range(rows):
        for c in range(cols):
            cells.append(CellRegion(
                cell_id=r * cols + c, x0=xs[c], y0=ys[r], x1=xs[c + 1], y1=ys[r + 1],
                closed_x=(c == cols - 1), closed_y=(r == rows - 1)))
    return cells


class HealthRegistry:
    """Agent ids with a confirmed active diagnosis."""

    def __init__(self, ids: Iterable[int] = ()):
        self._ids: set[int] = {int(i) for i in ids}

    def add(self, agent_id: int) -> None:
        self._ids.add(int(agent_id))

    def __contains__(self, agent_id) -> bool:
        return int(agent_id) in self._ids

    def __iter__(self) -> Iterator[int]:
        return iter(sorted(self._ids))

    def __len__(self) -> int:
        return len(self._ids)

    def as_set(self) -> frozenset[int]:
        return frozenset(self._ids)

    @classmethod
    def from_file(cls, path: str | Path) -> "HealthRegistry":
        """Load a JSON list of agent ids (or ``{"confirmed": [...]}``)."""
        raw = json.loads(Path(path).read_text())
        if isinstance(raw, dict):
            raw = raw.get("confirmed", [])
        if not isinstance(raw, list) or not all(isinstance(v, int) for v in raw):
            raise ValidationError(f"{path}: expected a list of integer agent ids")
        return cls(raw)


def cells_for_camera(zone, cells: Sequence[CellRegion]) -> list[int]:
    """Cells whose rectangle overlaps the camera footprint with positive area."""
    zx0, zy0, zx1, zy1 = zone.world_rect
    out = []
    for cell in cells:
        if min(zx1, cell.x1) - max(zx0, cell.x0) > 0 and min(zy1, cell.y1) - max(zy0, cell.y0) > 0:
            out.append(cell.cell_id)
    return sorted(out)


def active_users_mask(cell_ids: Iterable[int], cells: Sequence[CellRegion], x, y) -> np.ndarray:
    by_id = {c.cell_id: c for c in cells}
    mask = np.zeros(np.shape(x), dtype=bool)
    for cid in cell_ids:
        if cid not in by_id:
            raise ValidationError(f"unknown cell id {cid!r}")
        mask |= by_id[cid].contains(x, y)
    return mask


def active_users(cell_ids: Iterable[int], world, cells: Sequence[CellRegion] | None = None) -> set[int]:
    """Agents currently located inside the union of the named cells."""
    if cells is None:
        cfg = world.config
        cells = make_cell_grid(cfg.area_width, cfg.area_height, cfg.cell_grid)
    mask = active_users_mask(cell_ids, cells, world.x, world.y)
    return {int(i) for i in np.flatnonzero(mask)}


def confirmed_in(users: Iterable[int], registry: HealthRegistry) -> set[int]:
    return {int(u) for u in users if u in registry}


def symptomatic_in(users: Iterable[int], telemetry, now: float, config) -> set[int]:
    """Users whose wearable symptom flag is raised at ``now``."""
    flags = telemetry.flags(now, config)
    return {int(u) for u in users if flags[u]}
