"""Population state, seeded placement, and random-walk mobility."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .config import SimConfig
from .infra import HealthRegistry

# Stable ids for the named RNG streams; never renumber.
STREAMS = {
    "world": 0,
    "mobility": 1,
    "telemetry": 2,
    "transmission": 3,
    "sensing": 4,
}


def rng_stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named stream of a run."""
    return np.random.Generator(np.random.PCG64(
        np.random.SeedSequence(seed, spawn_key=(STREAMS[name],))))


class Health(enum.IntEnum):
    SUSCEPTIBLE = 0
    EXPOSED_PENDING = 1
    INFECTED = 2
    CONFIRMED = 3


@dataclass(frozen=True)
class Agent:
    """Read-only snapshot of one agent."""

    id: int
    x: float
    y: float
    heading: float
    speed: float
    masked: bool
    health: Health
    symptom_level: float
    infected_at: Optional[float]
    quarantined: bool


class SpatialIndex:
    """Uniform bucket grid over agent positions for radius queries."""

    def __init__(self, x: np.ndarray, y: np.ndarray, width: float, height: float):
        self.x = x
        self.y = y
        n = x.shape[0]
        # ~2 agents per bucket on average
        side = math.sqrt(width * height / max(n, 1) * 2.0)
        self.nx = max(1, min(1024, int(width / side) + 1))
        self.ny = max(1, min(1024, int(height / side) + 1))
        self.cw = width / self.nx
        self.ch = height / self.ny
        cx = np.clip((x / self.cw).astype(np.int64), 0, self.nx - 1)
        cy = np.clip((y / self.ch).astype(np.int64), 0, self.ny - 1)
        keys = cx * self.ny + cy
        self.order = np.argsort(keys, kind="stable")
        self.starts = np.searchsorted(keys[self.order], np.arange(self.nx * self.ny + 1))

    def query(self, cx: float, cy: float, radius: float) -> np.ndarray:
        reach = radius * (1.0 + 1e-9) + 1e-9
        gx0 = max(0, int(math.floor((cx - reach) / self.cw)))
        gx1 = min(self.nx - 1, int(math.floor((cx + reach) / self.cw)))
        gy0 = max(0, int(math.floor((cy - reach) / self.ch)))
        gy1 = min(self.ny - 1, int(math.floor((cy + reach) / self.ch)))
        if gx0 > gx1 or gy0 > gy1:
            return np.empty(0, dtype=np.int64)
        chunks = []
        for gx in range(gx0, gx1 + 1):
            lo = self.starts[gx * self.ny + gy0]
            hi = self.starts[gx * self.ny + gy1 + 1]
            chunks.append(self.order[lo:hi])
        cand = np.concatenate(chunks)
        dx = self.x[cand] - cx
        dy = self.y[cand] - cy
        dist = np.sqrt(dx * dx + dy * dy)
        return np.sort(cand[dist <= radius])


class WorldState:
    """Struct-of-arrays population plus the simulation clock.

    Agent ids are the integer indices ``0..population-1``.
    """

    def __init__(self, config: SimConfig, x, y, heading, speed, masked, health,
                 symptom, infected_at, registry: HealthRegistry, time: float = 0.0):
        self.config = config
        self.x = x
        self.y = y
        self.heading = heading
        self.speed = speed
        self.masked = masked
        self.health = health
        self.symptom = symptom
        self.infected_at = infected_at
        self.quarantined = np.zeros(x.shape[0], dtype=bool)
        self.carriers = np.empty(0, dtype=np.int64)
        self.registry = registry
        self.time = time
        self._index: Optional[SpatialIndex] = None

    @property
    def n(self) -> int:
        return int(self.x.shape[0])

    def agent(self, i: int) -> Agent:
        at = self.infected_at[i]
        return Agent(
            id=int(i), x=float(self.x[i]), y=float(self.y[i]),
            heading=float(self.heading[i]), speed=float(self.speed[i]),
            masked=bool(self.masked[i]), health=Health(int(self.health[i])),
            symptom_level=float(self.symptom[i]),
            infected_at=None if np.isnan(at) else float(at),
            quarantined=bool(self.quarantined[i]),
        )

    def agents(self) -> list[Agent]:
        return [self.agent(i) for i in range(self.n)]

    def index(self) -> SpatialIndex:
        if self._index is None:
            self._index = SpatialIndex(self.x, self.y, self.config.area_width,
                                       self.config.area_height)
        return self._index

    def invalidate(self) -> None:
        self._index = None

    def fingerprint(self) -> bytes:
        """Bytes that change whenever any agent field or the clock changes."""
        parts = [np.float64(self.time).tobytes()]
        for arr in (self.x, self.y, self.heading, self.speed, self.masked,
                    self.health, self.symptom, self.infected_at, self.quarantined):
            parts.append(np.ascontiguousarray(arr).tobytes())
        return b"".join(parts)


def init_world(config: SimConfig) -> WorldState:
    """Place the population uniformly at random and assign initial roles.

    All draws come from the ``world`` stream, so nothing else in a run can
    perturb placement or role assignment.
    """
    rng = rng_stream(config.rng_seed, "world")
    n = config.population
    x = rng.uniform(0.0, config.area_width, n)
    y = rng.uniform(0.0, config.area_height, n)
    heading = rng.uniform(0.0, 2.0 * math.pi, n)
    speed = rng.uniform(config.speed_min, config.speed_max, n)
    roles = rng.permutation(n)
    confirmed = np.sort(roles[:config.initial_confirmed])
    carriers = np.sort(roles[config.initial_confirmed:
                             config.initial_confirmed + config.initial_carriers])

    health = np.full(n, Health.SUSCEPTIBLE, dtype=np.int8)
    symptom = np.zeros(n)
    infected_at = np.full(n, np.nan)
    # seeds enter with a completed symptom ramp
    for group, state in ((confirmed, Health.CONFIRMED), (carriers, Health.INFECTED)):
        health[group] = state
        infected_at[group] = -config.ramp_duration
        symptom[group] = 1.0

    registry = HealthRegistry(int(i) for i in confirmed)
    masked = np.full(n, config.masked, dtype=bool)
    world = WorldState(config, x, y, heading, speed, masked, health, symptom,
                       infected_at, registry)
    world.carriers = carriers
    return world


def reflect(pos: np.ndarray, upper: float) -> np.ndarray:
    """Fold coordinates back into [0, upper] by specular reflection."""
    out = pos.copy()
    bad = (out < 0.0) | (out > upper)
    if bad.any():
        m = np.mod(out[bad], 2.0 * upper)
        out[bad] = upper - np.abs(m - upper)
    return out


def step_mobility(world: WorldState, rng: np.random.Generator) -> WorldState:
    """One random-walk tick: fresh heading and speed for everyone, then move.

    Quarantined agents draw like everyone else (keeps the stream aligned
    across scenarios) but stay put.
    """
    cfg = world.config
    n = world.n
    heading = rng.uniform(0.0, 2.0 * math.pi, n)
    speed = rng.uniform(cfg.speed_min, cfg.speed_max, n)
    step = np.where(world.quarantined, 0.0, speed * cfg.tick)
    world.heading = heading
    world.speed = speed
    world.x = reflect(world.x + step * np.cos(heading), cfg.area_width)
    world.y = reflect(world.y + step * np.sin(heading), cfg.area_height)
    world.time += cfg.tick
    world.invalidate()
    return world


def neighbors_within(world: WorldState, center: tuple[float, float], radius: float) -> set[int]:
    """Ids of all agents at Euclidean distance <= radius from ``center``."""
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if world.n == 0:
        return set()
    hits = world.index().query(float(center[0]), float(center[1]), float(radius))
    return {int(i) for i in hits}


def scripted_world(config: SimConfig, positions, confirmed=(), carriers=(),
                   infected=()) -> WorldState:
    """World with hand-placed agents, for micro-scenarios and tests.

    ``confirmed`` agents are registered patients; ``carriers`` enter with a
    completed symptom ramp; ``infected`` start their ramp at t=0.
    """
    pos = np.asarray(positions, dtype=np.float64).reshape(-1, 2)
    n = pos.shape[0]
    health = np.full(n, Health.SUSCEPTIBLE, dtype=np.int8)
    symptom = np.zeros(n)
    infected_at = np.full(n, np.nan)
    for ids, state, at in ((confirmed, Health.CONFIRMED, -config.ramp_duration),
                           (carriers, Health.INFECTED, -config.ramp_duration),
                           (infected, Health.INFECTED, 0.0)):
        ids = np.asarray(list(ids), dtype=np.int64)
        health[ids] = state
        infected_at[ids] = at
        symptom[ids] = min(1.0, -at / config.ramp_duration) if at < 0 else 0.0
    world = WorldState(config, pos[:, 0].copy(), pos[:, 1].copy(), np.zeros(n),
                       np.full(n, config.speed_min), np.full(n, config.masked, dtype=bool),
                       health, symptom, infected_at,
                       HealthRegistry(int(i) for i in confirmed))
    world.carriers = np.asarray(sorted(carriers), dtype=np.int64)
    return world
