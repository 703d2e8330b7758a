"""Contact gating, mask-dependent transmission, symptom ramp, wearable telemetry."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import IO, Iterable, Sequence

import numpy as np

from . import kernels
from .config import SimConfig
from .world import STREAMS, Health, WorldState

# Prevalence of fever, fatigue and dry cough among cases, normalized to sum 1.
PREVALENCE = (0.986, 0.70, 0.60)
SYMPTOM_WEIGHTS = tuple(p / sum(PREVALENCE) for p in PREVALENCE)
VITAL_NOISE = 0.05


@dataclass(frozen=True)
class TelemetryRecord:
    agent_id: int
    timestamp: float
    fever: float
    fatigue: float
    cough: float
    composite: float


@dataclass(frozen=True)
class ExposureEvent:
    time: float
    susceptible: int
    source: int
    source_kind: str  # "confirmed" or "symptomatic"


@dataclass
class ContactLedger:
    """Consecutive-proximity counters per (susceptible, source) pair."""

    counts: dict[tuple[int, int], float] = field(default_factory=dict)
    exposed: set[tuple[int, int]] = field(default_factory=set)


def composite_score(fever, fatigue, cough):
    wf, wt, wc = SYMPTOM_WEIGHTS
    total = wf * fever + wt * fatigue + wc * cough
    return np.minimum(total, 1.0) if isinstance(total, np.ndarray) else min(total, 1.0)


def emit_telemetry(agent, now: float, rng: np.random.Generator,
                   noise: float = VITAL_NOISE) -> TelemetryRecord:
    level = agent.symptom_level
    fever, fatigue, cough = (min(1.0, max(0.0, level + d))
                             for d in rng.uniform(-noise, noise, 3))
    return TelemetryRecord(int(agent.id), float(now), fever, fatigue, cough,
                           composite_score(fever, fatigue, cough))


def emit_telemetry_all(symptom: np.ndarray, rng: np.random.Generator,
                       noise: float = VITAL_NOISE) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized :func:`emit_telemetry`: returns ``(vitals[n, 3], composite[n])``.

    Consumes the generator in the same order as ``n`` scalar calls would.
    """
    vitals = np.clip(symptom[:, None] + rng.uniform(-noise, noise, (symptom.shape[0], 3)), 0.0, 1.0)
    return vitals, composite_score(vitals[:, 0], vitals[:, 1], vitals[:, 2])


def window_length(persistence: float, tick: float = 1.0) -> int:
    return max(1, int(math.ceil(persistence / tick - 1e-9)))


def symptom_flag(history: Sequence[float], threshold: float, persistence: float,
                 tick: float = 1.0) -> bool:
    """True iff the last ``persistence`` minutes of samples are all >= threshold."""
    k = window_length(persistence, tick)
    if len(history) < k:
        return False
    return all(v >= threshold for v in list(history)[-k:])


class TelemetryStore:
    """Per-agent wearable stream reduced to an above-threshold streak counter.

    ``record=True`` also keeps the full composite history (and the raw
    records if ``keep_records``) for export and auditing.
    """

    def __init__(self, n: int, config: SimConfig, record: bool = False,
                 keep_records: bool = False):
        self.config = config
        self.streak = np.zeros(n, dtype=np.int64)
        self.window = window_length(config.symptom_persistence, config.tick)
        self.record = record
        self.keep_records = keep_records
        self.history: list[np.ndarray] = []
        self.times: list[float] = []
        self.records: list[TelemetryRecord] = []

    def warm_start(self, ids: Iterable[int]) -> None:
        """Treat ``ids`` as having a full window of high readings before t=0."""
        self.streak[np.asarray(list(ids), dtype=np.int64)] = self.window

    def ingest(self, now: float, vitals: np.ndarray, composite: np.ndarray) -> None:
        high = composite >= self.config.symptom_threshold
        self.streak = np.where(high, self.streak + 1, 0)
        if self.record:
            self.history.append(composite.copy())
            self.times.append(now)
        if self.keep_records:
            for i in range(composite.shape[0]):
                self.records.append(TelemetryRecord(
                    i, float(now), float(vitals[i, 0]), float(vitals[i, 1]),
                    float(vitals[i, 2]), float(composite[i])))

    def flags(self, now: float = None, config: SimConfig | None = None) -> np.ndarray:
        window = self.window if config is None else window_length(
            config.symptom_persistence, config.tick)
        return self.streak >= window

    def series(self, agent_id: int) -> list[float]:
        return [float(h[agent_id]) for h in self.history]

    def dump(self, fh: IO[str]) -> None:
        for rec in self.records:
            fh.write(json.dumps(asdict(rec), sort_keys=True) + "\n")


def advance_symptoms(world: WorldState) -> WorldState:
    """Linear ramp from 0 at infection to 1 after ``ramp_duration`` minutes."""
    cfg = world.config
    sick = ~np.isnan(world.infected_at)
    level = np.zeros(world.n)
    level[sick] = np.minimum(1.0, (world.time - world.infected_at[sick]) / cfg.ramp_duration)
    world.symptom = level
    return world


def infectious_sources(world: WorldState, flags: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """``(source_ids, is_confirmed)`` for everyone currently able to transmit."""
    confirmed = world.health == Health.CONFIRMED
    src = (confirmed | flags) & ~world.quarantined
    ids = np.flatnonzero(src)
    return ids, confirmed[ids]


def update_contacts(world: WorldState, ledger: ContactLedger,
                    flags: np.ndarray) -> tuple[ContactLedger, list[ExposureEvent]]:
    """Advance proximity counters and emit exposures that reach the gate.

    At most one exposure per susceptible per tick; a confirmed source beats a
    symptomatic one, then the lower source id wins. The losing pairs keep
    their (capped) counters.
    """
    cfg = world.config
    src_ids, src_confirmed = infectious_sources(world, flags)
    sus_ids = np.flatnonzero((world.health == Health.SUSCEPTIBLE) & ~world.quarantined)
    si, pj, _ = kernels.cross_within(world.x[src_ids], world.y[src_ids],
                                     world.x[sus_ids], world.y[sus_ids],
                                     cfg.proximity_threshold)

    counts: dict[tuple[int, int], float] = {}
    ready: dict[int, tuple[bool, int]] = {}
    for a, b in zip(si.tolist(), pj.tolist()):
        source = int(src_ids[a])
        target = int(sus_ids[b])
        key = (target, source)
        c = min(ledger.counts.get(key, 0.0) + cfg.tick, cfg.contact_duration)
        counts[key] = c
        if c >= cfg.contact_duration and key not in ledger.exposed:
            rank = (not bool(src_confirmed[a]), source)
            if target not in ready or rank < ready[target]:
                ready[target] = rank
    ledger.counts = counts

    events = []
    for target in sorted(ready):
        symptomatic, source = ready[target]
        ledger.exposed.add((target, source))
        events.append(ExposureEvent(world.time, target, source,
                                    "symptomatic" if symptomatic else "confirmed"))
    return ledger, events


class PairedUniforms:
    """One uniform variate per (susceptible, source) pair, fixed by the seed.

    Reusing the variate across mask scenarios gives common random numbers:
    a pair that infects under the lower probability also infects under the
    higher one.
    """

    def __init__(self, seed: int):
        self.seed = int(seed)

    def draw(self, event: ExposureEvent) -> float:
        ss = np.random.SeedSequence(
            self.seed, spawn_key=(STREAMS["transmission"], event.susceptible, event.source))
        word = int(ss.generate_state(1, np.uint64)[0])
        return (word >> 11) * 2.0**-53


def infection_probability(config: SimConfig) -> float:
    return config.infect_prob_mask if config.masked else config.infect_prob_nomask


def resolve_infection(event: ExposureEvent, config: SimConfig, rng) -> bool:
    """Bernoulli trial for one exposure; True means the target is now infected."""
    u = rng.draw(event) if isinstance(rng, PairedUniforms) else rng.random()
    return u < infection_probability(config)
