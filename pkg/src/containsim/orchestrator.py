"""Violation-triggered area scans, containment actions, and the event ledger.

Each tick runs a fixed phase order:

1. mobility step (quarantines ordered last tick take effect first)
2. symptom advance + wearable telemetry
3. contacts -> exposures -> infections
4. per-camera projection (or ingested frames) + violation detection
5. area scan and actions for each rising-edge violation
6. metrics update

Changing this order changes every ledger; treat it as a format break.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import IO, Any, Iterable, Optional, Sequence

import numpy as np

from .config import SimConfig
from .epidemic import (ContactLedger, PairedUniforms, TelemetryStore, advance_symptoms,
                       emit_telemetry_all, resolve_infection, update_contacts)
from .infra import HealthRegistry, active_users_mask, make_cell_grid
from .sensing import (CameraZone, Frame, ViolationEvent, detect_violations,
                      detect_violations_all, frames_from_arrays, make_camera_grid, project_all)
from .world import Health, WorldState, init_world, neighbors_within, rng_stream, step_mobility


class QuarantineError(RuntimeError):
    """A quarantine was requested for someone outside the registry."""


KIND_PRIORITY = {
    "Exposure": 0,
    "Infection": 1,
    "Violation": 2,
    "AreaScan": 3,
    "QuarantineOrder": 4,
    "AreaAdvisory": 5,
    "SelfIsolationNotice": 6,
}


@dataclass(frozen=True)
class Event:
    time: float
    kind: str
    payload: dict

    def sort_key(self, seq: int):
        camera = self.payload.get("camera_id") or ""
        agents = tuple(v for k, v in sorted(self.payload.items())
                       if k in ("agent", "susceptible", "source", "agents") and v is not None)
        flat = []
        for v in agents:
            flat.extend(v if isinstance(v, (list, tuple)) else [v])
        return (KIND_PRIORITY[self.kind], camera, tuple(flat), seq)

    def to_json(self) -> str:
        return json.dumps({"time": self.time, "kind": self.kind, "payload": self.payload},
                          sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "Event":
        obj = json.loads(line)
        return cls(obj["time"], obj["kind"], obj["payload"])


class EventLedger:
    """Append-only, time-ordered event log."""

    def __init__(self):
        self.events: list[Event] = []

    def extend_tick(self, batch: Sequence[Event]) -> None:
        """Append one tick's events in canonical order."""
        keyed = sorted(((e.sort_key(k), e) for k, e in enumerate(batch)), key=lambda p: p[0])
        self.events.extend(e for _, e in keyed)

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    def of_kind(self, kind: str) -> list[Event]:
        return [e for e in self.events if e.kind == kind]

    def dumps(self) -> str:
        return "".join(e.to_json() + "\n" for e in self.events)

    def dump(self, fh: IO[str]) -> None:
        fh.write(self.dumps())

    @classmethod
    def loads(cls, text: str) -> "EventLedger":
        ledger = cls()
        ledger.events = [Event.from_json(line) for line in text.splitlines() if line.strip()]
        return ledger


METRIC_NAMES = ("exposed_to_confirmed", "exposed_to_symptomatic", "infected_total",
                "notices_sent", "quarantines", "violations")
METRIC_COLUMNS = ("time",) + METRIC_NAMES + tuple("new_" + m for m in METRIC_NAMES)


class Metrics:
    """Cumulative and per-tick counters, one row per tick."""

    def __init__(self):
        self.rows: list[dict[str, float]] = []
        self._exposed_confirmed: set[int] = set()
        self._exposed_symptomatic: set[int] = set()
        self._totals = dict.fromkeys(METRIC_NAMES, 0)

    def record(self, time: float, exposures, infections: int, notices: int,
               quarantines: int, violations: int) -> None:
        before = dict(self._totals)
        for ev in exposures:
            if ev.source_kind == "confirmed":
                self._exposed_confirmed.add(ev.susceptible)
            else:
                self._exposed_symptomatic.add(ev.susceptible)
        t = self._totals
        t["exposed_to_confirmed"] = len(self._exposed_confirmed)
        t["exposed_to_symptomatic"] = len(self._exposed_symptomatic)
        t["infected_total"] += infections
        t["notices_sent"] += notices
        t["quarantines"] += quarantines
        t["violations"] += violations
        row = {"time": time}
        row.update(t)
        row.update({"new_" + k: t[k] - before[k] for k in METRIC_NAMES})
        self.rows.append(row)

    def final(self) -> dict[str, int]:
        return dict(self._totals)

    def series(self, name: str) -> list[float]:
        return [r[name] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(METRIC_COLUMNS)
        for r in self.rows:
            writer.writerow([_fmt_time(r["time"])] + [int(r[c]) for c in METRIC_COLUMNS[1:]])
        return buf.getvalue()


def _fmt_time(t: float) -> str:
    return str(int(t)) if float(t).is_integer() else repr(float(t))


@dataclass
class _TickScratch:
    scans: dict = field(default_factory=dict)
    swept: set = field(default_factory=set)


class Simulation:
    """One seeded run. ``frames`` replaces synthetic projection with an
    external detection stream (see :func:`containsim.sensing.ingest_detection_stream`).
    """

    def __init__(self, config: SimConfig, frames: Optional[Iterable[Frame]] = None,
                 registry: Optional[HealthRegistry] = None, record_telemetry: bool = False,
                 world: Optional[WorldState] = None):
        self.config = config
        self.world = world if world is not None else init_world(config)
        if registry is not None:
            for a in registry:
                if not 0 <= a < self.world.n:
                    raise ValueError(f"registry id {a} outside population")
                self.world.registry.add(a)
                self.world.health[a] = Health.CONFIRMED
        self.registry = self.world.registry
        self.cells = make_cell_grid(config.area_width, config.area_height, config.cell_grid)
        self.zones = make_camera_grid(config, self.cells)
        self.zones_by_id = {z.camera_id: z for z in self.zones}
        self.telemetry = TelemetryStore(self.world.n, config, record=record_telemetry)
        self.telemetry.warm_start(self.world.carriers)
        self.contacts = ContactLedger()
        self.ledger = EventLedger()
        self.metrics = Metrics()
        seed = config.rng_seed
        self.rng_mobility = rng_stream(seed, "mobility")
        self.rng_telemetry = rng_stream(seed, "telemetry")
        self.rng_sensing = rng_stream(seed, "sensing")
        self.transmission = PairedUniforms(seed)
        self.pending_quarantine: list[int] = []
        self.ordered: set[int] = set()
        self.notified: set[tuple[int, int]] = set()
        self.active_violations: set = set()
        self.flags = np.zeros(self.world.n, dtype=bool)
        self._prev_flags = self.flags.copy()
        self.capture_frames = False
        self.captured: list[Frame] = []
        self.external: Optional[dict[float, list[Frame]]] = None
        if frames is not None:
            self.external = {}
            for f in frames:
                if f.camera_id not in self.zones_by_id:
                    raise ValueError(f"unknown camera_id {f.camera_id!r}")
                self.external.setdefault(float(f.frame_time), []).append(f)
        self._scratch = _TickScratch()

    # -- phase helpers -----------------------------------------------------

    def _registry_mask(self) -> np.ndarray:
        mask = np.zeros(self.world.n, dtype=bool)
        ids = list(self.registry)
        if ids:
            mask[ids] = True
        return mask

    def _area(self, zone: CameraZone):
        """Active, non-isolated users in the zone's cells; cached per tick."""
        key = zone.mapped_cells
        hit = self._scratch.scans.get(key)
        if hit is None:
            w = self.world
            users = active_users_mask(key, self.cells, w.x, w.y) & ~w.quarantined
            hit = (users, users & self._registry_mask(), users & self.flags)
            self._scratch.scans[key] = hit
        return hit

    def handle_violation(self, v: ViolationEvent) -> list[Event]:
        """Area scan plus the confirmed / symptomatic / clean branch."""
        now = self.world.time
        zone = self.zones_by_id[v.camera_id]
        users, confirmed, flagged = self._area(zone)
        cells = list(zone.mapped_cells)
        out = [Event(now, "AreaScan", {
            "camera_id": v.camera_id, "cells": cells,
            "active_users": int(users.sum()), "confirmed": int(confirmed.sum()),
            "symptomatic": int(flagged.sum())})]
        if confirmed.any():
            for a in np.flatnonzero(confirmed).tolist():
                if a in self.ordered:
                    continue
                self.ordered.add(a)
                self.pending_quarantine.append(a)
                out.append(Event(now, "QuarantineOrder", {"agent": a, "camera_id": v.camera_id}))
            out.append(Event(now, "AreaAdvisory", {
                "camera_id": v.camera_id, "cells": cells, "recipients": int(users.sum())}))
        elif flagged.any():
            out.extend(self._isolation_notices(np.flatnonzero(flagged).tolist(), v.camera_id))
        return out

    def _isolation_notices(self, flagged_ids: list[int], camera_id: Optional[str]) -> list[Event]:
        """Notices to each flagged agent and everyone within the proximity radius.

        A recipient is notified at most once per flagged agent per run.
        """
        w = self.world
        radius = self.config.proximity_threshold
        out = []
        for f in flagged_ids:
            if f in self._scratch.swept:
                continue
            self._scratch.swept.add(f)
            near = neighbors_within(w, (float(w.x[f]), float(w.y[f])), radius)
            targets = [(f, "flagged")] + [(a, "proximity") for a in sorted(near) if a != f]
            for a, reason in targets:
                if w.quarantined[a] or (a, f) in self.notified:
                    continue
                self.notified.add((a, f))
                out.append(Event(w.time, "SelfIsolationNotice", {
                    "agent": a, "camera_id": camera_id, "reason": reason, "flagged_agent": f}))
        return out

    def apply_quarantine(self, agent: int) -> WorldState:
        return apply_quarantine(agent, self.world)

    def _violations(self) -> list[ViolationEvent]:
        w = self.world
        threshold = self.config.distance_violation_threshold
        if self.external is not None:
            out = []
            for frame in sorted(self.external.get(float(w.time), []), key=lambda f: f.camera_id):
                out.extend(detect_violations(frame.detections, self.zones_by_id[frame.camera_id],
                                             threshold))
            return out
        ids, zone_idx, px, py = project_all(self.zones, w, self.rng_sensing)
        if self.capture_frames:
            self.captured.extend(f for _, f in frames_from_arrays(
                self.zones, w.time, ids, zone_idx, px, py) if f.detections)
        return detect_violations_all(self.zones, float(w.time), ids, zone_idx, px, py, threshold)

    # -- tick --------------------------------------------------------------

    def tick(self) -> None:
        cfg = self.config
        w = self.world
        self._scratch = _TickScratch()
        batch: list[Event] = []

        if cfg.quarantine_enabled:
            for a in self.pending_quarantine:
                apply_quarantine(a, w)
        self.pending_quarantine = []

        # 1
        step_mobility(w, self.rng_mobility)
        # 2
        advance_symptoms(w)
        vitals, composite = emit_telemetry_all(w.symptom, self.rng_telemetry)
        self.telemetry.ingest(w.time, vitals, composite)
        self.flags = self.telemetry.flags()
        # 3
        self.contacts, exposures = update_contacts(w, self.contacts, self.flags)
        infections = 0
        for ev in exposures:
            batch.append(Event(w.time, "Exposure", {
                "susceptible": ev.susceptible, "source": ev.source, "source_kind": ev.source_kind}))
            w.health[ev.susceptible] = Health.EXPOSED_PENDING
            if resolve_infection(ev, cfg, self.transmission):
                w.health[ev.susceptible] = Health.INFECTED
                w.infected_at[ev.susceptible] = w.time
                infections += 1
                batch.append(Event(w.time, "Infection", {"agent": ev.susceptible, "source": ev.source}))
            else:
                w.health[ev.susceptible] = Health.SUSCEPTIBLE
        # 4 + 5
        violations = self._violations()
        current = set()
        for v in violations:
            key = v.debounce_key
            rising = key is None or key not in self.active_violations
            if key is not None:
                current.add(key)
            batch.append(Event(w.time, "Violation", {
                "camera_id": v.camera_id, "agents": list(v.agents) if v.agents else None,
                "first": v.first, "second": v.second, "distance": v.distance,
                "handled": rising}))
            if rising:
                batch.extend(self.handle_violation(v))
        self.active_violations = current

        if cfg.global_symptom_watch:
            rising_flags = np.flatnonzero(self.flags & ~self._prev_flags & ~w.quarantined)
            batch.extend(self._isolation_notices(rising_flags.tolist(), None))
        self._prev_flags = self.flags.copy()

        # 6
        notices = sum(1 for e in batch if e.kind == "SelfIsolationNotice")
        orders = sum(1 for e in batch if e.kind == "QuarantineOrder")
        self.metrics.record(w.time, exposures, infections, notices, orders, len(violations))
        self.ledger.extend_tick(batch)

    def run(self) -> tuple[EventLedger, Metrics]:
        for _ in range(self.config.n_ticks):
            self.tick()
        return self.ledger, self.metrics


def apply_quarantine(agent: int, world: WorldState) -> WorldState:
    """Take a registered patient off the street and out of the source set."""
    if agent not in world.registry:
        raise QuarantineError(f"agent {agent} is not a registered confirmed patient")
    world.quarantined[agent] = True
    world.invalidate()
    return world


def simulation_tick(sim: Simulation) -> Simulation:
    sim.tick()
    return sim


def run_scenario(config: SimConfig, seed: Optional[int] = None, **kwargs: Any
                 ) -> tuple[EventLedger, Metrics]:
    """Run ``horizon / tick`` ticks and return the ledger and metric series."""
    if seed is not None:
        config = config.replace(rng_seed=int(seed))
    return Simulation(config, **kwargs).run()
