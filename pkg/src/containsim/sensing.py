"""Camera zones, synthetic detections, the pairwise violation rule, and the
line-delimited detection stream.

Wire format: one JSON object per line with keys ``camera_id`` (str),
``frame_time`` (minutes), ``cx``, ``cy``, ``w``, ``h`` (pixels),
``confidence`` and ``class``. An optional integer ``track_id`` identifies the
same person across frames and enables rising-edge debouncing downstream.
Any other key is ignored.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from . import kernels
from .infra import CellRegion, ValidationError, cells_for_camera, grid_edges

PERSON = "person"
PERSON_WIDTH_M = 0.5
PERSON_HEIGHT_M = 1.7
DEFAULT_MPP = 0.05
WIRE_FIELDS = ("camera_id", "frame_time", "cx", "cy", "w", "h", "confidence", "class")


class DetectionParseError(ValueError):
    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class CameraMismatchError(ValueError):
    """Distances are only defined between detections from one camera."""


@dataclass(frozen=True)
class Detection:
    camera_id: str
    frame_time: float
    cx: float
    cy: float
    width: float
    height: float
    confidence: float = 1.0
    class_label: str = PERSON
    source_agent: Optional[int] = None

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValidationError("detection width and height must be > 0")
        if not 0.0 <= self.confidence <= 1.0:
            raise ValidationError("detection confidence must lie in [0, 1]")


@dataclass(frozen=True)
class CameraZone:
    camera_id: str
    world_rect: tuple[float, float, float, float]
    meters_per_pixel: float = DEFAULT_MPP
    mapped_cells: tuple[int, ...] = ()
    miss_prob: float = 0.0
    closed_x: bool = True
    closed_y: bool = True

    def covers(self, x, y):
        x0, y0, x1, y1 = self.world_rect
        in_x = (x >= x0) & ((x <= x1) if self.closed_x else (x < x1))
        in_y = (y >= y0) & ((y <= y1) if self.closed_y else (y < y1))
        return in_x & in_y

    def to_pixels(self, x, y):
        x0, y0 = self.world_rect[:2]
        return (x - x0) / self.meters_per_pixel, (y - y0) / self.meters_per_pixel

    def to_world(self, cx, cy):
        x0, y0 = self.world_rect[:2]
        return cx * self.meters_per_pixel + x0, cy * self.meters_per_pixel + y0


@dataclass(frozen=True)
class ViolationEvent:
    camera_id: str
    frame_time: float
    first: int   # index into the frame
    second: int
    distance: float
    agents: Optional[tuple[int, int]] = None

    @property
    def debounce_key(self):
        return None if self.agents is None else (self.camera_id, self.agents)


@dataclass
class Frame:
    frame_time: float
    camera_id: str
    detections: list[Detection]


def camera_id_for(row: int, col: int) -> str:
    return f"cam-{row:02d}-{col:02d}"


def make_camera_grid(config, cells: Sequence[CellRegion],
                     meters_per_pixel: float = DEFAULT_MPP) -> list[CameraZone]:
    """Tile the area with ``cols x rows`` cameras (half-open footprints)."""
    cols, rows = config.camera_grid
    xs = grid_edges(config.area_width, cols)
    ys = grid_edges(config.area_height, rows)
    zones = []
    for r in range(rows):
        for c in range(cols):
            zone = CameraZone(camera_id_for(r, c), (xs[c], ys[r], xs[c + 1], ys[r + 1]),
                              meters_per_pixel, (), config.miss_prob,
                              closed_x=(c == cols - 1), closed_y=(r == rows - 1))
            zones.append(_with_cells(zone, cells))
    return zones


def _with_cells(zone: CameraZone, cells) -> CameraZone:
    return CameraZone(zone.camera_id, zone.world_rect, zone.meters_per_pixel,
                      tuple(cells_for_camera(zone, cells)), zone.miss_prob,
                      zone.closed_x, zone.closed_y)


def _visible(world) -> np.ndarray:
    # isolated people are off the street
    return ~world.quarantined


def project_agents(zone: CameraZone, world, rng: np.random.Generator) -> list[Detection]:
    """Nominal person boxes for every agent inside the zone footprint."""
    ids = np.flatnonzero(zone.covers(world.x, world.y) & _visible(world))
    kept = ids[rng.random(ids.shape[0]) >= zone.miss_prob]
    px, py = zone.to_pixels(world.x[kept], world.y[kept])
    mpp = zone.meters_per_pixel
    return [Detection(zone.camera_id, float(world.time), float(cx), float(cy),
                      PERSON_WIDTH_M / mpp, PERSON_HEIGHT_M / mpp, 1.0, PERSON, int(a))
            for a, cx, cy in zip(kept.tolist(), px.tolist(), py.tolist())]


def project_all(zones: Sequence[CameraZone], world, rng: np.random.Generator):
    """Array form of :func:`project_agents` over every zone in order.

    Returns ``(agent_ids, zone_index, px, py)``; rows are grouped by zone and
    ordered by agent id within a zone. Draws from ``rng`` exactly as calling
    :func:`project_agents` once per zone would.
    """
    out_ids, out_zone, out_px, out_py = [], [], [], []
    visible = _visible(world)
    for k, zone in enumerate(zones):
        ids = np.flatnonzero(zone.covers(world.x, world.y) & visible)
        kept = ids[rng.random(ids.shape[0]) >= zone.miss_prob]
        px, py = zone.to_pixels(world.x[kept], world.y[kept])
        out_ids.append(kept)
        out_zone.append(np.full(kept.shape[0], k, dtype=np.int64))
        out_px.append(px)
        out_py.append(py)
    if not out_ids:
        e = np.empty(0)
        return e.astype(np.int64), e.astype(np.int64), e, e
    return (np.concatenate(out_ids), np.concatenate(out_zone),
            np.concatenate(out_px), np.concatenate(out_py))


def pixel_distance_m(dx: float, dy: float, mpp: float) -> float:
    return math.sqrt(dx * dx + dy * dy) * mpp


def inter_object_distance(a: Detection, b: Detection, zone: CameraZone) -> float:
    """Center-to-center distance in meters."""
    if a.camera_id != b.camera_id or a.camera_id != zone.camera_id:
        raise CameraMismatchError(
            f"detections from {a.camera_id!r} and {b.camera_id!r} measured in {zone.camera_id!r}")
    return pixel_distance_m(a.cx - b.cx, a.cy - b.cy, zone.meters_per_pixel)


def _violating_pairs(px, py, groups, mpp: float, threshold: float):
    """Index pairs with center distance strictly below ``threshold`` meters."""
    if threshold <= 0 or px.shape[0] < 2:
        return []
    i, j, d2 = kernels.pairs_within(px, py, threshold / mpp * (1.0 + 1e-9), groups)
    out = []
    for a, b, sq in zip(i.tolist(), j.tolist(), d2.tolist()):
        dist = math.sqrt(sq) * mpp
        if dist < threshold:
            out.append((a, b, dist))
    return out


def detect_violations(frame: Sequence[Detection], zone: CameraZone,
                      threshold: float) -> list[ViolationEvent]:
    """One event per unordered pair of persons closer than ``threshold``."""
    persons = [k for k, d in enumerate(frame) if d.class_label == PERSON]
    if len(persons) < 2:
        return []
    if any(frame[k].camera_id != zone.camera_id for k in persons):
        raise CameraMismatchError(f"frame mixes cameras; zone is {zone.camera_id!r}")
    px = np.array([frame[k].cx for k in persons], dtype=np.float64)
    py = np.array([frame[k].cy for k in persons], dtype=np.float64)
    events = []
    for a, b, dist in _violating_pairs(px, py, None, zone.meters_per_pixel, threshold):
        da, db = frame[persons[a]], frame[persons[b]]
        agents = None
        if da.source_agent is not None and db.source_agent is not None:
            agents = tuple(sorted((da.source_agent, db.source_agent)))
        events.append(ViolationEvent(zone.camera_id, da.frame_time, persons[a], persons[b],
                                     dist, agents))
    return events


def detect_violations_all(zones: Sequence[CameraZone], frame_time: float, ids, zone_idx,
                          px, py, threshold: float) -> list[ViolationEvent]:
    """Violation events for the arrays produced by :func:`project_all`.

    Equivalent to building per-zone frames and calling
    :func:`detect_violations` on each; ``first``/``second`` index into that
    per-zone frame.
    """
    if ids.shape[0] < 2:
        return []
    mpps = {z.meters_per_pixel for z in zones}
    if len(mpps) != 1:
        frames = frames_from_arrays(zones, frame_time, ids, zone_idx, px, py)
        return [v for k, f in frames for v in detect_violations(f.detections, zones[k], threshold)]
    mpp = mpps.pop()
    starts = np.searchsorted(zone_idx, np.arange(len(zones)))
    events = []
    for a, b, dist in _violating_pairs(px, py, zone_idx, mpp, threshold):
        k = int(zone_idx[a])
        pair = tuple(sorted((int(ids[a]), int(ids[b]))))
        events.append(ViolationEvent(zones[k].camera_id, frame_time,
                                     a - int(starts[k]), b - int(starts[k]), dist, pair))
    return events


def frames_from_arrays(zones, frame_time, ids, zone_idx, px, py) -> list[tuple[int, Frame]]:
    out = []
    for k, zone in enumerate(zones):
        sel = np.flatnonzero(zone_idx == k)
        mpp = zone.meters_per_pixel
        dets = [Detection(zone.camera_id, float(frame_time), float(px[s]), float(py[s]),
                          PERSON_WIDTH_M / mpp, PERSON_HEIGHT_M / mpp, 1.0, PERSON, int(ids[s]))
                for s in sel]
        out.append((k, Frame(float(frame_time), zone.camera_id, dets)))
    return out


# ---------------------------------------------------------------------------
# wire format
# ---------------------------------------------------------------------------


def _number(obj, key, line_no):
    value = obj.get(key)
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise DetectionParseError(line_no, f"field {key!r} must be a finite number")
    return float(value)


def parse_detection_line(line: str, line_no: int = 1) -> Detection:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise DetectionParseError(line_no, f"invalid JSON ({exc.msg})") from None
    if not isinstance(obj, dict):
        raise DetectionParseError(line_no, "expected an object")
    missing = [k for k in WIRE_FIELDS if k not in obj]
    if missing:
        raise DetectionParseError(line_no, f"missing field(s) {', '.join(missing)}")
    if not isinstance(obj["camera_id"], str) or not isinstance(obj["class"], str):
        raise DetectionParseError(line_no, "camera_id and class must be strings")
    track = obj.get("track_id")
    if track is not None and (isinstance(track, bool) or not isinstance(track, int)):
        raise DetectionParseError(line_no, "track_id must be an integer")
    try:
        return Detection(
            obj["camera_id"], _number(obj, "frame_time", line_no),
            _number(obj, "cx", line_no), _number(obj, "cy", line_no),
            _number(obj, "w", line_no), _number(obj, "h", line_no),
            _number(obj, "confidence", line_no), obj["class"], track)
    except ValidationError as exc:
        raise DetectionParseError(line_no, str(exc)) from None


def ingest_detection_stream(lines: Iterable[str],
                            known_cameras: Optional[Iterable[str]] = None) -> list[Frame]:
    """Group a detection stream into frames ordered by (frame_time, camera_id).

    Blank lines are skipped. Input order is preserved within each frame.
    """
    known = None if known_cameras is None else set(known_cameras)
    frames: dict[tuple[float, str], Frame] = {}
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        det = parse_detection_line(line, line_no)
        if known is not None and det.camera_id not in known:
            raise ValidationError(f"line {line_no}: unknown camera_id {det.camera_id!r}")
        key = (det.frame_time, det.camera_id)
        if key not in frames:
            frames[key] = Frame(det.frame_time, det.camera_id, [])
        frames[key].detections.append(det)
    return [frames[k] for k in sorted(frames)]


def detection_to_line(det: Detection) -> str:
    obj = {
        "camera_id": det.camera_id,
        "frame_time": det.frame_time,
        "cx": det.cx,
        "cy": det.cy,
        "w": det.width,
        "h": det.height,
        "confidence": det.confidence,
        "class": det.class_label,
    }
    if det.source_agent is not None:
        obj["track_id"] = det.source_agent
    return json.dumps(obj)


def serialize_frames(frames: Iterable[Frame]) -> Iterator[str]:
    for frame in frames:
        for det in frame.detections:
            yield detection_to_line(det)
