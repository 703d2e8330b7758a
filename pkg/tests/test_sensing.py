import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from containsim.config import preset
from containsim.infra import ValidationError, make_cell_grid
from containsim.sensing import (CameraMismatchError, CameraZone, Detection, DetectionParseError,
                                detect_violations, detect_violations_all, detection_to_line,
                                frames_from_arrays, ingest_detection_stream,
                                inter_object_distance, make_camera_grid, parse_detection_line,
                                project_agents, project_all, serialize_frames)
from containsim.world import init_world, scripted_world


def det(cx, cy, cam="c", t=0.0, cls="person", track=None):
    return Detection(cam, t, cx, cy, 10.0, 34.0, 0.9, cls, track)


def brute_violations(frame, mpp, threshold):
    out = []
    persons = [k for k, d in enumerate(frame) if d.class_label == "person"]
    for a in range(len(persons)):
        for b in range(a + 1, len(persons)):
            p, q = frame[persons[a]], frame[persons[b]]
            dx, dy = p.cx - q.cx, p.cy - q.cy
            if math.sqrt(dx * dx + dy * dy) * mpp < threshold:
                out.append((persons[a], persons[b]))
    return out


def test_projection_origin_and_box():
    cfg = preset("paper-text", population=1, initial_confirmed=0, initial_carriers=0)
    w = scripted_world(cfg, [(100.0, 200.0)])
    zone = CameraZone("z", (100.0, 200.0, 300.0, 400.0), 0.05)
    (d,) = project_agents(zone, w, np.random.default_rng(0))
    assert (d.cx, d.cy) == (0.0, 0.0)
    assert d.width == pytest.approx(10.0) and d.height == pytest.approx(34.0)
    assert d.confidence == 1.0 and d.source_agent == 0


def test_miss_prob_one_drops_everything(small_cfg):
    w = init_world(small_cfg)
    zone = CameraZone("z", (0.0, 0.0, 200.0, 200.0), 0.05, miss_prob=1.0)
    assert project_agents(zone, w, np.random.default_rng(0)) == []


def test_projection_round_trip(small_cfg):
    w = init_world(small_cfg)
    for zone in make_camera_grid(small_cfg, make_cell_grid(200, 200, (2, 2))):
        for d in project_agents(zone, w, np.random.default_rng(1)):
            x, y = zone.to_world(d.cx, d.cy)
            assert abs(x - w.x[d.source_agent]) <= 1e-9
            assert abs(y - w.y[d.source_agent]) <= 1e-9


def test_array_projection_matches_per_zone(small_cfg):
    w = init_world(small_cfg.replace(miss_prob=0.3))
    zones = make_camera_grid(small_cfg.replace(miss_prob=0.3), make_cell_grid(200, 200, (2, 2)))
    rng = np.random.default_rng(4)
    per_zone = [project_agents(z, w, rng) for z in zones]
    ids, zi, px, py = project_all(zones, w, np.random.default_rng(4))
    flat = [d for dets in per_zone for d in dets]
    assert [d.source_agent for d in flat] == ids.tolist()
    assert [d.cx for d in flat] == px.tolist()
    frames = frames_from_arrays(zones, w.time, ids, zi, px, py)
    assert [[d.source_agent for d in f.detections] for _, f in frames] == \
        [[d.source_agent for d in dets] for dets in per_zone]


def test_distance_examples():
    unit = CameraZone("c", (0, 0, 10, 10), 1.0)
    half = CameraZone("c", (0, 0, 10, 10), 0.5)
    assert inter_object_distance(det(0, 0), det(3, 4), unit) == 5.0
    assert inter_object_distance(det(2, 2), det(2, 2), unit) == 0.0
    assert inter_object_distance(det(0, 0), det(10, 0), half) == 5.0
    with pytest.raises(CameraMismatchError):
        inter_object_distance(det(0, 0), det(1, 1, cam="other"), unit)


def test_violation_examples():
    zone = CameraZone("c", (0, 0, 100, 100), 1.0)
    # 2 m, 6 m and 7 m apart (a-b, b-c, a-c)
    a, b, c = det(0, 0), det(2, 0), det(2, 6)
    frame = [a, b, c]
    assert math.isclose(inter_object_distance(a, c, zone), math.sqrt(40))
    ev = detect_violations(frame, zone, 5.0)
    assert [(e.first, e.second, e.distance) for e in ev] == [(0, 1, 2.0)]
    assert detect_violations([a], zone, 5.0) == []
    assert detect_violations([det(0, 0), det(5, 0)], zone, 5.0) == []
    assert len(detect_violations([det(0, 0), det(4.999, 0)], zone, 5.0)) == 1


def test_non_person_detections_ignored():
    zone = CameraZone("c", (0, 0, 100, 100), 1.0)
    frame = [det(0, 0), det(1, 0, cls="bicycle"), det(1, 1)]
    ev = detect_violations(frame, zone, 5.0)
    assert [(e.first, e.second) for e in ev] == [(0, 2)]


@settings(max_examples=200, deadline=None)
@given(pts=st.lists(st.tuples(st.floats(0, 200), st.floats(0, 200)), max_size=30),
       mpp=st.sampled_from([0.05, 0.1, 1.0]), threshold=st.sampled_from([0.5, 3.0, 5.0]))
def test_violations_match_brute_force_and_are_order_free(pts, mpp, threshold):
    zone = CameraZone("c", (0, 0, 1, 1), mpp)
    frame = [det(x, y) for x, y in pts]
    got = [(e.first, e.second) for e in detect_violations(frame, zone, threshold)]
    assert got == brute_violations(frame, mpp, threshold)
    perm = list(reversed(range(len(frame))))
    rev = [frame[k] for k in perm]
    pairs_rev = {frozenset((perm[e.first], perm[e.second]))
                 for e in detect_violations(rev, zone, threshold)}
    assert pairs_rev == {frozenset(p) for p in got}


def test_synthetic_sensing_is_sound():
    cfg = preset("paper-text", area_width=100.0, area_height=100.0, population=2,
                 initial_confirmed=0, initial_carriers=0, camera_grid=(1, 1), cell_grid=(1, 1))
    zones = make_camera_grid(cfg, make_cell_grid(100, 100, (1, 1)))
    rng = np.random.default_rng(0)
    for _ in range(300):
        p = rng.uniform(5, 95, 2)
        d = rng.uniform(0, 2.999)
        ang = rng.uniform(0, 2 * math.pi)
        w = scripted_world(cfg, [p, p + d * np.array([math.cos(ang), math.sin(ang)])])
        arrays = project_all(zones, w, rng)
        ev = detect_violations_all(zones, 0.0, *arrays, cfg.distance_violation_threshold)
        assert len(ev) == 1 and ev[0].agents == (0, 1)


def test_ingest_grouping_and_order():
    lines = [detection_to_line(d) for d in
             (det(1, 1, cam="b", t=2.0), det(2, 2, cam="a", t=2.0), det(3, 3, cam="b", t=2.0),
              det(4, 4, cam="a", t=1.0))]
    frames = ingest_detection_stream(lines + [""])
    assert [(f.frame_time, f.camera_id, len(f.detections)) for f in frames] == \
        [(1.0, "a", 1), (2.0, "a", 1), (2.0, "b", 2)]
    assert [d.cx for d in frames[2].detections] == [1.0, 3.0]
    assert ingest_detection_stream([]) == []


def test_extra_fields_ignored_and_track_parsed():
    obj = dict(camera_id="a", frame_time=1, cx=1, cy=2, w=3, h=4, confidence=0.5,
               **{"class": "person"}, track_id=7, note="x")
    d = parse_detection_line(json.dumps(obj))
    assert (d.cx, d.source_agent) == (1.0, 7)


@pytest.mark.parametrize("bad", [
    "not json", "[1, 2]", '{"camera_id": "a"}',
    '{"camera_id": "a", "frame_time": 1, "cx": 1, "cy": 1, "w": 0, "h": 1, "confidence": 1, "class": "person"}',
    '{"camera_id": "a", "frame_time": 1, "cx": "x", "cy": 1, "w": 1, "h": 1, "confidence": 1, "class": "person"}',
    '{"camera_id": "a", "frame_time": 1, "cx": 1, "cy": 1, "w": 1, "h": 1, "confidence": 2, "class": "person"}',
])
def test_parse_errors_report_line_number(bad):
    good = detection_to_line(det(0, 0))
    with pytest.raises(DetectionParseError) as info:
        ingest_detection_stream([good, good, bad])
    assert info.value.line_no == 3 and "line 3" in str(info.value)


def test_unknown_camera_rejected():
    with pytest.raises(ValidationError):
        ingest_detection_stream([detection_to_line(det(0, 0, cam="zz"))], known_cameras={"a"})


def test_fuzzed_corpus_round_trips():
    rng = np.random.default_rng(17)
    cams = [f"cam-{k:02d}" for k in range(5)]
    lines = []
    for _ in range(1000):
        d = Detection(str(rng.choice(cams)), float(rng.integers(0, 20)),
                      float(rng.uniform(-1e3, 1e4)), float(rng.uniform(-1e3, 1e4)),
                      float(rng.uniform(1e-3, 500)), float(rng.uniform(1e-3, 500)),
                      float(rng.uniform(0, 1)), str(rng.choice(["person", "car"])),
                      int(rng.integers(0, 1000)) if rng.random() < 0.5 else None)
        lines.append(detection_to_line(d))
    frames = ingest_detection_stream(lines)
    out = list(serialize_frames(frames))
    assert sorted(out) == sorted(lines)
    again = ingest_detection_stream(out)
    assert list(serialize_frames(again)) == out
    assert sum(len(f.detections) for f in frames) == 1000
