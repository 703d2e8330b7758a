import itertools

import numpy as np
import pytest

from containsim.config import preset
from containsim.epidemic import (SYMPTOM_WEIGHTS, ContactLedger, ExposureEvent, PairedUniforms,
                                 TelemetryStore, advance_symptoms, composite_score,
                                 emit_telemetry, emit_telemetry_all, resolve_infection,
                                 symptom_flag, update_contacts, window_length)
from containsim.world import Health, scripted_world

BELOW = np.nextafter(0.9, 0.0)


def literal_rule(history, threshold, k):
    """Count the trailing run of readings >= threshold; flag iff the run covers k samples."""
    run = 0
    for v in reversed(history):
        if not v >= threshold:
            break
        run += 1
    return run >= k


def gate_cfg(duration=10.0):
    return preset("paper-text", area_width=100.0, area_height=100.0, population=2,
                  initial_confirmed=0, initial_carriers=0, contact_duration=duration)


def drive(pattern, duration=10.0):
    """Source 0 (confirmed) sits at (50, 50); agent 1 is near when the pattern says so."""
    cfg = gate_cfg(duration)
    w = scripted_world(cfg, [(50, 50), (90, 90)], confirmed=[0])
    ledger = ContactLedger()
    events = []
    for near in pattern:
        w.time += cfg.tick
        w.x[1], w.y[1] = (51.0, 50.0) if near else (90.0, 90.0)
        w.invalidate()
        ledger, ev = update_contacts(w, ledger, np.zeros(2, dtype=bool))
        events.extend(ev)
    return events


def test_contact_gate_examples():
    assert drive([1] * 9) == []
    ev = drive([1] * 10)
    assert len(ev) == 1 and ev[0].time == 10.0 and ev[0].source_kind == "confirmed"
    assert drive([1] * 6 + [0] + [1] * 6) == []
    # one exposure per pair no matter how long the contact lasts
    assert len(drive([1] * 40)) == 1
    assert len(drive([1], duration=1.0)) == 1


def test_confirmed_source_wins_then_lower_id():
    cfg = gate_cfg(1.0).replace(population=4)
    w = scripted_world(cfg, [(50, 50), (51, 50), (50, 51), (49, 50)], confirmed=[3],
                       carriers=[0])
    flags = np.array([True, False, False, False])
    _, ev = update_contacts(w, ContactLedger(), flags)
    by_target = {e.susceptible: (e.source, e.source_kind) for e in ev}
    assert by_target == {1: (3, "confirmed"), 2: (3, "confirmed")}
    # without the confirmed source the carrier is next in line
    w.quarantined[3] = True
    _, ev = update_contacts(w, ContactLedger(), flags)
    assert {e.susceptible: e.source for e in ev} == {1: 0, 2: 0}


def test_only_susceptibles_are_exposed():
    cfg = gate_cfg(1.0).replace(population=3)
    w = scripted_world(cfg, [(50, 50), (51, 50), (50, 51)], confirmed=[0], infected=[1])
    _, ev = update_contacts(w, ContactLedger(), np.zeros(3, dtype=bool))
    assert [e.susceptible for e in ev] == [2]


def test_infection_probability_extremes():
    ev = ExposureEvent(1.0, 5, 7, "confirmed")
    cfg = preset("paper-text")
    certain = cfg.replace(infect_prob_nomask=1.0, infect_prob_mask=1.0)
    never = cfg.replace(infect_prob_nomask=0.0, infect_prob_mask=0.0)
    rng = np.random.default_rng(0)
    assert all(resolve_infection(ev, certain, rng) for _ in range(200))
    assert not any(resolve_infection(ev, never, rng) for _ in range(200))


def test_paired_uniforms_common_random_numbers():
    pu = PairedUniforms(42)
    masked = preset("paper-text", mask_policy="all-masked")
    bare = preset("paper-text", mask_policy="none-masked")
    for s in range(2000):
        ev = ExposureEvent(0.0, s, s + 1, "confirmed")
        u = pu.draw(ev)
        assert 0.0 <= u < 1.0
        assert u == PairedUniforms(42).draw(ev)
        if resolve_infection(ev, masked, pu):
            assert resolve_infection(ev, bare, pu)


def test_symptom_ramp_endpoints_and_monotone():
    cfg = preset("paper-text", population=1, initial_confirmed=0, initial_carriers=0)
    w = scripted_world(cfg, [(1, 1)], infected=[0])
    levels = []
    for t in range(0, 200):
        w.time = float(t)
        levels.append(float(advance_symptoms(w).symptom[0]))
    assert levels[0] == 0.0
    assert levels[60] == pytest.approx(0.5)
    assert levels[120] == 1.0 and levels[199] == 1.0
    assert all(b >= a for a, b in zip(levels, levels[1:]))


def test_weights_and_composite():
    assert sum(SYMPTOM_WEIGHTS) == pytest.approx(1.0, abs=1e-12)
    assert SYMPTOM_WEIGHTS[0] > SYMPTOM_WEIGHTS[1] > SYMPTOM_WEIGHTS[2]
    assert composite_score(0.0, 0.0, 0.0) == 0.0
    assert composite_score(1.0, 1.0, 1.0) == pytest.approx(1.0, abs=1e-12)
    assert composite_score(1.0, 1.0, 1.0) <= 1.0


def test_vectorized_telemetry_matches_scalar():
    cfg = preset("paper-text", population=30, initial_confirmed=0, initial_carriers=0)
    w = scripted_world(cfg, np.zeros((30, 2)))
    w.symptom = np.linspace(0.0, 1.0, 30)
    vit, comp = emit_telemetry_all(w.symptom, np.random.default_rng(8))
    rng = np.random.default_rng(8)
    for i in range(30):
        rec = emit_telemetry(w.agent(i), 0.0, rng)
        assert (rec.fever, rec.fatigue, rec.cough) == tuple(vit[i])
        assert rec.composite == comp[i]
        assert 0.0 <= rec.composite <= 1.0


def test_window_length():
    assert window_length(60.0) == 60
    assert window_length(60.0, 2.0) == 30
    assert window_length(59.5) == 60
    assert window_length(0.5) == 1


@pytest.mark.parametrize("k", [1, 2, 3, 4, 5])
def test_symptom_flag_exhaustive_binary(k):
    for length in range(0, 11):
        for bits in itertools.product((BELOW, 0.9, 1.0), repeat=length):
            assert symptom_flag(bits, 0.9, k) == literal_rule(bits, 0.9, k), bits


def test_streaming_store_matches_batch_rule():
    cfg = preset("paper-text", population=1, initial_confirmed=0, initial_carriers=0,
                 symptom_persistence=4.0)
    rng = np.random.default_rng(0)
    for _ in range(200):
        series = rng.choice([BELOW, 0.9, 0.95], size=15, p=[0.2, 0.4, 0.4])
        store = TelemetryStore(1, cfg)
        for t, v in enumerate(series):
            store.ingest(float(t), np.zeros((1, 3)), np.array([v]))
            assert bool(store.flags()[0]) == literal_rule(series[:t + 1], 0.9, 4)
