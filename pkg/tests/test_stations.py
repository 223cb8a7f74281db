import cmath
import math

import numpy as np
import pytest

from dpsqkd.optics import ClickEvent, DetectorParams, PulseTrain
from dpsqkd.phases import (
    KEY_PHASES,
    PHASE_0,
    PHASE_90,
    PHASE_180,
    PHASE_270,
    QUATERNARY,
    QuantizedPhase,
)
from dpsqkd.stations import (
    BitOutcome,
    CascadeConfig,
    CheckOutcome,
    Detector,
    PairLead,
    ProtocolError,
    alice_decoy_replace,
    alice_encode,
    alice_energy_monitor,
    alice_sample_and_check,
    bob_measure,
    bob_prepare,
    check_expected_outcome,
    infer_bit,
    lead_parity,
)


def chain_dense(source: complex, stages, phases_rad):
    """Independent preparation oracle: closed-form constructive-port
    recurrence x'(k) = i (x(k) + e^{-i p} x(k - d)) / 2, chained by hand."""
    amps = {1: source}
    for d, p in zip(stages, phases_rad):
        f = cmath.exp(-1j * p)
        keys = sorted(set(amps) | {k + d for k in amps})
        amps = {k: 1j * (amps.get(k, 0) + f * amps.get(k - d, 0)) / 2 for k in keys}
    return amps


# --- cascade config -------------------------------------------------------


def test_cascade_delays_halve_to_one():
    cfg = CascadeConfig(3, PHASE_0)
    assert cfg.delays == (4, 2, 1)
    assert cfg.train_slots == 8
    assert cfg.edge_slots == (1, 9)
    assert CascadeConfig(1, PHASE_0).delays == (1,)
    assert CascadeConfig(5, PHASE_0).delays == (16, 8, 4, 2, 1)


def test_cascade_rejects_zero_stages():
    with pytest.raises(ValueError):
        CascadeConfig(0, PHASE_0)


# --- bob_prepare ----------------------------------------------------------


def test_prepare_three_stages_quarter_turn():
    train = bob_prepare(CascadeConfig(3, PHASE_90), 1.0)
    assert train.occupied_slots() == tuple(range(1, 9))
    for k in range(1, 9):
        assert abs(abs(train.amplitude(k)) - 1 / 8) < 1e-12
    # even slots trail the odd slots by exp(-i pi/2) = -i
    for k in range(2, 9, 2):
        ratio = train.amplitude(k) / train.amplitude(k - 1)
        assert abs(ratio - (-1j)) < 1e-12


def test_prepare_single_stage_equal_phases():
    train = bob_prepare(CascadeConfig(1, PHASE_0), 1.0)
    assert train.occupied_slots() == (1, 2)
    assert abs(train.amplitude(1) - train.amplitude(2)) < 1e-12


def test_prepare_two_stages_sign_flip():
    train = bob_prepare(CascadeConfig(2, PHASE_180), 1.0)
    assert train.occupied_slots() == (1, 2, 3, 4)
    expected = chain_dense(1.0, (2, 1), (0.0, math.pi))
    for k in range(1, 5):
        assert abs(train.amplitude(k) - expected[k]) < 1e-12
    # slots {1, 3} in phase, slots {2, 4} flipped
    assert abs(train.amplitude(3) - train.amplitude(1)) < 1e-12
    assert abs(train.amplitude(2) + train.amplitude(1)) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4])
@pytest.mark.parametrize("qt", [0, 1, 2, 3])
def test_prepare_matches_dense_chain(n, qt):
    cfg = CascadeConfig(n, QuantizedPhase(qt))
    phases = [0.0] * (n - 1) + [qt * math.pi / 2]
    expected = chain_dense(2.0, cfg.delays, phases)
    train = bob_prepare(cfg, 2.0)
    for k in range(1, 2 ** n + 1):
        assert abs(train.amplitude(k) - expected[k]) < 1e-12


# --- alice_encode ---------------------------------------------------------


def test_encode_zero_phase_is_identity():
    train = bob_prepare(CascadeConfig(3, PHASE_90), 1.0)
    assert alice_encode(train, PHASE_0) is train


def test_encode_pi_negates_odd_slots():
    train = bob_prepare(CascadeConfig(3, PHASE_0), 1.0)
    out = alice_encode(train, PHASE_180)
    for k in range(1, 9):
        sign = -1 if k % 2 == 1 else 1
        assert abs(out.amplitude(k) - sign * train.amplitude(k)) < 1e-15


def test_encode_twice_is_identity():
    train = bob_prepare(CascadeConfig(2, PHASE_90), 1.0)
    twice = alice_encode(alice_encode(train, PHASE_180), PHASE_180)
    for k in range(1, 5):
        assert twice.amplitude(k) == train.amplitude(k)


def test_encode_rejects_non_key_phase():
    train = bob_prepare(CascadeConfig(1, PHASE_0), 1.0)
    with pytest.raises(ProtocolError):
        alice_encode(train, PHASE_90)


# --- bob_measure and the readout truth table -------------------------------


def roundtrip(phase_a, phase_b, n=3):
    cfg = CascadeConfig(n, phase_b)
    encoded = alice_encode(bob_prepare(cfg, 1.0), phase_a)
    return bob_measure(encoded, cfg), cfg


def test_measure_both_phases_zero_all_light_at_d1():
    (d1, d2), _ = roundtrip(PHASE_0, PHASE_0)
    for k in range(2, 9):
        assert abs(d1.amplitude(k)) > 1e-9
        assert abs(d2.amplitude(k)) < 1e-12


def test_measure_alice_pi_even_slots_move_to_d2():
    (d1, d2), _ = roundtrip(PHASE_180, PHASE_0)
    for k in (2, 4, 6, 8):
        assert abs(d1.amplitude(k)) < 1e-12
        assert abs(d2.amplitude(k)) > 1e-9


def test_measure_bob_quarter_turn_odd_slots_move_to_d2():
    (d1, d2), _ = roundtrip(PHASE_0, PHASE_90)
    for k in (3, 5, 7):
        assert abs(d1.amplitude(k)) < 1e-12
        assert abs(d2.amplitude(k)) > 1e-9
    for k in (2, 4, 6, 8):
        assert abs(d1.amplitude(k)) > 1e-9
        assert abs(d2.amplitude(k)) < 1e-12


@pytest.mark.parametrize("qa", [0, 2])
@pytest.mark.parametrize("qb", [0, 1, 2, 3])
def test_readout_is_deterministic_and_correct(qa, qb):
    # for every phase combination and every inner slot exactly one detector
    # is lit, and decoding that click returns Alice's phase
    phase_a, phase_b = QuantizedPhase(qa), QuantizedPhase(qb)
    (d1, d2), cfg = roundtrip(phase_a, phase_b)
    expected_bit = BitOutcome.BIT0 if qa == 0 else BitOutcome.BIT1
    for k in range(2, 9):
        lit1 = abs(d1.amplitude(k)) > 1e-9
        lit2 = abs(d2.amplitude(k)) > 1e-9
        assert lit1 != lit2
        detector = Detector.D1 if lit1 else Detector.D2
        assert infer_bit(ClickEvent(detector, k), cfg) is expected_bit


@pytest.mark.parametrize("qa", [0, 2])
@pytest.mark.parametrize("qb", [0, 1, 2, 3])
def test_edge_slots_split_evenly(qa, qb):
    (d1, d2), cfg = roundtrip(QuantizedPhase(qa), QuantizedPhase(qb))
    for k in cfg.edge_slots:
        assert abs(abs(d1.amplitude(k)) - abs(d2.amplitude(k))) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
def test_inner_energy_fraction_is_exact(n):
    cfg = CascadeConfig(n, PHASE_90)
    encoded = alice_encode(bob_prepare(cfg, 1.0), PHASE_180)
    d1, d2 = bob_measure(encoded, cfg)
    total = d1.total_energy + d2.total_energy
    first, last = cfg.edge_slots
    inner = sum(
        abs(d1.amplitude(k)) ** 2 + abs(d2.amplitude(k)) ** 2
        for k in range(first + 1, last)
    )
    assert abs(inner / total - (2 ** n - 1) / 2 ** n) < 1e-12


# --- infer_bit ------------------------------------------------------------


def test_infer_even_slot_ignores_bob_phase():
    for qb in range(4):
        cfg = CascadeConfig(3, QuantizedPhase(qb))
        assert infer_bit(ClickEvent(Detector.D1, 4), cfg) is BitOutcome.BIT0
        assert infer_bit(ClickEvent(Detector.D2, 4), cfg) is BitOutcome.BIT1


def test_infer_odd_slot_uses_doubled_bob_phase():
    # 2 * (pi/2) = pi, so a D2 click at an odd slot decodes to phase 0
    cfg = CascadeConfig(3, PHASE_90)
    assert infer_bit(ClickEvent(Detector.D2, 5), cfg) is BitOutcome.BIT0
    assert infer_bit(ClickEvent(Detector.D1, 5), cfg) is BitOutcome.BIT1


def test_infer_edge_slots_discarded():
    cfg = CascadeConfig(3, PHASE_0)
    assert infer_bit(ClickEvent(Detector.D1, 1), cfg) is BitOutcome.DISCARD
    assert infer_bit(ClickEvent(Detector.D2, 9), cfg) is BitOutcome.DISCARD


def test_infer_rejects_check_detectors():
    cfg = CascadeConfig(3, PHASE_0)
    with pytest.raises(ProtocolError):
        infer_bit(ClickEvent(Detector.D3, 4), cfg)


# --- energy monitor -------------------------------------------------------


def test_energy_monitor_quiet_on_match():
    train = PulseTrain.from_amplitudes({k: 1.0 for k in range(8)})
    assert alice_energy_monitor(train, 8.0, 0.0) is False


def test_energy_monitor_alarms_on_double_energy():
    train = PulseTrain.from_amplitudes({k: 1.0 for k in range(8)})
    assert alice_energy_monitor(train, 4.0, 0.2) is True


def test_energy_monitor_blind_to_flat_phase_substitution():
    # a substitute train with matching per-slot intensity but no phase
    # structure passes the energy check; only the interferometric check can
    # tell them apart
    honest = bob_prepare(CascadeConfig(3, PHASE_90), 1.0)
    flat = PulseTrain.from_amplitudes(
        {k: abs(honest.amplitude(k)) for k in honest.occupied_slots()}
    )
    assert alice_energy_monitor(flat, honest.total_energy, 0.0) is False


def test_energy_monitor_rejects_bad_expectation():
    with pytest.raises(ValueError):
        alice_energy_monitor(PulseTrain.single(1, 1.0), 0.0, 0.1)


# --- sampling check -------------------------------------------------------


def test_sample_prob_zero_never_diverts():
    rng = np.random.default_rng(0)
    train = bob_prepare(CascadeConfig(3, PHASE_0), 1.0)
    for _ in range(100):
        sampled, clicks, out = alice_sample_and_check(train, 0.0, PHASE_0, rng)
        assert not sampled and clicks == [] and out is train


def test_sampled_honest_train_clicks_one_deterministic_port():
    # strong pulses, matched basis (both phases zero): all inner-slot light
    # exits D3 and D4 stays dark
    rng = np.random.default_rng(1)
    train = bob_prepare(CascadeConfig(3, PHASE_0), 64.0)
    sampled, clicks, out = alice_sample_and_check(train, 1.0, PHASE_0, rng)
    assert sampled and len(out) == 0
    inner = [c for c in clicks if 2 <= c.slot <= 8]
    assert inner and all(c.detector is Detector.D3 for c in inner)


def test_sampled_flat_train_contradicts_announced_phase():
    # a flat-phase substitute behaves like bob_phase = 0; when pi is the
    # announced phase the matched-basis expectation is D4, so every observed
    # D3 click is a check error
    rng = np.random.default_rng(2)
    honest = bob_prepare(CascadeConfig(3, PHASE_180), 64.0)
    flat = PulseTrain.from_amplitudes(
        {k: abs(honest.amplitude(k)) for k in honest.occupied_slots()}
    )
    sampled, clicks, _ = alice_sample_and_check(flat, 1.0, PHASE_0, rng)
    assert sampled
    inner = [c for c in clicks if 2 <= c.slot <= 8]
    assert inner
    for c in inner:
        expected = check_expected_outcome(PHASE_180, PHASE_0, lead_parity(c.slot))
        assert expected is CheckOutcome.D4
        assert c.detector is Detector.D3  # wrong port: error detected


def test_sample_and_check_rejects_bad_basis():
    rng = np.random.default_rng(0)
    with pytest.raises(ProtocolError):
        alice_sample_and_check(PulseTrain.single(1, 1.0), 0.5, PHASE_180, rng)


# --- check_expected_outcome ------------------------------------------------


def test_check_outcome_matched_constructive():
    for parity in PairLead:
        assert check_expected_outcome(PHASE_0, PHASE_0, parity) is CheckOutcome.D3


def test_check_outcome_matched_destructive():
    for parity in PairLead:
        assert check_expected_outcome(PHASE_180, PHASE_0, parity) is CheckOutcome.D4


def test_check_outcome_unmatched_bases():
    for parity in PairLead:
        assert check_expected_outcome(PHASE_90, PHASE_0, parity) is CheckOutcome.UNMATCHED


def test_check_outcome_agrees_with_interference():
    # brute force: build the incoming train for each bob phase, pass it
    # through the check stage, and confirm the predicted port is the lit one
    from dpsqkd.optics import mzi_pass

    for qb in range(4):
        phase_b = QuantizedPhase(qb)
        train = bob_prepare(CascadeConfig(3, phase_b), 1.0)
        for qc in (0, 1):
            check = QuantizedPhase(qc)
            d4, d3 = mzi_pass(train, 1, check)
            for k in range(2, 9):
                expected = check_expected_outcome(phase_b, check, lead_parity(k))
                e3, e4 = abs(d3.amplitude(k)), abs(d4.amplitude(k))
                if expected is CheckOutcome.D3:
                    assert e3 > 1e-9 and e4 < 1e-12
                elif expected is CheckOutcome.D4:
                    assert e4 > 1e-9 and e3 < 1e-12
                else:
                    assert abs(e3 - e4) < 1e-12 and e3 > 1e-9


# --- decoy replacement -----------------------------------------------------


def test_decoy_prob_zero_equals_plain_encode():
    rng = np.random.default_rng(0)
    train = bob_prepare(CascadeConfig(3, PHASE_90), 1.0)
    out, positions = alice_decoy_replace(train, PHASE_180, 0.0, PHASE_90, rng)
    assert positions == ()
    plain = alice_encode(train, PHASE_180)
    for k in range(1, 9):
        assert out.amplitude(k) == plain.amplitude(k)


def test_decoy_prob_one_zero_phase_leaves_odd_slots_unmodulated():
    rng = np.random.default_rng(0)
    train = bob_prepare(CascadeConfig(3, PHASE_0), 1.0)
    out, positions = alice_decoy_replace(train, PHASE_180, 1.0, PHASE_0, rng)
    assert positions == (1, 3, 5, 7)
    for k in range(1, 9):
        assert out.amplitude(k) == train.amplitude(k)


def test_decoy_replacement_fraction_is_binomial():
    rng = np.random.default_rng(8)
    n_odd = 100_000
    train = PulseTrain.from_amplitudes({2 * i + 1: 1.0 for i in range(n_odd)})
    _, positions = alice_decoy_replace(train, PHASE_0, 0.5, PHASE_90, rng)
    assert len(positions) / n_odd == pytest.approx(0.5, abs=0.01)


def test_decoy_marks_replaced_phase():
    rng = np.random.default_rng(8)
    train = PulseTrain.from_amplitudes({k: 1.0 for k in range(1, 9)})
    out, positions = alice_decoy_replace(train, PHASE_180, 0.5, PHASE_90, rng)
    for k in range(1, 9, 2):
        expected = -1j if k in positions else -1.0
        assert out.amplitude(k) == expected
    for k in range(2, 9, 2):
        assert out.amplitude(k) == 1.0


def test_decoy_rejects_bad_phases():
    rng = np.random.default_rng(0)
    train = PulseTrain.single(1, 1.0)
    with pytest.raises(ProtocolError):
        alice_decoy_replace(train, PHASE_90, 0.5, PHASE_0, rng)
    with pytest.raises(ProtocolError):
        alice_decoy_replace(train, PHASE_0, 0.5, PHASE_270, rng)
