"""Protocol roles for the two stations.

Bob prepares a 2^n-slot pulse train with a cascade of delay-line
interferometers (delays 2^(n-1) .. 2, 1 slots) and, on the return pass,
reuses the last stage to interfere neighbouring slots onto detectors D1/D2.
Alice attenuates, encodes her key phase on the odd slots, optionally
replaces some of them with decoy phases, monitors the incoming energy,
randomly diverts whole trains to a check interferometer (detectors D3/D4),
and reflects everything else off a Faraday mirror.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .optics import (
    ClickEvent,
    DetectorParams,
    IDEAL_DETECTOR,
    PulseTrain,
    detect,
    mzi_pass,
    phase_modulate,
)
from .phases import CHECK_PHASES, KEY_PHASES, PHASE_180, QuantizedPhase


class ProtocolError(ValueError):
    """A station was driven outside the protocol's contract."""


class Detector(Enum):
    D1 = "D1"
    D2 = "D2"
    D3 = "D3"
    D4 = "D4"


class BitOutcome(Enum):
    BIT0 = 0
    BIT1 = 1
    DISCARD = "discard"


class PairLead(Enum):
    """Parity of the earlier pulse in an interfering neighbour pair."""

    ODD_LEAD = "odd_lead"
    EVEN_LEAD = "even_lead"


class CheckOutcome(Enum):
    D3 = "D3"
    D4 = "D4"
    UNMATCHED = "unmatched"


@dataclass(frozen=True)
class CascadeConfig:
    """Geometry of Bob's preparation cascade plus his phase for the round.

    Delays halve stage by stage down to one slot, so the 2^n pulses of the
    prepared train land on consecutive slots without overlapping.
    """

    n_stages: int
    bob_phase: QuantizedPhase
    delays: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        if self.n_stages < 1:
            raise ValueError(f"n_stages must be >= 1, got {self.n_stages}")
        object.__setattr__(
            self, "delays", tuple(2 ** i for i in reversed(range(self.n_stages)))
        )

    @property
    def train_slots(self) -> int:
        return 2 ** self.n_stages

    @property
    def edge_slots(self) -> tuple[int, int]:
        """The two return-train slots where no interference takes place."""
        return (1, 2 ** self.n_stages + 1)


def _is_odd(slot: int) -> bool:
    return slot % 2 == 1


def bob_prepare(config: CascadeConfig, source_amplitude: complex) -> PulseTrain:
    """Split one source pulse into 2^n equal-magnitude slots.

    The cascade chains the constructive port of each stage; only the last
    stage (delay 1) carries Bob's phase in its long arm, so the prepared
    train has relative phase 0 on odd slots and bob_phase on even slots.
    Each pass halves the kept field, so per-slot magnitude is |source|/2^n.
    """
    train = PulseTrain.single(1, source_amplitude)
    last = len(config.delays) - 1
    for i, delay in enumerate(config.delays):
        phase = config.bob_phase if i == last else QuantizedPhase(0)
        _, train = mzi_pass(train, delay, phase)
    return train


def alice_encode(train: PulseTrain, key_phase: QuantizedPhase) -> PulseTrain:
    """Encode Alice's key bit as a common phase on the odd slots."""
    if key_phase not in KEY_PHASES:
        raise ProtocolError(f"key phase must be 0 or pi, got {key_phase}")
    return phase_modulate(train, _is_odd, key_phase)


def bob_measure(return_train: PulseTrain, config: CascadeConfig) -> tuple[PulseTrain, PulseTrain]:
    """Interfere neighbouring slots of the returned train onto D1/D2.

    One pass through the delay-1 stage, whose long-arm modulator applies
    bob_phase again on the way in. Output slots run 1 .. 2^n + 1; D1 is the
    constructive port, so with both phases zero every inner slot exits D1.
    """
    d2, d1 = mzi_pass(return_train, 1, config.bob_phase)
    return d1, d2


def infer_bit(click: ClickEvent, config: CascadeConfig) -> BitOutcome:
    """Bob's readout rule, exact in quarter-turn arithmetic.

    Edge slots are discarded. On even slots D1 means bit 0 and D2 bit 1.
    On odd inner slots D1 means Alice's phase equalled twice Bob's phase
    (mod 2 pi) and D2 the opposite, so the bit follows from bob_phase alone.
    """
    if click.detector not in (Detector.D1, Detector.D2):
        raise ProtocolError(f"key readout uses D1/D2 only, got {click.detector}")
    first, last = config.edge_slots
    if click.slot == first or click.slot == last:
        return BitOutcome.DISCARD
    if click.slot % 2 == 0:
        return BitOutcome.BIT0 if click.detector is Detector.D1 else BitOutcome.BIT1
    inferred = config.bob_phase.doubled()
    if click.detector is Detector.D2:
        inferred = inferred + PHASE_180
    return BitOutcome.BIT0 if inferred.quarter_turns == 0 else BitOutcome.BIT1


def alice_energy_monitor(train: PulseTrain, expected_energy: float, rel_tolerance: float) -> bool:
    """True (alarm) iff the incoming energy strays beyond the tolerance."""
    if expected_energy <= 0:
        raise ValueError(f"expected_energy must be > 0, got {expected_energy}")
    return abs(train.total_energy - expected_energy) / expected_energy > rel_tolerance


def alice_sample_and_check(
    train: PulseTrain,
    sample_prob: float,
    check_phase: QuantizedPhase,
    rng: np.random.Generator,
    detector_params: DetectorParams = IDEAL_DETECTOR,
) -> tuple[bool, list[ClickEvent], PulseTrain]:
    """Divert the whole train to the check interferometer with probability
    ``sample_prob``; otherwise forward it untouched.

    Sampling is per train: peeling single pulses off would destroy the
    downstream interference. The diverted train passes a delay-1 stage with
    check_phase in the long arm and is detected on D3 (constructive port)
    and D4; the caller compares those clicks against
    :func:`check_expected_outcome`.
    """
    if check_phase not in CHECK_PHASES:
        raise ProtocolError(f"check phase must be 0 or pi/2, got {check_phase}")
    if rng.random() >= sample_prob:
        return False, [], train
    d4, d3 = mzi_pass(train, 1, check_phase)
    clicks = detect([(Detector.D3, d3), (Detector.D4, d4)], detector_params, rng)
    return True, clicks, PulseTrain.vacuum(train.slot_duration)


def check_expected_outcome(
    bob_phase: QuantizedPhase,
    check_phase: QuantizedPhase,
    slot_parity: PairLead,
) -> CheckOutcome:
    """Predicted check detector for an interfering neighbour pair.

    A pair led by an even slot interferes phases (bob_phase, 0), one led by
    an odd slot interferes (0, bob_phase); against the check phase this gives
    a deterministic port whenever bob_phase + check_phase (even lead) or
    bob_phase - check_phase (odd lead) is 0 or pi, and a 50/50 split
    otherwise.
    """
    if check_phase not in CHECK_PHASES:
        raise ProtocolError(f"check phase must be 0 or pi/2, got {check_phase}")
    if slot_parity is PairLead.EVEN_LEAD:
        combined = bob_phase + check_phase
    else:
        combined = bob_phase - check_phase
    if combined.quarter_turns == 0:
        return CheckOutcome.D3
    if combined.quarter_turns == 2:
        return CheckOutcome.D4
    return CheckOutcome.UNMATCHED


def lead_parity(click_slot: int) -> PairLead:
    """Parity of the leading pulse feeding the given return-train slot."""
    return PairLead.EVEN_LEAD if click_slot % 2 == 1 else PairLead.ODD_LEAD


def alice_decoy_replace(
    train: PulseTrain,
    key_phase: QuantizedPhase,
    decoy_prob: float,
    decoy_phase: QuantizedPhase,
    rng: np.random.Generator,
) -> tuple[PulseTrain, tuple[int, ...]]:
    """Encode odd slots with the key phase, except that each odd slot is
    independently replaced by the decoy phase with probability decoy_prob.

    Returns the encoded train and the replaced positions, which the caller
    must keep for sifting: a key click fed by a decoy slot is unusable.
    With decoy_prob == 0 this is exactly :func:`alice_encode` (and consumes
    no randomness).
    """
    if key_phase not in KEY_PHASES:
        raise ProtocolError(f"key phase must be 0 or pi, got {key_phase}")
    if decoy_phase not in CHECK_PHASES:
        raise ProtocolError(f"decoy phase must be 0 or pi/2, got {decoy_phase}")
    if decoy_prob == 0.0:
        return alice_encode(train, key_phase), ()
    key_f = key_phase.factor
    decoy_f = decoy_phase.factor
    out = dict(train.slots)
    positions = []
    for k in sorted(train.slots):
        if k % 2 == 0:
            continue
        p = out[k]
        if rng.random() < decoy_prob:
            positions.append(k)
            if decoy_f != 1 + 0j:
                out[k] = OpticalPulse(p.amplitude * decoy_f, p.polarization)
        elif key_f != 1 + 0j:
            out[k] = OpticalPulse(p.amplitude * key_f, p.polarization)
    return PulseTrain(out, train.slot_duration), tuple(positions)
