"""Round orchestration, sifting, and session statistics.

One laser pulse per round. A round runs: prepare -> eavesdropper forward
hook -> fiber -> Alice (energy monitor, optional whole-train check,
attenuation, key/decoy encoding, Faraday mirror) -> fiber -> eavesdropper
backward hook -> readout interferometer -> detectors.

Every round owns an RNG stream derived from (master seed, round index), so
serial and parallel execution produce identical records, and two sessions
with the same config are bit-identical.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .channel import (
    ChannelParams,
    Direction,
    EveKind,
    EveStrategy,
    eve_backward_hook,
    eve_forward_hook,
    fiber_transmit,
    make_eve,
    round_unitary,
)
from .optics import (
    ClickEvent,
    DetectorParams,
    DoubleClickPolicy,
    IDEAL_DETECTOR,
    PulseTrain,
    attenuate,
    detect,
    faraday_reflect,
)
from .phases import CHECK_PHASES, KEY_PHASES, QUATERNARY, QuantizedPhase
from .stations import (
    BitOutcome,
    CascadeConfig,
    CheckOutcome,
    Detector,
    alice_decoy_replace,
    alice_energy_monitor,
    alice_sample_and_check,
    bob_measure,
    bob_prepare,
    check_expected_outcome,
    infer_bit,
    lead_parity,
)

_CHECK_TO_DETECTOR = {CheckOutcome.D3: Detector.D3, CheckOutcome.D4: Detector.D4}

# spawn-key namespaces under the master seed
_ROUND_STREAM = 1
_STATS_STREAM = 2


@dataclass(frozen=True)
class SessionConfig:
    n_stages: int = 3
    rounds: int = 100_000
    source_mean_photons: float = 512.0
    mean_photons_return: float = 0.1
    sample_prob: float = 0.1
    decoy_prob: float = 0.0
    energy_tolerance: float = 0.05
    disclose_fraction: float = 0.1
    max_check_error: float = 0.05
    max_qber: float = 0.05
    detector: DetectorParams = IDEAL_DETECTOR
    channel: ChannelParams = ChannelParams()
    eve_kind: EveKind = EveKind.PASSIVE
    master_seed: int = 0

    def __post_init__(self):
        if self.n_stages < 1:
            raise ValueError(f"n_stages must be >= 1, got {self.n_stages}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if self.source_mean_photons <= 0:
            raise ValueError(f"source_mean_photons must be > 0, got {self.source_mean_photons}")
        if self.mean_photons_return < 0:
            raise ValueError(f"mean_photons_return must be >= 0, got {self.mean_photons_return}")
        for name in ("sample_prob", "decoy_prob", "disclose_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


@dataclass(frozen=True, slots=True)
class RoundRecord:
    """Everything one round produced; at most one sifted bit per round."""

    index: int
    alice_phase: QuantizedPhase
    bob_phase: QuantizedPhase
    sampled: bool
    check_phase: QuantizedPhase
    check_matched: bool | None = None
    check_compared: int = 0
    check_errors: int = 0
    check_clicks: tuple[ClickEvent, ...] = ()
    energy_alarm: bool = False
    clicks: tuple[ClickEvent, ...] = ()
    multi_click: bool = False
    bit: BitOutcome | None = None
    decoy_positions: tuple[int, ...] = ()
    decoy_hit: bool = False
    eve_phase: QuantizedPhase | None = None

    @property
    def alice_bit(self) -> int:
        return 0 if self.alice_phase.quarter_turns == 0 else 1


def round_rng(master_seed: int, round_index: int) -> np.random.Generator:
    """Independent per-round stream, stable across execution order."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(_ROUND_STREAM, round_index))
    return np.random.Generator(np.random.PCG64(ss))


def _stats_rng(master_seed: int) -> np.random.Generator:
    ss = np.random.SeedSequence(master_seed, spawn_key=(_STATS_STREAM, 0))
    return np.random.Generator(np.random.PCG64(ss))


def run_round(
    config: SessionConfig,
    round_index: int,
    eve: EveStrategy | None,
    rng: np.random.Generator,
    prepared_cache: dict[int, PulseTrain] | None = None,
) -> RoundRecord:
    """Execute one full protocol round and return its record.

    Draw order is fixed (Alice key phase, Bob phase, check phase, decoy
    phase, then channel/sampling/detection as encountered) so that records
    are reproducible for a given stream. ``prepared_cache`` may be shared
    across rounds of one session: the prepared train depends only on Bob's
    phase, and trains are immutable.
    """
    ua, ub, uc, ud = rng.random(4)
    phase_a = KEY_PHASES[int(ua * 2)]
    phase_b = QUATERNARY[int(ub * 4)]
    check_phase = CHECK_PHASES[int(uc * 2)]
    decoy_phase = CHECK_PHASES[int(ud * 2)]

    cascade = CascadeConfig(config.n_stages, phase_b)
    unitary = round_unitary(config.channel, rng)

    qt = phase_b.quarter_turns
    if prepared_cache is not None and qt in prepared_cache:
        prepared = prepared_cache[qt]
    else:
        prepared = bob_prepare(cascade, complex(math.sqrt(config.source_mean_photons)))
        if prepared_cache is not None:
            prepared_cache[qt] = prepared

    train = eve_forward_hook(eve, prepared, rng)
    train = fiber_transmit(train, config.channel, Direction.FORWARD, rng, unitary=unitary)

    expected = (
        config.source_mean_photons / cascade.train_slots * config.channel.transmittance
    )
    alarm = alice_energy_monitor(train, expected, config.energy_tolerance)

    sampled, check_clicks, train = alice_sample_and_check(
        train, config.sample_prob, check_phase, rng, detector_params=config.detector
    )
    if sampled:
        matched = check_expected_outcome(
            phase_b, check_phase, lead_parity(2)
        ) is not CheckOutcome.UNMATCHED
        first, last = cascade.edge_slots
        compared = 0
        errors = 0
        if matched:
            for click in check_clicks:
                if click.slot == first or click.slot == last:
                    continue
                expected_det = _CHECK_TO_DETECTOR[
                    check_expected_outcome(phase_b, check_phase, lead_parity(click.slot))
                ]
                compared += 1
                if click.detector is not expected_det:
                    errors += 1
        return RoundRecord(
            index=round_index,
            alice_phase=phase_a,
            bob_phase=phase_b,
            sampled=True,
            check_phase=check_phase,
            check_matched=matched,
            check_compared=compared,
            check_errors=errors,
            check_clicks=tuple(check_clicks),
            energy_alarm=alarm,
        )

    train = attenuate(train, config.mean_photons_return)
    train, decoy_positions = alice_decoy_replace(
        train, phase_a, config.decoy_prob, decoy_phase, rng
    )
    train = faraday_reflect(train)
    train = fiber_transmit(train, config.channel, Direction.BACKWARD, rng, unitary=unitary)
    train = eve_backward_hook(eve, train, rng)

    d1, d2 = bob_measure(train, cascade)
    clicks = detect([(Detector.D1, d1), (Detector.D2, d2)], config.detector, rng)

    multi = len(clicks) >= 2
    chosen: ClickEvent | None = None
    if len(clicks) == 1:
        chosen = clicks[0]
    elif multi and config.detector.double_click_policy is DoubleClickPolicy.RANDOM_PICK:
        chosen = clicks[rng.integers(0, len(clicks))]

    bit: BitOutcome | None = None
    decoy_hit = False
    if chosen is not None:
        bit = infer_bit(chosen, cascade)
        if bit is not BitOutcome.DISCARD and decoy_positions:
            key_slot = chosen.slot if chosen.slot % 2 == 1 else chosen.slot - 1
            decoy_hit = key_slot in decoy_positions

    return RoundRecord(
        index=round_index,
        alice_phase=phase_a,
        bob_phase=phase_b,
        sampled=False,
        check_phase=check_phase,
        energy_alarm=alarm,
        clicks=tuple(clicks),
        multi_click=multi,
        bit=bit,
        decoy_positions=decoy_positions,
        decoy_hit=decoy_hit,
        eve_phase=eve.last_inferred_phase if eve is not None else None,
    )


def sift(records) -> tuple[list[int], list[int]]:
    """Raw shared key: rounds with one usable inner-slot click, unsampled
    and untouched by decoys. Alice's bit is her own phase; Bob's is inferred."""
    alice_key: list[int] = []
    bob_key: list[int] = []
    for r in records:
        if r.sampled or r.decoy_hit:
            continue
        if r.bit is BitOutcome.BIT0 or r.bit is BitOutcome.BIT1:
            alice_key.append(r.alice_bit)
            bob_key.append(r.bit.value)
    return alice_key, bob_key


@dataclass(frozen=True)
class QberEstimate:
    """Error rate over a disclosed subset; disclosed bits leave the key."""

    qber: float | None
    disclosed: int
    alice_remaining: tuple[int, ...]
    bob_remaining: tuple[int, ...]


def estimate_qber(
    alice_key,
    bob_key,
    disclose_fraction: float,
    rng: np.random.Generator,
) -> QberEstimate:
    """Compare a random subset of both keys publicly.

    Returns None (no data) rather than 0 for empty keys. The subset size is
    round(fraction * length), at least one bit for nonempty keys.
    """
    if len(alice_key) != len(bob_key):
        raise ValueError("keys must have equal length")
    if not 0.0 < disclose_fraction <= 1.0:
        raise ValueError(f"disclose_fraction must be in (0, 1], got {disclose_fraction}")
    n = len(alice_key)
    if n == 0:
        return QberEstimate(None, 0, (), ())
    size = min(n, max(1, round(disclose_fraction * n)))
    disclosed = set(rng.choice(n, size=size, replace=False).tolist())
    mismatches = sum(1 for i in disclosed if alice_key[i] != bob_key[i])
    alice_rest = tuple(alice_key[i] for i in range(n) if i not in disclosed)
    bob_rest = tuple(bob_key[i] for i in range(n) if i not in disclosed)
    return QberEstimate(mismatches / size, size, alice_rest, bob_rest)


@dataclass(frozen=True)
class SessionStats:
    """Aggregates over one session's records."""

    rounds: int
    n_sampled: int
    n_no_click: int
    n_single_click: int
    n_multi_click: int
    n_edge_single: int
    efficiency: float | None
    edge_fraction: float | None
    sifted_length: int
    alice_key: tuple[int, ...]
    bob_key: tuple[int, ...]
    mismatches: int
    qber: float | None
    qber_disclosed: int
    final_key_length: int
    check_rounds_matched: int
    check_compared: int
    check_errors: int
    check_error_rate: float | None
    energy_alarms: int
    eve_agreement: float | None
    alarm: bool


def session_stats(records, config: SessionConfig) -> SessionStats:
    """Fold a session's records into protocol-level statistics.

    Efficiency and the edge fraction condition on rounds with exactly one
    click, where the slot statistics reflect the interference energies.
    The check-error rate covers matched-basis sampled rounds only.
    """
    n_sampled = n_none = n_single = n_multi = n_edge = 0
    check_matched_rounds = check_compared = check_errors = 0
    energy_alarms = 0
    eve_hits = eve_total = 0
    for r in records:
        if r.energy_alarm:
            energy_alarms += 1
        if r.sampled:
            n_sampled += 1
            if r.check_matched:
                check_matched_rounds += 1
                check_compared += r.check_compared
                check_errors += r.check_errors
            continue
        n_clicks = len(r.clicks)
        if n_clicks == 0:
            n_none += 1
        elif n_clicks == 1:
            n_single += 1
            edge = _is_edge_slot(r.clicks[0], config.n_stages)
            n_edge += edge
        else:
            n_multi += 1

    alice_key, bob_key = sift(records)
    mismatches = sum(1 for a, b in zip(alice_key, bob_key) if a != b)

    for r in records:
        if r.sampled or r.decoy_hit or r.eve_phase is None:
            continue
        if r.bit is BitOutcome.BIT0 or r.bit is BitOutcome.BIT1:
            eve_total += 1
            eve_bit = 0 if r.eve_phase.quarter_turns == 0 else 1
            eve_hits += eve_bit == r.alice_bit

    if alice_key:
        est = estimate_qber(
            alice_key, bob_key, config.disclose_fraction, _stats_rng(config.master_seed)
        )
        qber, disclosed = est.qber, est.disclosed
        final_len = len(est.alice_remaining)
    else:
        qber, disclosed, final_len = None, 0, 0

    efficiency = (n_single - n_edge) / n_single if n_single else None
    edge_fraction = n_edge / n_single if n_single else None
    check_rate = check_errors / check_compared if check_compared else None
    alarm = bool(
        energy_alarms
        or (check_rate is not None and check_rate > config.max_check_error)
        or (qber is not None and qber > config.max_qber)
    )
    return SessionStats(
        rounds=len(records),
        n_sampled=n_sampled,
        n_no_click=n_none,
        n_single_click=n_single,
        n_multi_click=n_multi,
        n_edge_single=n_edge,
        efficiency=efficiency,
        edge_fraction=edge_fraction,
        sifted_length=len(alice_key),
        alice_key=tuple(alice_key),
        bob_key=tuple(bob_key),
        mismatches=mismatches,
        qber=qber,
        qber_disclosed=disclosed,
        final_key_length=final_len,
        check_rounds_matched=check_matched_rounds,
        check_compared=check_compared,
        check_errors=check_errors,
        check_error_rate=check_rate,
        energy_alarms=energy_alarms,
        eve_agreement=(eve_hits / eve_total) if eve_total else None,
        alarm=alarm,
    )


def _is_edge_slot(click: ClickEvent, n_stages: int) -> bool:
    return click.slot == 1 or click.slot == 2 ** n_stages + 1


@dataclass(frozen=True)
class SessionResult:
    config: SessionConfig
    records: tuple[RoundRecord, ...]
    stats: SessionStats


def run_session(config: SessionConfig) -> SessionResult:
    """Run all rounds serially with per-round streams and aggregate."""
    eve = make_eve(config.eve_kind)
    prepared_cache: dict[int, PulseTrain] = {}
    records = tuple(
        run_round(config, i, eve, round_rng(config.master_seed, i), prepared_cache)
        for i in range(config.rounds)
    )
    return SessionResult(config, records, session_stats(records, config))


def theoretical_efficiency(n: int) -> Fraction:
    """Key-creation efficiency of the n-stage cascade: (2^n - 1) / 2^n."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return Fraction(2 ** n - 1, 2 ** n)


def competitor_efficiency(n: int) -> Fraction:
    """Reference efficiency n / (n + 1) of the compared n-stage system."""
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    return Fraction(n, n + 1)
