"""Fiber channel and eavesdropper strategies.

The fiber applies loss plus one collective polarization unitary per round
(slow birefringence drift: every pulse of a train sees the same transform).
The backward leg applies the transpose of the forward unitary, the standard
reciprocity rule; together with the mirror image at the far end this makes
the round trip independent of the fiber settings up to a global phase.

The bundled eavesdropper replaces Bob's outgoing train with a train of
identical per-slot energies but a single common phase, keeps the original,
reads Alice's modulation off the reflected substitute, and resends the
stored original re-encoded with what she learned.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .optics import OpticalPulse, PulseTrain
from .phases import PHASE_0, PHASE_180, QuantizedPhase
from .stations import ProtocolError, alice_encode


class BirefringenceMode(Enum):
    NONE = "none"
    FIXED_UNITARY = "fixed_unitary"
    RANDOM_PER_TRAIN = "random_per_train"


class Direction(Enum):
    FORWARD = "forward"
    BACKWARD = "backward"


def random_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed 2x2 unitary (QR of a complex Gaussian, phase-fixed)."""
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


@dataclass(frozen=True)
class ChannelParams:
    """One-way fiber model: loss in dB plus a collective unitary source."""

    loss_db: float = 0.0
    birefringence_mode: BirefringenceMode = BirefringenceMode.NONE
    seed: int = 0

    def __post_init__(self):
        if self.loss_db < 0:
            raise ValueError(f"loss_db must be >= 0, got {self.loss_db}")

    @property
    def transmittance(self) -> float:
        return 10.0 ** (-self.loss_db / 10.0)

    @cached_property
    def fixed_unitary(self) -> np.ndarray:
        return random_unitary(np.random.default_rng(self.seed))


def round_unitary(params: ChannelParams, rng: np.random.Generator) -> np.ndarray | None:
    """Draw or look up the collective unitary for one round; None = identity."""
    if params.birefringence_mode is BirefringenceMode.NONE:
        return None
    if params.birefringence_mode is BirefringenceMode.FIXED_UNITARY:
        return params.fixed_unitary
    return random_unitary(rng)


def fiber_transmit(
    train: PulseTrain,
    params: ChannelParams,
    direction: Direction,
    rng: np.random.Generator,
    unitary: np.ndarray | None = None,
) -> PulseTrain:
    """Propagate a train through the fiber in the given direction.

    Amplitudes scale by sqrt(transmittance); polarizations transform by the
    round's unitary (forward) or its transpose (backward, reciprocity).
    Pass ``unitary`` explicitly when the two legs of one round must share
    it; otherwise it is resolved from the params (and, in random-per-train
    mode, drawn fresh from ``rng``).
    """
    if unitary is None:
        unitary = round_unitary(params, rng)
    scale = math.sqrt(params.transmittance)
    if unitary is None and scale == 1.0:
        return train
    if unitary is None:
        out = {
            k: OpticalPulse(p.amplitude * scale, p.polarization)
            for k, p in train.slots.items()
        }
        return PulseTrain(out, train.slot_duration)
    u = unitary if direction is Direction.FORWARD else unitary.T
    u00, u01 = complex(u[0, 0]), complex(u[0, 1])
    u10, u11 = complex(u[1, 0]), complex(u[1, 1])
    out = {}
    for k, p in train.slots.items():
        p1, p2 = p.polarization
        out[k] = OpticalPulse(
            p.amplitude * scale,
            (u00 * p1 + u01 * p2, u10 * p1 + u11 * p2),
        )
    return PulseTrain(out, train.slot_duration)


class EveKind(Enum):
    PASSIVE = "passive"
    INTERCEPT_RESEND_REFERENCE = "intercept_resend_reference"


class EveStrategy:
    """Base strategy: identity on both legs, remembers nothing."""

    kind = EveKind.PASSIVE
    last_inferred_phase: QuantizedPhase | None = None

    def forward(self, train: PulseTrain, rng: np.random.Generator) -> PulseTrain:
        return train

    def backward(self, train: PulseTrain, rng: np.random.Generator) -> PulseTrain:
        return train


class PassiveEve(EveStrategy):
    pass


class InterceptResendEve(EveStrategy):
    """Reference-pulse intercept-resend attack.

    On the forward leg the outgoing train is stored and a substitute with
    identical per-slot energies but one common phase is sent on. The kept
    copy of the substitute is the phase reference: the reflected substitute
    differs from it only by Alice's modulation, so her key phase is read off
    the odd slots exactly. The stored original is then re-encoded with the
    inferred phase, matched in energy to the reflected train, and resent, so
    the legitimate readout sees nothing unusual.

    State is per round: ``forward`` must run before ``backward``. Do not
    share one instance across concurrently executing rounds.
    """

    kind = EveKind.INTERCEPT_RESEND_REFERENCE

    def __init__(self, substitute_phase: QuantizedPhase = PHASE_0):
        self.substitute_phase = substitute_phase
        self.last_inferred_phase: QuantizedPhase | None = None
        self._stored: PulseTrain | None = None
        self._reference: dict[int, complex] | None = None

    def forward(self, train: PulseTrain, rng: np.random.Generator) -> PulseTrain:
        f = self.substitute_phase.factor
        substitute = {}
        for k, p in train.slots.items():
            # abs() keeps the slot energy bit-for-bit equal, so the
            # substitute passes Alice's energy monitor at zero tolerance
            substitute[k] = OpticalPulse(abs(p.amplitude) * f, p.polarization)
        self._stored = train
        self._reference = {k: p.amplitude for k, p in substitute.items()}
        self.last_inferred_phase = None
        return PulseTrain(substitute, train.slot_duration)

    def backward(self, train: PulseTrain, rng: np.random.Generator) -> PulseTrain:
        if self._stored is None or self._reference is None:
            raise ProtocolError("intercept-resend backward pass without a stored forward train")
        stored, reference = self._stored, self._reference
        self._stored = None
        self._reference = None
        if train.total_energy == 0.0:
            return train
        votes = [0, 0, 0, 0]
        for k, sent in reference.items():
            if k % 2 == 0 or sent == 0j:
                continue
            p = train.slots.get(k)
            if p is None:
                continue
            # reflected slot = sent * (positive real) * exp(-i * modulation)
            qt = round(-cmath.phase(p.amplitude / sent) / (math.pi / 2)) % 4
            votes[qt] += 1
        inferred = PHASE_0 if votes[0] >= votes[2] else PHASE_180
        self.last_inferred_phase = inferred
        resent = alice_encode(stored, inferred)
        # match the energy Bob would see from an honest reflection
        scale = math.sqrt(train.total_energy / resent.total_energy)
        out = {
            k: OpticalPulse(p.amplitude * scale, p.polarization)
            for k, p in resent.slots.items()
        }
        return PulseTrain(out, train.slot_duration)


def make_eve(kind: EveKind) -> EveStrategy:
    if kind is EveKind.INTERCEPT_RESEND_REFERENCE:
        return InterceptResendEve()
    return PassiveEve()


def eve_forward_hook(
    strategy: EveStrategy | None, train: PulseTrain, rng: np.random.Generator
) -> PulseTrain:
    """Bob -> Alice leg; an absent strategy is the identity."""
    return train if strategy is None else strategy.forward(train, rng)


def eve_backward_hook(
    strategy: EveStrategy | None, train: PulseTrain, rng: np.random.Generator
) -> PulseTrain:
    """Alice -> Bob leg; an absent strategy is the identity."""
    return train if strategy is None else strategy.backward(train, rng)
