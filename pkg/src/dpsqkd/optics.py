"""Field-level optical primitives.

Pulses are classical complex field amplitudes occupying discrete time slots,
with a Jones vector carrying the polarization state. Couplers, delay-line
interferometers, phase modulators, attenuators and the Faraday mirror are
pure functions on immutable pulse trains; photon detection is the only
stochastic operation and takes an explicit RNG.

Conventions fixed here (and relied on by the goldens in the test suite):

* 50/50 couplers use the symmetric matrix [[1, i], [i, 1]] / sqrt(2).
* An interferometer pass keeps honest amplitudes: each pass halves the
  per-path field, and the two output ports together conserve energy.
* Port 2 of ``mzi_pass`` carries the constructive (+) combination when the
  long-arm phase is zero; port 1 carries the (-) combination.
* The Faraday mirror maps (p1, p2) -> (p2, -p1), the quarter-wave rotation
  that makes a reciprocal round trip (U forward, mirror, U transposed
  backward) independent of U up to a global phase.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Hashable, Iterable, Mapping, NamedTuple

import numpy as np

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

#: Jones vector as a plain (complex, complex) pair; horizontal by default.
Jones = tuple[complex, complex]
H_POL: Jones = (1 + 0j, 0j)
V_POL: Jones = (0j, 1 + 0j)


class OpticalPulse(NamedTuple):
    """One time slot's field: complex amplitude plus unit Jones vector.

    The squared amplitude magnitude is the slot's mean photon number; the
    polarization vector is kept at unit norm so it carries no intensity.
    """

    amplitude: complex
    polarization: Jones = H_POL

    @property
    def energy(self) -> float:
        return abs(self.amplitude) ** 2


def unit_jones(p1: complex, p2: complex) -> Jones:
    """Normalize a Jones vector; rejects the zero vector."""
    norm = math.sqrt(abs(p1) ** 2 + abs(p2) ** 2)
    if norm == 0.0:
        raise ValueError("polarization vector must be nonzero")
    return (p1 / norm, p2 / norm)


@dataclass(frozen=True)
class PulseTrain:
    """Sparse train: map from non-negative slot index to pulse.

    An absent index means vacuum. ``slot_duration`` is carried as metadata
    only; all delays are expressed in integer slot counts.
    """

    slots: dict[int, OpticalPulse]
    slot_duration: float = 1.0

    @classmethod
    def from_amplitudes(
        cls,
        amplitudes: Mapping[int, complex],
        polarization: Jones = H_POL,
        slot_duration: float = 1.0,
    ) -> "PulseTrain":
        pulses = {}
        for k, a in amplitudes.items():
            if not isinstance(k, int) or k < 0:
                raise ValueError(f"slot index must be a non-negative integer, got {k!r}")
            pulses[k] = OpticalPulse(complex(a), polarization)
        return cls(pulses, slot_duration)

    @classmethod
    def single(
        cls,
        slot: int,
        amplitude: complex,
        polarization: Jones = H_POL,
        slot_duration: float = 1.0,
    ) -> "PulseTrain":
        return cls.from_amplitudes({slot: amplitude}, polarization, slot_duration)

    @classmethod
    def vacuum(cls, slot_duration: float = 1.0) -> "PulseTrain":
        return cls({}, slot_duration)

    @cached_property
    def total_energy(self) -> float:
        return sum(abs(p.amplitude) ** 2 for p in self.slots.values())

    def amplitude(self, slot: int) -> complex:
        p = self.slots.get(slot)
        return p.amplitude if p is not None else 0j

    def occupied_slots(self) -> tuple[int, ...]:
        return tuple(sorted(self.slots))

    def __len__(self) -> int:
        return len(self.slots)

    def __contains__(self, slot: int) -> bool:
        return slot in self.slots


class DoubleClickPolicy(Enum):
    DISCARD_ROUND = "discard_round"
    RANDOM_PICK = "random_pick"


@dataclass(frozen=True)
class DetectorParams:
    """Threshold-detector model: Poisson click probability plus dark counts."""

    quantum_efficiency: float = 1.0
    dark_count_prob: float = 0.0
    double_click_policy: DoubleClickPolicy = DoubleClickPolicy.DISCARD_ROUND

    def __post_init__(self):
        if not 0.0 <= self.quantum_efficiency <= 1.0:
            raise ValueError(f"quantum_efficiency must be in [0, 1], got {self.quantum_efficiency}")
        if not 0.0 <= self.dark_count_prob <= 1.0:
            raise ValueError(f"dark_count_prob must be in [0, 1], got {self.dark_count_prob}")


IDEAL_DETECTOR = DetectorParams()


class ClickEvent(NamedTuple):
    detector: Hashable
    slot: int


def coupler_mix(a: complex, b: complex) -> tuple[complex, complex]:
    """Symmetric 50/50 coupler: ((a + i b), (i a + b)) / sqrt(2)."""
    return ((a + 1j * b) * _INV_SQRT2, (1j * a + b) * _INV_SQRT2)


def mzi_pass(
    train: PulseTrain,
    delay_slots: int,
    long_arm_phase,
) -> tuple[PulseTrain, PulseTrain]:
    """One pass through an unbalanced interferometer.

    The input is split by a coupler, the long arm delays by ``delay_slots``
    and applies exp(-i * long_arm_phase), and a second coupler recombines.
    Output slot k holds the coupler mix of input(k) from the short arm with
    the delayed input(k - delay_slots) from the long arm. Returns
    (port1, port2) in coupler order; port2 is the constructive port at zero
    phase. Energy over both ports equals the input energy.
    """
    if delay_slots < 1:
        raise ValueError(f"delay_slots must be >= 1, got {delay_slots}")
    f = long_arm_phase.factor
    slots = train.slots
    get = slots.get
    keys = set(slots)
    keys.update(k + delay_slots for k in slots)
    out1: dict[int, OpticalPulse] = {}
    out2: dict[int, OpticalPulse] = {}
    for k in keys:
        short = get(k)
        long = get(k - delay_slots)
        if short is not None:
            s = short.amplitude * _INV_SQRT2
            pol = short.polarization
            if long is not None:
                # Interfering pulses must share a polarization state; the
                # collective-noise assumption (one channel unitary per
                # train) guarantees this for every train the protocol makes.
                pl = long.polarization
                if pol != pl and (
                    abs(pol[0] - pl[0]) > 1e-9 or abs(pol[1] - pl[1]) > 1e-9
                ):
                    raise ValueError(
                        "interfering pulses carry different polarization states"
                    )
                l = f * (1j * long.amplitude * _INV_SQRT2)
            else:
                l = 0j
        else:
            s = 0j
            pol = long.polarization  # type: ignore[union-attr]
            l = f * (1j * long.amplitude * _INV_SQRT2)  # type: ignore[union-attr]
        o1 = (s + 1j * l) * _INV_SQRT2
        o2 = (1j * s + l) * _INV_SQRT2
        if o1 != 0j:
            out1[k] = OpticalPulse(o1, pol)
        if o2 != 0j:
            out2[k] = OpticalPulse(o2, pol)
    return (
        PulseTrain(out1, train.slot_duration),
        PulseTrain(out2, train.slot_duration),
    )


def phase_modulate(
    train: PulseTrain,
    selector: Callable[[int], bool],
    phase,
) -> PulseTrain:
    """Multiply selected slots by exp(-i * phase); energy is unchanged."""
    f = phase.factor
    if f == 1 + 0j:
        return train
    out = {
        k: OpticalPulse(p.amplitude * f, p.polarization) if selector(k) else p
        for k, p in train.slots.items()
    }
    return PulseTrain(out, train.slot_duration)


def attenuate(train: PulseTrain, target_mean_photons: float) -> PulseTrain:
    """Uniformly rescale so the train's total energy equals the target."""
    if target_mean_photons < 0:
        raise ValueError(f"target_mean_photons must be >= 0, got {target_mean_photons}")
    if target_mean_photons == 0.0:
        return PulseTrain({}, train.slot_duration)
    energy = train.total_energy
    if energy == 0.0:
        raise ValueError("cannot rescale a vacuum train to positive energy")
    scale = math.sqrt(target_mean_photons / energy)
    out = {k: OpticalPulse(p.amplitude * scale, p.polarization) for k, p in train.slots.items()}
    return PulseTrain(out, train.slot_duration)


def _check_unitary(transform: np.ndarray) -> np.ndarray:
    u = np.asarray(transform, dtype=complex)
    if u.shape != (2, 2):
        raise ValueError(f"polarization transform must be 2x2, got shape {u.shape}")
    if np.max(np.abs(u @ u.conj().T - np.eye(2))) > 1e-10:
        raise ValueError("polarization transform is not unitary")
    return u


def jones_apply(train: PulseTrain, transform: np.ndarray) -> PulseTrain:
    """Apply a unitary Jones matrix to every pulse's polarization."""
    u = _check_unitary(transform)
    u00, u01 = complex(u[0, 0]), complex(u[0, 1])
    u10, u11 = complex(u[1, 0]), complex(u[1, 1])
    out = {}
    for k, p in train.slots.items():
        p1, p2 = p.polarization
        out[k] = OpticalPulse(p.amplitude, (u00 * p1 + u01 * p2, u10 * p1 + u11 * p2))
    return PulseTrain(out, train.slot_duration)


def faraday_reflect(train: PulseTrain) -> PulseTrain:
    """Faraday-mirror reflection: polarization (p1, p2) -> (p2, -p1).

    The image of a 90-degree rotation R satisfies M^T R M = det(M) R for
    every matrix M, so a round trip through a reciprocal fiber (U forward,
    U transposed backward) lands on the same polarization for every U, up
    to the global phase det(U). Amplitudes are untouched.
    """
    out = {}
    for k, p in train.slots.items():
        p1, p2 = p.polarization
        out[k] = OpticalPulse(p.amplitude, (p2, -p1))
    return PulseTrain(out, train.slot_duration)


def detect(
    branches: Iterable[tuple[Hashable, PulseTrain]],
    params: DetectorParams,
    rng: np.random.Generator,
) -> list[ClickEvent]:
    """Sample threshold-detector clicks for each (detector, train) branch.

    Per occupied slot the click probability is 1 - exp(-eta * |amplitude|^2);
    dark counts are independent Bernoulli draws over the gated window (every
    occupied slot and its immediate neighbours). A slot with exactly zero
    amplitude and zero dark probability never clicks.
    """
    eta = params.quantum_efficiency
    dark = params.dark_count_prob
    expm1 = math.expm1
    clicks: list[ClickEvent] = []
    for detector, train in branches:
        slots = train.slots
        if dark > 0.0:
            window = set(slots)
            for k in slots:
                window.add(k + 1)
                if k >= 1:
                    window.add(k - 1)
            candidates = sorted(window)
        else:
            candidates = sorted(slots)
        if not candidates:
            continue
        draws = rng.random(len(candidates))
        for k, u in zip(candidates, draws):
            pulse = slots.get(k)
            p_signal = -expm1(-eta * abs(pulse.amplitude) ** 2) if pulse is not None else 0.0
            p = p_signal + dark - p_signal * dark
            if u < p:
                clicks.append(ClickEvent(detector, k))
    return clicks
