"""Measured impulse response handling: the four-speaker set, microphone
pair averaging, level balancing and band profiles."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer, ImpulseResponse, rms_energy
from .errors import ContractError, DegenerateMeasurementError
from .gammatone import FilterbankSpec, band_energies

CHANNEL_NAMES = ("primary_left", "primary_right", "support_left", "support_right")

#: Balancing reference channel; its gain is exactly 1.0 by definition.
REFERENCE_CHANNEL = "primary_left"


@dataclass
class RirSet:
    """One impulse response per loudspeaker, plus balance gains once
    balance_levels has run."""

    primary_left: ImpulseResponse
    primary_right: ImpulseResponse
    support_left: ImpulseResponse
    support_right: ImpulseResponse
    balance_gains: dict = field(default_factory=dict)

    def __post_init__(self):
        rates = {ir.sample_rate for ir in self.responses.values()}
        if len(rates) != 1:
            raise ContractError("all impulse responses must share one sample rate")

    @property
    def responses(self) -> dict:
        return {
            "primary_left": self.primary_left,
            "primary_right": self.primary_right,
            "support_left": self.support_left,
            "support_right": self.support_right,
        }

    @property
    def sample_rate(self) -> int:
        return self.primary_left.sample_rate

    def balanced(self, name: str) -> ImpulseResponse:
        """The named response scaled by its balance gain."""
        if not self.balance_gains:
            raise ContractError("run balance_levels first")
        ir = self.responses[name]
        g = self.balance_gains[name]
        return ImpulseResponse(
            AudioBuffer(ir.data * g, ir.sample_rate), label=ir.label
        )


def average_pair(a: ImpulseResponse, b: ImpulseResponse) -> ImpulseResponse:
    """Sample-wise mean of two microphone captures of the same speaker.

    The shorter capture is zero padded to the longer one first.
    """
    if a.sample_rate != b.sample_rate:
        raise ContractError("sample rate mismatch between microphone captures")
    n = max(a.data.size, b.data.size)
    out = np.zeros(n)
    out[: a.data.size] += a.data
    out[: b.data.size] += b.data
    out *= 0.5
    label = a.label or b.label
    return ImpulseResponse(AudioBuffer(out, a.sample_rate), label=label)


def balance_levels(rirs: RirSet) -> RirSet:
    """Solve per-speaker gains that equalise total energy to the
    primary-left reference, emulating the level calibration a real
    installation does with amplifier trims.

    gain_k = sqrt(E_ref / E_k); the reference gain is exactly 1.0.
    A response with no energy cannot be balanced and raises
    DegenerateMeasurementError.
    """
    energies = {}
    for name, ir in rirs.responses.items():
        e = rms_energy(ir.buffer)
        if e <= 0.0:
            raise DegenerateMeasurementError(
                "impulse response %r is silent, cannot balance" % name
            )
        energies[name] = e
    ref = energies[REFERENCE_CHANNEL]
    gains = {name: float(np.sqrt(ref / e)) for name, e in energies.items()}
    gains[REFERENCE_CHANNEL] = 1.0
    return RirSet(
        primary_left=rirs.primary_left,
        primary_right=rirs.primary_right,
        support_left=rirs.support_left,
        support_right=rirs.support_right,
        balance_gains=gains,
    )


def channel_band_profile(rirs: RirSet, name: str, spec: FilterbankSpec) -> np.ndarray:
    """Per-band energy profile of one balanced impulse response."""
    if name not in CHANNEL_NAMES:
        raise ContractError("unknown channel %r" % name)
    return band_energies(rirs.balanced(name), spec)
