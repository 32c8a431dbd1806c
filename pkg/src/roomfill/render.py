"""Supporting-channel processing chain and the four playback conditions.

The proposed chain per side is band-gain EQ, all-pass decorrelation and a
bulk delay inside the precedence-effect window, feeding the supporting
loudspeaker while the front channels pass through untouched.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .audio import AudioBuffer, ImpulseResponse, convolve, delay
from .errors import ContractError
from .gammatone import FilterbankSpec, band_gain_eq, synthesis_latency
from .solver import BandGainSet
from .target import TargetFunction

__all__ = [
    "DecorrelatorFilter",
    "EqualisationDesign",
    "RenderResult",
    "band_gain_eq",
    "design_decorrelator",
    "render",
    "DELAY_RANGE_MS",
    "DEFAULT_DELAY_MS",
    "DEFAULT_DECORRELATOR_LEN",
    "DEFAULT_SEED_LEFT",
    "DEFAULT_SEED_RIGHT",
    "RENDER_MODES",
]

#: Precedence-effect window: a supporting source delayed by this much
#: relative to the primary is localised to the primary.
DELAY_RANGE_MS = (2.0, 50.0)
DEFAULT_DELAY_MS = 10.0

DEFAULT_DECORRELATOR_LEN = 1024

# Default decorrelator seeds, pinned after a numeric search so the shipped
# pair meets the cross-correlation and latency-metadata contracts with
# margin (see tests).
DEFAULT_SEED_LEFT = 5240
DEFAULT_SEED_RIGHT = 12002

RENDER_MODES = ("proposed", "stereo", "rear_stereo", "front_eq")


@dataclass
class DecorrelatorFilter:
    """Random-phase all-pass FIR: unit magnitude at every design bin."""

    taps: np.ndarray
    seed: int

    @property
    def group_delay_centroid(self) -> float:
        """Energy centroid of the taps, the filter's mean group delay."""
        h2 = self.taps * self.taps
        return float(np.dot(np.arange(self.taps.size), h2) / np.sum(h2))


def design_decorrelator(length: int, seed: int) -> DecorrelatorFilter:
    """Build an all-pass FIR by inverse-transforming unit-magnitude bins
    with seeded uniform random phase in (-pi, pi].

    DC and Nyquist stay at phase 0 so the taps are real. length must be a
    power of two >= 256.
    """
    if length < 256 or length & (length - 1):
        raise ContractError("decorrelator length must be a power of two >= 256")
    rng = np.random.default_rng(seed)
    # uniform() samples a half-open [lo, hi); negate for (-pi, pi]
    phases = -rng.uniform(-math.pi, math.pi, size=length // 2 - 1)
    spectrum = np.ones(length // 2 + 1, dtype=np.complex128)
    spectrum[1:-1] = np.exp(1j * phases)
    taps = np.fft.irfft(spectrum, n=length)
    return DecorrelatorFilter(taps=taps, seed=int(seed))


@dataclass
class EqualisationDesign:
    """Everything a render needs: the bank, both gain sets, chain
    parameters, balance gains and the target that was solved against."""

    spec: FilterbankSpec
    gains: BandGainSet
    front_gains: BandGainSet
    target: TargetFunction
    balance_gains: dict = field(default_factory=dict)
    delay_ms: float = DEFAULT_DELAY_MS
    decorrelator_len: int = DEFAULT_DECORRELATOR_LEN
    seed_left: int = DEFAULT_SEED_LEFT
    seed_right: int = DEFAULT_SEED_RIGHT
    format_version: int = 1

    def __post_init__(self):
        lo, hi = DELAY_RANGE_MS
        if not lo <= self.delay_ms <= hi:
            raise ContractError(
                "delay_ms %.3f outside the precedence-effect window [%g, %g] ms"
                % (self.delay_ms, lo, hi)
            )
        if self.seed_left == self.seed_right:
            raise ContractError("left/right decorrelator seeds must differ")
        if self.decorrelator_len < 256 or self.decorrelator_len & (self.decorrelator_len - 1):
            raise ContractError("decorrelator length must be a power of two >= 256")
        if not self.balance_gains:
            self.balance_gains = {
                "primary_left": 1.0,
                "primary_right": 1.0,
                "support_left": 1.0,
                "support_right": 1.0,
            }

    @property
    def sample_rate(self) -> int:
        return self.spec.sample_rate

    def decorrelator(self, side: str) -> DecorrelatorFilter:
        seed = self.seed_left if side == "left" else self.seed_right
        return design_decorrelator(self.decorrelator_len, seed)

    def delay_samples(self) -> int:
        return int(round(self.delay_ms * self.sample_rate / 1000.0))


@dataclass
class RenderResult:
    """4-channel output (FL, FR, SL, SR) plus per-channel chain latency."""

    buffer: AudioBuffer
    mode: str
    latency_samples: dict


def _support_chain_kernel(design: EqualisationDesign, side: str):
    gains = design.gains.gains_left if side == "left" else design.gains.gains_right
    eq = band_gain_eq(gains, design.spec)
    taps = design.decorrelator(side).taps
    return np.convolve(eq.data, taps)


def support_chain_latency(design: EqualisationDesign, side: str) -> int:
    """Nominal supporting-chain latency in samples: bulk delay plus EQ
    alignment delay plus the decorrelator's group-delay centroid."""
    centroid = design.decorrelator(side).group_delay_centroid
    return (
        design.delay_samples()
        + synthesis_latency(design.spec)
        + int(round(centroid))
    )


def render(buffer: AudioBuffer, design: EqualisationDesign, mode: str) -> RenderResult:
    """Render stereo input to the 4-channel (FL, FR, SL, SR) condition.

    proposed: fronts pass through bit-exact; each supporting channel is
    the same-side input through EQ, decorrelation, the bulk delay and its
    balance gain. stereo: fronts only. rear_stereo: input duplicated to
    the rears untouched. front_eq: fronts carry the re-solved band EQ
    (times balance), rears silent.
    """
    if buffer.num_channels != 2:
        raise ContractError("render input must be 2-channel stereo")
    if buffer.sample_rate != design.sample_rate:
        raise ContractError(
            "input rate %d does not match design rate %d"
            % (buffer.sample_rate, design.sample_rate)
        )
    if mode not in RENDER_MODES:
        raise ContractError("mode must be one of %s" % (RENDER_MODES,))

    left = buffer.samples[0]
    right = buffer.samples[1]
    rate = buffer.sample_rate
    latency = {"FL": 0, "FR": 0, "SL": 0, "SR": 0}

    if mode == "stereo":
        out = np.zeros((4, buffer.num_samples))
        out[0] = left
        out[1] = right
    elif mode == "rear_stereo":
        out = np.vstack([left, right, left, right])
    elif mode == "proposed":
        rears = []
        for side, sig in (("left", left), ("right", right)):
            kernel = _support_chain_kernel(design, side)
            ir = ImpulseResponse(AudioBuffer(kernel, rate), label="support chain")
            wet = convolve(AudioBuffer(sig, rate), ir)
            wet = delay(wet, design.delay_ms)
            g = design.balance_gains["support_" + side]
            rears.append(wet.mono * g)
        n = max(buffer.num_samples, rears[0].size, rears[1].size)
        out = np.zeros((4, n))
        out[0, : left.size] = left
        out[1, : right.size] = right
        out[2, : rears[0].size] = rears[0]
        out[3, : rears[1].size] = rears[1]
        latency["SL"] = support_chain_latency(design, "left")
        latency["SR"] = support_chain_latency(design, "right")
    else:  # front_eq
        fronts = []
        for side, sig in (("left", left), ("right", right)):
            gains = (
                design.front_gains.gains_left
                if side == "left"
                else design.front_gains.gains_right
            )
            eq = band_gain_eq(gains, design.spec)
            wet = convolve(AudioBuffer(sig, rate), eq)
            g = design.balance_gains["primary_" + side]
            fronts.append(wet.mono * g)
        n = max(fronts[0].size, fronts[1].size)
        out = np.zeros((4, n))
        out[0, : fronts[0].size] = fronts[0]
        out[1, : fronts[1].size] = fronts[1]
        lat = synthesis_latency(design.spec)
        latency["FL"] = lat
        latency["FR"] = lat

    return RenderResult(
        buffer=AudioBuffer(out, rate), mode=mode, latency_samples=latency
    )
