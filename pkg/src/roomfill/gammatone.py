"""Complex one-pole gammatone filterbank: analysis, resynthesis, band energies.

Each band is a cascade of `order` identical complex one-pole sections with
pole a = lambda * exp(i*2*pi*f_c/f_s). The cascade is peak-normalised to
unity gain at f_c. Resynthesis delays, phase-rotates and weights the band
signals so their summed real parts reconstruct a broadband impulse with a
flat magnitude response.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .audio import AudioBuffer, ImpulseResponse
from .errors import ContractError

# Glasberg & Moore equivalent rectangular bandwidth constants.
_ERB_SCALE = 24.7
_ERB_RATE = 4.37  # per kHz

#: Common latency the resynthesis aligns band envelopes to, seconds.
ALIGN_LATENCY_S = 0.004

#: Window length (samples) used to design the resynthesis and to measure
#: the impulse reference energies. Long enough that even the lowest band
#: has fully decayed.
DESIGN_LEN = 16384


def erb_of(freq_hz: float) -> float:
    """Equivalent rectangular bandwidth in Hz at a given centre frequency."""
    if freq_hz <= 0:
        raise ContractError("frequency must be positive")
    return _ERB_SCALE * (_ERB_RATE * freq_hz / 1000.0 + 1.0)


def erb_number(freq_hz: float) -> float:
    """Position of freq_hz on the ERB-number scale.

    This is the exact antiderivative of df / erb_of(f), so uniform steps
    on this scale are uniform in units of local bandwidth.
    """
    if freq_hz <= 0:
        raise ContractError("frequency must be positive")
    c = 1000.0 / (_ERB_SCALE * _ERB_RATE)
    return c * math.log1p(_ERB_RATE * freq_hz / 1000.0)


def erb_number_inverse(n: float) -> float:
    c = 1000.0 / (_ERB_SCALE * _ERB_RATE)
    return math.expm1(n / c) * 1000.0 / _ERB_RATE


def bandwidth_factor(order: int) -> float:
    """Decay-rate multiplier that makes a cascade's rectangular bandwidth
    equal the nominal bandwidth.

    For an order-n gammatone the equivalent rectangular bandwidth is
    pi*(2n-2)! * 2**-(2n-2) / ((n-1)!)**2 times the decay parameter, so
    the multiplier is the reciprocal of that; 3.2/pi for order 4.
    """
    if order < 1:
        raise ContractError("order must be >= 1")
    a = (
        math.pi
        * math.factorial(2 * order - 2)
        * 2.0 ** -(2 * order - 2)
        / math.factorial(order - 1) ** 2
    )
    return 1.0 / a


@dataclass(frozen=True)
class FilterbankSpec:
    """Frozen description of one analysis/resynthesis bank."""

    sample_rate: int
    f_low: float
    f_high: float
    bands_per_erb: float
    order: int
    center_freqs: tuple
    bandwidths: tuple

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ContractError("sample_rate must be positive")
        if not self.center_freqs:
            raise ContractError("spec needs at least one band")
        if len(self.center_freqs) != len(self.bandwidths):
            raise ContractError("center_freqs and bandwidths must pair up")
        cf = self.center_freqs
        if any(cf[i] >= cf[i + 1] for i in range(len(cf) - 1)):
            raise ContractError("center_freqs must be strictly increasing")
        if cf[0] < self.f_low - 1e-9 or cf[-1] > self.f_high + 1e-9:
            raise ContractError("center_freqs must lie within [f_low, f_high]")
        if self.f_high >= self.sample_rate / 2:
            raise ContractError("f_high must be below the Nyquist frequency")

    @property
    def num_bands(self) -> int:
        return len(self.center_freqs)


def make_spec(
    sample_rate: int,
    f_low: float,
    f_high: float,
    bands_per_erb: float = 1.0,
    order: int = 4,
) -> FilterbankSpec:
    """Place band centres at uniform 1/bands_per_erb steps on the
    ERB-number scale, starting at f_low, up to and including f_high.

    f_low == f_high degenerates to a single band.
    """
    if f_low <= 0 or f_high < f_low:
        raise ContractError("need 0 < f_low <= f_high")
    if f_high >= sample_rate / 2:
        raise ContractError("f_high must be below the Nyquist frequency")
    if bands_per_erb <= 0:
        raise ContractError("bands_per_erb must be positive")
    if order < 1:
        raise ContractError("order must be >= 1")

    lo = erb_number(f_low)
    span = erb_number(f_high) - lo
    step = 1.0 / bands_per_erb
    count = int(math.floor(span / step + 1e-9)) + 1
    centers = [erb_number_inverse(lo + k * step) for k in range(count)]
    centers[0] = float(f_low)  # exact endpoints, no round-trip noise
    if count > 1 and abs(centers[-1] - f_high) < 1e-6 * f_high:
        centers[-1] = float(f_high)
    return FilterbankSpec(
        sample_rate=int(sample_rate),
        f_low=float(f_low),
        f_high=float(f_high),
        bands_per_erb=float(bands_per_erb),
        order=int(order),
        center_freqs=tuple(centers),
        bandwidths=tuple(erb_of(f) for f in centers),
    )


@dataclass
class BandSignals:
    """Complex band signals, shape (num_bands, num_samples)."""

    spec: FilterbankSpec
    data: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 2 or self.data.shape[0] != self.spec.num_bands:
            raise ContractError("data must be (num_bands, n)")

    @property
    def num_samples(self) -> int:
        return self.data.shape[1]

    def scaled(self, gains) -> "BandSignals":
        g = np.asarray(gains, dtype=np.float64)
        if g.shape != (self.spec.num_bands,):
            raise ContractError("need one gain per band")
        return BandSignals(self.spec, self.data * g[:, np.newaxis])


def _pole_coefficients(spec: FilterbankSpec):
    """Per-band complex pole and peak-normalisation factor."""
    beta = bandwidth_factor(spec.order)
    fc = np.asarray(spec.center_freqs)
    bw = np.asarray(spec.bandwidths)
    lam = np.exp(-2.0 * math.pi * beta * bw / spec.sample_rate)
    poles = lam * np.exp(1j * 2.0 * math.pi * fc / spec.sample_rate)
    norm = (1.0 - lam) ** spec.order
    return poles, norm


def analyze(buffer: AudioBuffer, spec: FilterbankSpec) -> BandSignals:
    """Split a mono buffer into complex band signals (same length)."""
    if buffer.sample_rate != spec.sample_rate:
        raise ContractError("buffer/spec sample rate mismatch")
    x = buffer.mono.astype(np.complex128)
    poles, norm = _pole_coefficients(spec)
    out = np.empty((spec.num_bands, x.size), dtype=np.complex128)
    for b in range(spec.num_bands):
        y = x
        den = np.array([1.0, -poles[b]])
        for _ in range(spec.order):
            y = lfilter([1.0], den, y)
        out[b] = y * norm[b]
    return BandSignals(spec, out)


def _shift(row: np.ndarray, n: int) -> np.ndarray:
    """Right-shift by n >= 0 samples, zero fill, keep length."""
    if n == 0:
        return row
    out = np.zeros_like(row)
    out[n:] = row[: row.size - n]
    return out


@lru_cache(maxsize=16)
def _synthesis_design(spec: FilterbankSpec):
    """Per-band delay, phase and gain for resynthesis, plus the design's
    group delay in samples. Computed once per spec.

    Delays pull each band's envelope maximum toward a common 4 ms
    latency; bands whose intrinsic peak falls later stay undelayed.
    Relative phases are chained so adjacent bands add coherently at the
    ERB-scale crossover frequencies, which is what makes the summed
    magnitude flat (a linear-phase target is unreachable for the
    undelayable low bands, but only the magnitude matters). Gains come
    from an iteratively reweighted least-squares fit of |summed response|
    to unity. The delayed bands are then nudged together until the
    reconstruction peak lands on the 4 ms sample itself.
    """
    fs = spec.sample_rate
    n_bands = spec.num_bands
    target_latency = int(round(ALIGN_LATENCY_S * fs))
    imp = np.zeros(DESIGN_LEN)
    imp[0] = 1.0
    bands = analyze(AudioBuffer(imp, fs), spec).data
    peaks = np.argmax(np.abs(bands), axis=1)
    delays = np.maximum(0, target_latency - peaks).astype(int)

    freqs = np.fft.rfftfreq(DESIGN_LEN, 1.0 / fs)
    half = freqs.size
    bin_hz = fs / DESIGN_LEN

    # crossover frequencies: midpoints between centers on the ERB scale
    centers = np.asarray(spec.center_freqs)
    cross_bins = np.empty(0, dtype=int)
    if n_bands > 1:
        mids = [
            erb_number_inverse(0.5 * (erb_number(centers[i]) + erb_number(centers[i + 1])))
            for i in range(n_bands - 1)
        ]
        cross_bins = np.clip(np.round(np.array(mids) / bin_hz).astype(int), 0, half - 1)

    # magnitude-fit grid, slightly wider than the guaranteed-flat region
    fit_lo = 1.125 * spec.f_low
    fit_hi = 0.9 * spec.f_high
    if fit_hi <= fit_lo:
        fit_lo = 0.8 * centers[0]
        fit_hi = min(1.25 * centers[-1], 0.49 * fs)
    sel = (freqs >= fit_lo) & (freqs <= fit_hi)
    if not np.any(sel):
        first = int(np.argmin(np.abs(freqs - centers[0])))
        sel = np.zeros(half, dtype=bool)
        sel[first] = True
    base_w = 1.0 / np.sqrt(_ERB_SCALE * (_ERB_RATE * np.maximum(freqs[sel], 1.0) / 1000.0 + 1.0))

    def build(cur_delays):
        shifted = np.empty_like(bands)
        for b in range(n_bands):
            shifted[b] = _shift(bands[b], int(cur_delays[b]))
        spectra = np.fft.fft(shifted, axis=1)[:, :half]

        phases = np.zeros(n_bands)
        phases[0] = -np.angle(shifted[0, target_latency])
        for i in range(n_bands - 1):
            step = np.angle(spectra[i, cross_bins[i]]) - np.angle(
                spectra[i + 1, cross_bins[i]]
            )
            phases[i + 1] = phases[i] + step

        rot = np.exp(1j * phases)
        # real-part synthesis response ~ half the analytic sum
        a_mat = 0.5 * (spectra[:, sel] * rot[:, None]).T
        gains = np.ones(n_bands)
        w = base_w
        for k in range(16):
            resp = a_mat @ gains
            mag_err = np.abs(np.abs(resp) - 1.0)
            if k > 3:
                w = base_w * (1.0 + 4.0 * mag_err / max(mag_err.max(), 1e-12))
            phase_target = resp / np.maximum(np.abs(resp), 1e-12)
            a_w = a_mat * w[:, None]
            rhs = phase_target * w
            a_stack = np.concatenate([a_w.real, a_w.imag])
            b_stack = np.concatenate([rhs.real, rhs.imag])
            gains, *_ = np.linalg.lstsq(a_stack, b_stack, rcond=None)
        recon = np.einsum("b,bn->n", gains, (shifted * rot[:, None]).real)
        return phases, gains, int(np.argmax(np.abs(recon)))

    phases, gains, latency = build(delays)
    for _ in range(5):
        miss = latency - target_latency
        movable = delays > 0
        if miss == 0 or not np.any(movable):
            break
        delays = np.where(movable, np.maximum(0, delays - miss), delays)
        phases, gains, latency = build(delays)

    delays.setflags(write=False)
    phases.setflags(write=False)
    gains.setflags(write=False)
    return delays, phases, gains, latency


def synthesis_latency(spec: FilterbankSpec) -> int:
    """Group delay of the resynthesis chain in samples: where the
    reconstruction of a unit impulse peaks (the 4 ms alignment sample for
    workable specs)."""
    return _synthesis_design(spec)[3]


def synthesis_gains(spec: FilterbankSpec) -> np.ndarray:
    return _synthesis_design(spec)[2].copy()


def synthesize(bands: BandSignals) -> AudioBuffer:
    """Collapse band signals back to one channel.

    Applies the per-spec alignment delays, phase rotations and gain
    weights, then sums real parts. Output length equals input length.
    """
    delays, phases, gains, _ = _synthesis_design(bands.spec)
    rot = np.exp(1j * phases)
    out = np.zeros(bands.num_samples)
    for b in range(bands.spec.num_bands):
        out += gains[b] * _shift((bands.data[b] * rot[b]).real, int(delays[b]))
    return AudioBuffer(out, bands.spec.sample_rate)


def band_energies(ir: ImpulseResponse, spec: FilterbankSpec) -> np.ndarray:
    """Per-band energy (sum of squared magnitude) of an impulse response."""
    return _band_energies_array(ir.data, spec)


def _band_energies_array(x: np.ndarray, spec: FilterbankSpec) -> np.ndarray:
    bands = analyze(AudioBuffer(x, spec.sample_rate), spec)
    re = bands.data.real
    im = bands.data.imag
    return np.einsum("bn,bn->b", re, re) + np.einsum("bn,bn->b", im, im)


@lru_cache(maxsize=16)
def _impulse_reference(spec: FilterbankSpec):
    imp = np.zeros(DESIGN_LEN)
    imp[0] = 1.0
    ref = _band_energies_array(imp, spec)
    ref.setflags(write=False)
    return ref


def impulse_band_energies(spec: FilterbankSpec) -> np.ndarray:
    """Band energies of a unit impulse: the reference vector that anchors
    absolute target levels."""
    return _impulse_reference(spec).copy()


#: Length of the FIR built by band_gain_eq; ~85 ms at 48 kHz, long enough
#: for the lowest band's ringing to decay well below the energy tolerances.
EQ_IR_LEN = 4096


@lru_cache(maxsize=16)
def _impulse_bands(spec: FilterbankSpec, length: int) -> BandSignals:
    imp = np.zeros(length)
    imp[0] = 1.0
    bands = analyze(AudioBuffer(imp, spec.sample_rate), spec)
    bands.data.setflags(write=False)
    return bands


def band_gain_eq(gains, spec: FilterbankSpec, length: int = EQ_IR_LEN) -> ImpulseResponse:
    """FIR equaliser that weights each band of the bank by a linear gain.

    Built by resynthesising a gain-scaled analysed impulse, so unity gains
    reproduce the bank's flat reconstruction (a delayed near-delta at the
    alignment latency) and the EQ is linear in the gain vector.
    """
    g = np.asarray(gains, dtype=np.float64)
    if g.shape != (spec.num_bands,):
        raise ContractError(
            "need %d gains, got shape %s" % (spec.num_bands, g.shape)
        )
    if np.any(g < 0):
        raise ContractError("band gains must be >= 0")
    bands = _impulse_bands(spec, length)
    out = synthesize(bands.scaled(g))
    return ImpulseResponse(out, label="band-gain eq")
