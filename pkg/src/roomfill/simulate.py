"""Synthetic room fixtures and end-to-end playback simulation.

The desk-scale substitute for a listening room: generate impulse
responses with known decay and coloration, push an impulse through the
full supporting chain, convolve with the fixtures and tabulate achieved
band energies against the target.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.signal import lfilter

from .audio import AudioBuffer, ImpulseResponse
from .errors import ContractError
from .gammatone import band_energies
from .rirs import RirSet
from .render import EqualisationDesign, render
from .target import band_targets

__all__ = [
    "SyntheticRirParams",
    "VerificationReport",
    "synth_rir",
    "simulate_total",
    "export_report",
    "read_report",
    "FIXTURE_SUITE",
    "TAIL_LEVEL",
    "REPORT_HEADER",
]

#: Noise-tail RMS just after the direct sound, relative to the direct
#: amplitude. Pinned so fixture band profiles are reproducible.
TAIL_LEVEL = 0.1

# 60 dB of amplitude decay: ln(10**3), the -6.9078 exponent reached at t60
_DECAY = 6.907755278982137

REPORT_HEADER = "f_c_hz,primary_db,fill_db,total_db,target_db,deviation_db"

_COLORATION_KINDS = ("none", "notch", "lowpass")


@dataclass(frozen=True)
class SyntheticRirParams:
    """Recipe for a synthetic impulse response.

    coloration is a tuple: ("none",), ("notch", f0_hz, depth_db, q) or
    ("lowpass", fc_hz).
    """

    sample_rate: int
    length_ms: float
    t60_ms: float
    direct_amplitude: float = 1.0
    direct_delay_ms: float = 0.0
    coloration: tuple = ("none",)
    seed: int = 0

    def __post_init__(self):
        if self.sample_rate <= 0:
            raise ContractError("sample_rate must be positive")
        if self.t60_ms <= 0:
            raise ContractError("t60_ms must be positive")
        if self.length_ms <= 0:
            raise ContractError("length_ms must be positive")
        if self.direct_amplitude <= 0:
            raise ContractError("direct_amplitude must be positive")
        if self.direct_delay_ms < 0:
            raise ContractError("direct_delay_ms must be non-negative")
        kind = self.coloration[0] if self.coloration else None
        if kind not in _COLORATION_KINDS:
            raise ContractError("coloration kind must be one of %s" % (_COLORATION_KINDS,))
        if kind == "notch" and len(self.coloration) != 4:
            raise ContractError("notch coloration needs (f0, depth_db, q)")
        if kind == "lowpass" and len(self.coloration) != 2:
            raise ContractError("lowpass coloration needs a cutoff frequency")
        if kind == "none" and len(self.coloration) != 1:
            raise ContractError("coloration 'none' takes no parameters")
        if self.length_ms < 3.0 * self.t60_ms:
            warnings.warn(
                "fixture length %.0f ms is under 3x t60 (%.0f ms); the decay "
                "tail will be truncated" % (self.length_ms, self.t60_ms)
            )

    def coloration_summary(self) -> str:
        kind = self.coloration[0]
        if kind == "notch":
            return "notch %.6g Hz, depth %.6g dB, q %.6g" % self.coloration[1:]
        if kind == "lowpass":
            return "lowpass %.6g Hz" % self.coloration[1]
        return "none"


def _peaking_cut(f0: float, depth_db: float, q: float, rate: int):
    # biquad peaking EQ with negative gain; exact -depth_db at f0
    a_lin = 10.0 ** (-depth_db / 40.0)
    w = 2.0 * math.pi * f0 / rate
    alpha = math.sin(w) / (2.0 * q)
    b = np.array([1.0 + alpha * a_lin, -2.0 * math.cos(w), 1.0 - alpha * a_lin])
    a = np.array([1.0 + alpha / a_lin, -2.0 * math.cos(w), 1.0 - alpha / a_lin])
    return b / a[0], a / a[0]


def _lowpass(fc: float, rate: int):
    # 2nd-order Butterworth (biquad with q = 1/sqrt(2))
    w = 2.0 * math.pi * fc / rate
    alpha = math.sin(w) / math.sqrt(2.0)
    cw = math.cos(w)
    b = np.array([(1.0 - cw) / 2.0, 1.0 - cw, (1.0 - cw) / 2.0])
    a = np.array([1.0 + alpha, -2.0 * cw, 1.0 - alpha])
    return b / a[0], a / a[0]


def synth_rir(params: SyntheticRirParams) -> ImpulseResponse:
    """Generate a synthetic impulse response: a direct impulse followed by
    a seeded Gaussian tail with exponential 60 dB decay at t60, the whole
    thing shaped by the coloration filter. Deterministic per seed.
    """
    rate = params.sample_rate
    n = int(round(params.length_ms * rate / 1000.0))
    d = int(round(params.direct_delay_ms * rate / 1000.0))
    if d >= n:
        raise ContractError("direct delay falls beyond the fixture length")

    ir = np.zeros(n)
    ir[d] = params.direct_amplitude

    tail = n - d - 1
    if tail > 0:
        rng = np.random.default_rng(params.seed)
        t = np.arange(1, tail + 1) / rate
        env = np.exp(-_DECAY * t / (params.t60_ms / 1000.0))
        ir[d + 1 :] = (
            rng.standard_normal(tail) * (TAIL_LEVEL * params.direct_amplitude) * env
        )

    kind = params.coloration[0]
    if kind == "notch":
        b, a = _peaking_cut(*params.coloration[1:], rate=rate)
        ir = lfilter(b, a, ir)
    elif kind == "lowpass":
        b, a = _lowpass(params.coloration[1], rate=rate)
        ir = lfilter(b, a, ir)

    return ImpulseResponse(AudioBuffer(ir, rate), label="synthetic")


#: Pinned fixture suite: flat, notched and lowpassed rooms at two decay
#: times each, seeds fixed for reproducible runs.
FIXTURE_SUITE = (
    ("flat_t200", SyntheticRirParams(48000, 800.0, 200.0, seed=101)),
    ("flat_t500", SyntheticRirParams(48000, 1600.0, 500.0, seed=102)),
    (
        "notch1k_t200",
        SyntheticRirParams(48000, 800.0, 200.0, coloration=("notch", 1000.0, 15.0, 3.0), seed=103),
    ),
    (
        "notch1k_t500",
        SyntheticRirParams(48000, 1600.0, 500.0, coloration=("notch", 1000.0, 15.0, 3.0), seed=104),
    ),
    (
        "lowpass8k_t200",
        SyntheticRirParams(48000, 800.0, 200.0, coloration=("lowpass", 8000.0), seed=105),
    ),
    (
        "lowpass8k_t500",
        SyntheticRirParams(48000, 1600.0, 500.0, coloration=("lowpass", 8000.0), seed=106),
    ),
)


@dataclass
class VerificationReport:
    """Per-band achieved-vs-target table plus the three summary figures."""

    center_freqs: np.ndarray
    primary_db: np.ndarray
    fill_db: np.ndarray
    total_db: np.ndarray
    target_db: np.ndarray
    deviation_db: np.ndarray
    max_abs_deviation_filled_bands_db: float
    rms_deviation_db: float
    unfilled_band_count: int
    filled: Optional[np.ndarray] = None

    @classmethod
    def build(cls, center_freqs, primary_db, fill_db, total_db, target_db, filled):
        deviation = np.asarray(total_db) - np.asarray(target_db)
        filled = np.asarray(filled, dtype=bool)
        if filled.any():
            max_dev = float(np.max(np.abs(deviation[filled])))
        else:
            max_dev = 0.0
        rms = float(np.sqrt(np.mean(deviation**2))) if deviation.size else 0.0
        return cls(
            center_freqs=np.asarray(center_freqs, dtype=np.float64),
            primary_db=np.asarray(primary_db, dtype=np.float64),
            fill_db=np.asarray(fill_db, dtype=np.float64),
            total_db=np.asarray(total_db, dtype=np.float64),
            target_db=np.asarray(target_db, dtype=np.float64),
            deviation_db=deviation,
            max_abs_deviation_filled_bands_db=max_dev,
            rms_deviation_db=rms,
            unfilled_band_count=int(np.count_nonzero(~filled)),
            filled=filled,
        )

    @property
    def num_bands(self) -> int:
        return self.center_freqs.size


def _db(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(x)


def simulate_total(
    design: EqualisationDesign, rirs: RirSet, channel: str
) -> VerificationReport:
    """Push an impulse through one channel's proposed-mode chain, convolve
    the front path with the (balanced) primary response and the supporting
    path with the support response, sum coherently and tabulate band
    energies against the channel's anchored target.

    The front feed is untouched by design, so the primary balance trim is
    applied on the acoustic side; the supporting feed already carries its
    trim digitally.
    """
    if channel not in ("left", "right"):
        raise ContractError("channel must be 'left' or 'right'")
    if rirs.sample_rate != design.sample_rate:
        raise ContractError(
            "fixture rate %d does not match design rate %d"
            % (rirs.sample_rate, design.sample_rate)
        )

    rate = design.sample_rate
    imp = np.zeros((2, 1))
    imp[0 if channel == "left" else 1, 0] = 1.0
    rendered = render(AudioBuffer(imp, rate), design, "proposed")

    if channel == "left":
        front, rear = rendered.buffer.samples[0], rendered.buffer.samples[2]
        primary = rirs.primary_left.data * design.balance_gains["primary_left"]
        support = rirs.support_left.data
        solve = design.gains.left
    else:
        front, rear = rendered.buffer.samples[1], rendered.buffer.samples[3]
        primary = rirs.primary_right.data * design.balance_gains["primary_right"]
        support = rirs.support_right.data
        solve = design.gains.right

    primary_path = np.convolve(front, primary)
    fill_path = np.convolve(rear, support) if np.any(rear) else np.zeros(1)

    n = max(primary_path.size, fill_path.size)
    total = np.zeros(n)
    total[: primary_path.size] += primary_path
    total[: fill_path.size] += fill_path

    spec = design.spec
    e_primary = band_energies(ImpulseResponse(AudioBuffer(primary_path, rate)), spec)
    e_fill = band_energies(ImpulseResponse(AudioBuffer(fill_path, rate)), spec)
    e_total = band_energies(ImpulseResponse(AudioBuffer(total, rate)), spec)
    targets = band_targets(design.target.with_offset(solve.offset_db), spec)

    return VerificationReport.build(
        center_freqs=np.array(spec.center_freqs),
        primary_db=_db(e_primary),
        fill_db=_db(e_fill),
        total_db=_db(e_total),
        target_db=_db(targets),
        filled=solve.gains > 0,
    )


def export_report(report: VerificationReport, path) -> None:
    """Write the report as CSV: pinned header, one row per band, three
    trailing comment lines with the summary figures."""
    lines = [REPORT_HEADER]
    for i in range(report.num_bands):
        lines.append(
            ",".join(
                "%.6g" % v
                for v in (
                    report.center_freqs[i],
                    report.primary_db[i],
                    report.fill_db[i],
                    report.total_db[i],
                    report.target_db[i],
                    report.deviation_db[i],
                )
            )
        )
    lines.append(
        "# max_abs_deviation_filled_bands_db = %.6g"
        % report.max_abs_deviation_filled_bands_db
    )
    lines.append("# rms_deviation_db = %.6g" % report.rms_deviation_db)
    lines.append("# unfilled_band_count = %d" % report.unfilled_band_count)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_report(path) -> VerificationReport:
    """Parse a CSV written by export_report. The filled-band mask is not
    part of the format, so the summary figures are taken from the comment
    lines rather than recomputed."""
    rows = []
    summary = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != REPORT_HEADER:
            raise ContractError("unrecognised report header: %r" % header)
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line.lstrip("# ").partition("=")
                summary[key.strip()] = value.strip()
                continue
            rows.append([float(v) for v in line.split(",")])
    data = np.array(rows, dtype=np.float64).reshape(len(rows), 6)
    try:
        max_dev = float(summary["max_abs_deviation_filled_bands_db"])
        rms = float(summary["rms_deviation_db"])
        unfilled = int(summary["unfilled_band_count"])
    except KeyError as exc:
        raise ContractError("report is missing summary line %s" % exc)
    return VerificationReport(
        center_freqs=data[:, 0],
        primary_db=data[:, 1],
        fill_db=data[:, 2],
        total_db=data[:, 3],
        target_db=data[:, 4],
        deviation_db=data[:, 5],
        max_abs_deviation_filled_bands_db=max_dev,
        rms_deviation_db=rms,
        unfilled_band_count=unfilled,
        filled=None,
    )
