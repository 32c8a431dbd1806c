"""Per-band gain solve: how loudly each gammatone band of the supporting
loudspeaker must play so primary-plus-fill band energy meets the target.

Left and right channels are solved independently, each as a pure function
of that channel's impulse response pair.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .audio import ImpulseResponse
from .errors import ContractError, UnfillableBandError
from .gammatone import FilterbankSpec, _band_energies_array, band_energies, band_gain_eq
from .target import TargetFunction, band_targets

#: Amplitude cap per band (20 dB); protects the supporting channel from
#: unfillable notches blowing up.
G_MAX = 10.0

#: Support-profile energies below this are treated as no energy at all.
SUPPORT_ENERGY_FLOOR = 1e-12

ANCHOR_MODES = ("mean-fit", "percentile-95")


@dataclass(frozen=True)
class SolverConfig:
    tolerance_db: float = 0.5
    max_iterations: int = 50
    damping: float = 0.7
    anchor_mode: str = "percentile-95"

    def __post_init__(self):
        if self.tolerance_db <= 0:
            raise ContractError("tolerance_db must be > 0")
        if not 0 < self.damping <= 1:
            raise ContractError("damping must be in (0, 1]")
        if self.max_iterations < 1:
            raise ContractError("max_iterations must be >= 1")
        if self.anchor_mode not in ANCHOR_MODES:
            raise ContractError(
                "anchor_mode must be one of %s" % (ANCHOR_MODES,)
            )


@dataclass
class ChannelSolve:
    """Solved gains for one channel, with convergence bookkeeping.

    residual_db is achieved-total-minus-target per band; trace records the
    max active-band matching error (dB) at each iteration.
    """

    gains: np.ndarray
    offset_db: float
    residual_db: np.ndarray
    iterations_used: int
    converged: bool
    capped_bands: tuple = ()
    trace: tuple = ()


@dataclass
class BandGainSet:
    """The left/right pair of channel solves over one filterbank spec."""

    spec: FilterbankSpec
    left: ChannelSolve
    right: ChannelSolve

    @property
    def gains_left(self) -> np.ndarray:
        return self.left.gains

    @property
    def gains_right(self) -> np.ndarray:
        return self.right.gains


def _profile_db(profile: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(profile)


def anchor_target(primary_profile: np.ndarray, shape: np.ndarray, mode: str) -> float:
    """Solve the target's absolute level against a measured profile.

    mean-fit: offset = mean(primary_dB - shape_dB). percentile-95: the
    95th percentile of the same differences, so the target hugs the
    primary's upper envelope and the fill stays a correction.
    """
    primary_profile = np.asarray(primary_profile, dtype=np.float64)
    shape = np.asarray(shape, dtype=np.float64)
    if primary_profile.shape != shape.shape:
        raise ContractError("profile and shape must have equal length")
    if np.any(primary_profile <= 0) or np.any(shape <= 0):
        raise ContractError("profiles must be strictly positive")
    diffs = _profile_db(primary_profile) - _profile_db(shape)
    if mode == "mean-fit":
        return float(np.mean(diffs))
    if mode == "percentile-95":
        return float(np.percentile(diffs, 95.0))
    raise ContractError("anchor_mode must be one of %s" % (ANCHOR_MODES,))


def initial_gains(
    primary_profile: np.ndarray,
    support_profile: np.ndarray,
    targets: np.ndarray,
    spec: FilterbankSpec = None,
) -> np.ndarray:
    """Closed-form solve ignoring band overlap:
    g_b = sqrt(max(0, T_b - E^P_b) / E^S_b)."""
    primary_profile = np.asarray(primary_profile, dtype=np.float64)
    support_profile = np.asarray(support_profile, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    deficits = np.clip(targets - primary_profile, 0.0, None)
    bad = (deficits > 0) & (support_profile < SUPPORT_ENERGY_FLOOR)
    if np.any(bad):
        idx = np.flatnonzero(bad)
        freqs = (
            [spec.center_freqs[i] for i in idx]
            if spec is not None
            else [float("nan")] * idx.size
        )
        raise UnfillableBandError(idx, freqs)
    out = np.zeros_like(deficits)
    fill = deficits > 0
    out[fill] = np.sqrt(deficits[fill] / support_profile[fill])
    return out


def _measure_chain(gains, spec, chain_data):
    """Band energies of the fill EQ pushed through a response."""
    eq = band_gain_eq(gains, spec)
    return _band_energies_array(fftconvolve(eq.data, chain_data), spec)


def _measure_total(gains, spec, base, chain_data):
    """Band energies of the coherent total: primary response plus the fill
    EQ pushed through the supporting chain."""
    eq = band_gain_eq(gains, spec)
    fill = fftconvolve(eq.data, chain_data)
    n = max(base.size, fill.size)
    mix = np.zeros(n)
    mix[: base.size] += base
    mix[: fill.size] += fill
    return _band_energies_array(mix, spec)


def solve_gains(
    primary_ir: ImpulseResponse,
    support_ir: ImpulseResponse,
    target: TargetFunction,
    spec: FilterbankSpec,
    cfg: SolverConfig,
    *,
    offset_db: float = None,
    decorrelator=None,
    extra_delay: int = 0,
) -> ChannelSolve:
    """Iteratively refine band gains until the total response meets the
    per-band target.

    Each pass builds the fill EQ from the current gains, simulates the
    coherent total (primary response plus EQ convolved with the support
    response, through `decorrelator` and `extra_delay` when given so the
    measurement chain matches playback), and applies the damped
    multiplicative update g_b <- g_b * (deficit_b / achieved_b)^(damping/2)
    where achieved_b is the fill the chain actually contributed,
    total_b - primary_b. Matching the total rather than the fill alone
    keeps the primary/fill cross-term, which band-energy bookkeeping
    would miss, inside the loop.

    Stops when every active band's total is within tolerance_db of its
    target. Bands whose deficit is already covered by leakage from
    neighbouring bands have their gain driven to zero and leave the
    active set. On hitting max_iterations the best-so-far gains are
    returned flagged non-converged. Never raises for non-convergence;
    unfillable bands propagate from initial_gains.
    """
    if primary_ir.sample_rate != support_ir.sample_rate:
        raise ContractError("primary/support sample rate mismatch")
    primary_profile = band_energies(primary_ir, spec)
    support_profile = band_energies(support_ir, spec)
    shape = band_targets(target.with_offset(0.0), spec)
    if offset_db is None:
        offset_db = anchor_target(primary_profile, shape, cfg.anchor_mode)
    targets = shape * 10.0 ** (offset_db / 10.0)
    deficits = np.clip(targets - primary_profile, 0.0, None)

    if not np.any(deficits > 0):
        residual = _profile_db(primary_profile) - _profile_db(targets)
        return ChannelSolve(
            gains=np.zeros(spec.num_bands),
            offset_db=float(offset_db),
            residual_db=residual,
            iterations_used=0,
            converged=True,
        )

    gains = np.clip(
        initial_gains(primary_profile, support_profile, targets, spec), 0.0, G_MAX
    )
    gains0 = gains.copy()
    chain_data = support_ir.data
    if decorrelator is not None:
        chain_data = fftconvolve(decorrelator.taps, chain_data)
    if extra_delay:
        chain_data = np.concatenate([np.zeros(extra_delay), chain_data])
    base = primary_ir.data

    active = deficits > 0
    trace = []
    best_gains = gains.copy()
    best_err = np.inf
    iterations = 0
    converged = False
    total = _measure_total(gains, spec, base, chain_data)

    while True:
        live = active & (gains > 0)
        if not np.any(live):
            converged = True
            break
        err_db = np.abs(
            10.0 * np.log10(np.maximum(total[live], 1e-300) / targets[live])
        )
        max_err = float(np.max(err_db))
        trace.append(max_err)
        if max_err < best_err:
            best_err = max_err
            best_gains = gains.copy()
        if max_err <= cfg.tolerance_db:
            converged = True
            break
        if iterations >= cfg.max_iterations:
            break

        achieved = total - primary_profile
        ratio = np.ones_like(gains)
        ratio[live] = deficits[live] / np.maximum(achieved[live], 1e-300)
        gains = gains * ratio ** (cfg.damping / 2.0)
        gains = np.clip(gains, 0.0, G_MAX)
        gains[~active] = 0.0
        # A band already at/above target on neighbour leakage alone cannot
        # pull its total down once its own fill is marginal (the initial
        # gain would supply the whole deficit, so (g/g0)^2 is the fraction
        # it still contributes); retire it from the active set.
        own_frac = np.zeros_like(gains)
        own_frac[active] = (gains[active] / gains0[active]) ** 2
        gains[active & (total >= targets) & (own_frac <= 0.05)] = 0.0
        iterations += 1
        total = _measure_total(gains, spec, base, chain_data)

    if not converged:
        gains = best_gains
        total = _measure_total(gains, spec, base, chain_data)

    capped = tuple(np.flatnonzero(gains >= G_MAX))
    residual = _profile_db(total) - _profile_db(targets)
    return ChannelSolve(
        gains=gains,
        offset_db=float(offset_db),
        residual_db=residual,
        iterations_used=iterations,
        converged=converged,
        capped_bands=capped,
        trace=tuple(trace),
    )


def solve_front_gains(
    primary_ir: ImpulseResponse,
    target: TargetFunction,
    spec: FilterbankSpec,
    cfg: SolverConfig,
    *,
    offset_db: float = None,
) -> ChannelSolve:
    """Gain solve for the front-equalisation stimulus.

    Here the equalised signal replaces the front feed outright, so the
    quantity to match is the full per-band target, not a deficit on top
    of an untouched primary: achieved_b = band energy of EQ through the
    primary response, driven to T_b. Bands above target get cut (g < 1);
    no band is ever muted.
    """
    primary_profile = band_energies(primary_ir, spec)
    shape = band_targets(target.with_offset(0.0), spec)
    if offset_db is None:
        offset_db = anchor_target(primary_profile, shape, cfg.anchor_mode)
    targets = shape * 10.0 ** (offset_db / 10.0)
    if np.any(primary_profile < SUPPORT_ENERGY_FLOOR):
        idx = np.flatnonzero(primary_profile < SUPPORT_ENERGY_FLOOR)
        raise UnfillableBandError(idx, [spec.center_freqs[i] for i in idx])

    gains = np.sqrt(targets / primary_profile)
    gains = np.clip(gains, 0.0, G_MAX)
    chain_data = primary_ir.data

    trace = []
    best_gains = gains.copy()
    best_err = np.inf
    iterations = 0
    converged = False
    achieved = _measure_chain(gains, spec, chain_data)
    while True:
        err_db = np.abs(
            10.0 * np.log10(np.maximum(achieved, 1e-300) / targets)
        )
        max_err = float(np.max(err_db))
        trace.append(max_err)
        if max_err < best_err:
            best_err = max_err
            best_gains = gains.copy()
        if max_err <= cfg.tolerance_db:
            converged = True
            break
        if iterations >= cfg.max_iterations:
            break
        ratio = targets / np.maximum(achieved, 1e-300)
        gains = np.clip(gains * ratio ** (cfg.damping / 2.0), 0.0, G_MAX)
        iterations += 1
        achieved = _measure_chain(gains, spec, chain_data)

    if not converged:
        gains = best_gains
        achieved = _measure_chain(gains, spec, chain_data)

    capped = tuple(np.flatnonzero(gains >= G_MAX))
    residual = _profile_db(achieved) - _profile_db(targets)
    return ChannelSolve(
        gains=gains,
        offset_db=float(offset_db),
        residual_db=residual,
        iterations_used=iterations,
        converged=converged,
        capped_bands=capped,
        trace=tuple(trace),
    )


def oracle_single_band(
    primary_ir: ImpulseResponse,
    support_ir: ImpulseResponse,
    target_energy: float,
    band: int,
    spec: FilterbankSpec,
    g_max: float = G_MAX,
) -> float:
    """Brute-force reference solve for one band.

    Golden-section search over g in [0, g_max] minimising
    |band energy of (primary + g * EQ_b(support)) - target_energy|,
    where EQ_b is the one-hot band EQ (band_gain_eq passing only `band`).
    Deliberately knows nothing about the iterative solver. Tolerance 1e-4
    on g.
    """
    if not 0 <= band < spec.num_bands:
        raise ContractError("band index out of range")
    one_hot = np.zeros(spec.num_bands)
    one_hot[band] = 1.0
    eq = band_gain_eq(one_hot, spec)
    fill_unit = fftconvolve(eq.data, support_ir.data)

    n = max(primary_ir.data.size, fill_unit.size)
    base = np.zeros(n)
    base[: primary_ir.data.size] = primary_ir.data
    unit = np.zeros(n)
    unit[: fill_unit.size] = fill_unit

    def objective(g: float) -> float:
        e = _band_energies_array(base + g * unit, spec)[band]
        return abs(e - target_energy)

    invphi = (np.sqrt(5.0) - 1.0) / 2.0
    lo, hi = 0.0, float(g_max)
    c = hi - invphi * (hi - lo)
    d = lo + invphi * (hi - lo)
    fc, fd = objective(c), objective(d)
    while hi - lo > 1e-4:
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - invphi * (hi - lo)
            fc = objective(c)
        else:
            lo, c, fc = c, d, fd
            d = lo + invphi * (hi - lo)
            fd = objective(d)
    g = 0.5 * (lo + hi)
    # the boundary g = 0 is a legitimate optimum the bracketing can miss
    if objective(0.0) <= objective(g):
        return 0.0
    return float(g)
