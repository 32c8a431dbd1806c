"""End-to-end design solve: from a measured impulse response set to a
complete, renderable equalisation design.

This is the piece the command line calls; it wires balancing, the
per-channel gain solves and the front-feed solve together so every
consumer measures through the same chain the renderer will play through.
"""
from __future__ import annotations

from .errors import ContractError
from .gammatone import FilterbankSpec
from .render import (
    DEFAULT_DECORRELATOR_LEN,
    DEFAULT_DELAY_MS,
    DEFAULT_SEED_LEFT,
    DEFAULT_SEED_RIGHT,
    EqualisationDesign,
    design_decorrelator,
)
from .rirs import RirSet, balance_levels
from .solver import BandGainSet, SolverConfig, solve_front_gains, solve_gains
from .target import TargetFunction


def solve_design(
    rirs: RirSet,
    spec: FilterbankSpec,
    target: TargetFunction,
    cfg: SolverConfig,
    *,
    delay_ms: float = DEFAULT_DELAY_MS,
    decorrelator_len: int = DEFAULT_DECORRELATOR_LEN,
    seed_left: int = DEFAULT_SEED_LEFT,
    seed_right: int = DEFAULT_SEED_RIGHT,
) -> EqualisationDesign:
    """Solve both channels against the target and assemble the design.

    Levels are balanced first and every solve runs on the balanced
    responses. The fill solve for each side measures through that side's
    decorrelator and the rendering delay, so the solved gains describe
    the playback chain, not an idealised one. The front-feed gains are
    solved as well so the design supports front_eq rendering without
    another measurement pass.

    Convergence is not required here; inspect the returned channel
    solves. Unfillable bands raise from the solve itself.
    """
    if spec.sample_rate != rirs.sample_rate:
        raise ContractError(
            "filterbank sample rate %d does not match the responses (%d)"
            % (spec.sample_rate, rirs.sample_rate)
        )
    balanced = balance_levels(rirs)
    extra_delay = int(round(delay_ms / 1000.0 * rirs.sample_rate))

    fill = {}
    front = {}
    for side, seed in (("left", seed_left), ("right", seed_right)):
        primary = balanced.balanced("primary_" + side)
        support = balanced.balanced("support_" + side)
        fill[side] = solve_gains(
            primary,
            support,
            target,
            spec,
            cfg,
            decorrelator=design_decorrelator(decorrelator_len, seed),
            extra_delay=extra_delay,
        )
        front[side] = solve_front_gains(primary, target, spec, cfg)

    return EqualisationDesign(
        spec=spec,
        gains=BandGainSet(spec, fill["left"], fill["right"]),
        front_gains=BandGainSet(spec, front["left"], front["right"]),
        target=target,
        balance_gains=dict(balanced.balance_gains),
        delay_ms=delay_ms,
        decorrelator_len=decorrelator_len,
        seed_left=seed_left,
        seed_right=seed_right,
    )
