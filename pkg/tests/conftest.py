import numpy as np
import pytest

from roomfill.gammatone import make_spec
from roomfill.pipeline import solve_design
from roomfill.rirs import RirSet
from roomfill.simulate import SyntheticRirParams, synth_rir
from roomfill.solver import SolverConfig
from roomfill.target import TargetFunction

NOTCH_1K = ("notch", 1000.0, 15.0, 3.0)


@pytest.fixture(scope="session")
def spec48():
    return make_spec(48000, 80.0, 16000.0)


def _fixture(seed, coloration=("none",), t60_ms=300.0, length_ms=1000.0):
    return synth_rir(
        SyntheticRirParams(
            sample_rate=48000,
            length_ms=length_ms,
            t60_ms=t60_ms,
            direct_delay_ms=3.0,
            coloration=coloration,
            seed=seed,
        )
    )


@pytest.fixture(scope="session")
def fixture_rirs():
    """The pinned room stand-in: notched primaries, flat supports."""
    return RirSet(
        primary_left=_fixture(201, NOTCH_1K),
        primary_right=_fixture(202, NOTCH_1K),
        support_left=_fixture(203),
        support_right=_fixture(204),
    )


@pytest.fixture(scope="session")
def solved_design(fixture_rirs, spec48):
    return solve_design(fixture_rirs, spec48, TargetFunction(), SolverConfig())


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(4242)
