import numpy as np
import pytest

from roomfill.audio import AudioBuffer, ImpulseResponse, rms_energy
from roomfill.errors import ContractError, DegenerateMeasurementError
from roomfill.rirs import RirSet, average_pair, balance_levels, channel_band_profile


def _ir(data, rate=48000, label=""):
    return ImpulseResponse(AudioBuffer(np.asarray(data, dtype=float), rate), label=label)


def test_average_pair_idempotent(rng):
    x = _ir(rng.standard_normal(500))
    avg = average_pair(x, x)
    assert np.array_equal(avg.data, x.data)


def test_average_pair_cancellation(rng):
    x = rng.standard_normal(300)
    avg = average_pair(_ir(x), _ir(-x))
    assert np.all(avg.data == 0.0)


def test_average_pair_zero_pads_shorter_capture():
    avg = average_pair(_ir([2.0, 2.0, 2.0, 2.0]), _ir([4.0, 4.0]))
    assert np.array_equal(avg.data, [3.0, 3.0, 1.0, 1.0])


def test_average_pair_rejects_rate_mismatch():
    with pytest.raises(ContractError):
        average_pair(_ir([1.0], 48000), _ir([1.0], 44100))


def test_average_pair_keeps_first_label():
    avg = average_pair(_ir([1.0], label="mic a"), _ir([1.0], label="mic b"))
    assert avg.label == "mic a"


def _quad(rng, scale=(1.0, 2.0, 0.5, 3.0)):
    irs = [_ir(rng.standard_normal(400) * s) for s in scale]
    return RirSet(*irs)


def test_balance_equalises_energy_to_reference(rng):
    balanced = balance_levels(_quad(rng))
    assert balanced.balance_gains["primary_left"] == 1.0
    energies = [
        rms_energy(balanced.balanced(name).buffer)
        for name in ("primary_left", "primary_right", "support_left", "support_right")
    ]
    ref = energies[0]
    for e in energies[1:]:
        assert abs(10.0 * np.log10(e / ref)) <= 0.01


def test_balance_rejects_silent_channel(rng):
    rirs = _quad(rng)
    rirs.support_right.buffer.samples[:] = 0.0
    with pytest.raises(DegenerateMeasurementError):
        balance_levels(rirs)


def test_balanced_requires_balancing_first(rng):
    with pytest.raises(ContractError):
        _quad(rng).balanced("primary_left")


def test_rirset_rejects_mixed_rates(rng):
    a = _ir(rng.standard_normal(100))
    b = _ir(rng.standard_normal(100), rate=44100)
    with pytest.raises(ContractError):
        RirSet(a, a, a, b)


def test_channel_band_profile_checks_name(rng, spec48):
    balanced = balance_levels(_quad(rng))
    prof = channel_band_profile(balanced, "support_left", spec48)
    assert prof.shape == (37,)
    assert np.all(prof > 0)
    with pytest.raises(ContractError):
        channel_band_profile(balanced, "centre", spec48)
