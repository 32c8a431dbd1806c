import numpy as np
import pytest

from roomfill.audio import (
    AudioBuffer,
    ImpulseResponse,
    convolve,
    delay,
    read_wav,
    rms_energy,
    write_wav,
)
from roomfill.errors import ClippingWarning, ContractError, FormatError


def test_buffer_promotes_mono_vector():
    buf = AudioBuffer(np.arange(5, dtype=float), 48000)
    assert buf.samples.shape == (1, 5)
    assert buf.num_channels == 1
    assert buf.num_samples == 5


def test_buffer_rejects_bad_shapes_and_rates():
    with pytest.raises(ContractError):
        AudioBuffer(np.zeros((2, 3, 4)), 48000)
    with pytest.raises(ContractError):
        AudioBuffer(np.zeros(4), 0)


def test_mono_property_requires_single_channel():
    stereo = AudioBuffer(np.zeros((2, 8)), 48000)
    with pytest.raises(ContractError):
        stereo.mono


def test_impulse_response_requires_single_channel():
    with pytest.raises(ContractError):
        ImpulseResponse(AudioBuffer(np.zeros((2, 8)), 48000))


def test_float32_wav_round_trip_is_bit_exact(tmp_path, rng):
    data = rng.standard_normal((2, 1000)).astype(np.float32).astype(np.float64)
    path = tmp_path / "f32.wav"
    write_wav(path, AudioBuffer(data, 48000))
    back = read_wav(path)
    assert back.sample_rate == 48000
    assert np.array_equal(back.samples, data)


def test_int16_wav_scaling(tmp_path):
    # full-scale int16 is 32767/32768, not 1.0
    data = np.array([[1.0 - 1.0 / 32768.0, -1.0, 0.5]])
    path = tmp_path / "i16.wav"
    write_wav(path, AudioBuffer(data, 44100), bit_depth=16)
    back = read_wav(path)
    assert back.samples[0, 0] == pytest.approx(32767.0 / 32768.0, abs=0)
    assert back.samples[0, 1] == -1.0
    assert abs(back.samples[0, 2] - 0.5) <= 0.5 / 32768.0


def test_int24_wav_round_trip_precision(tmp_path, rng):
    data = rng.uniform(-0.99, 0.99, size=(2, 500))
    path = tmp_path / "i24.wav"
    write_wav(path, AudioBuffer(data, 48000), bit_depth=24)
    back = read_wav(path)
    assert np.max(np.abs(back.samples - data)) <= 1.0 / 2**23


def test_clipping_warns(tmp_path):
    with pytest.warns(ClippingWarning):
        write_wav(tmp_path / "c.wav", AudioBuffer(np.array([[1.5]]), 48000), bit_depth=16)


def test_unsupported_rate_rejected(tmp_path):
    with pytest.raises(FormatError):
        write_wav(tmp_path / "r.wav", AudioBuffer(np.zeros((1, 4)), 22050))


def test_non_wav_file_rejected(tmp_path):
    path = tmp_path / "not.wav"
    path.write_bytes(b"definitely not audio data, moving along")
    with pytest.raises(FormatError):
        read_wav(path)


def test_truncated_wav_raises_oserror(tmp_path, rng):
    path = tmp_path / "t.wav"
    write_wav(path, AudioBuffer(rng.standard_normal((1, 100)), 48000))
    whole = path.read_bytes()
    path.write_bytes(whole[: len(whole) - 50])
    with pytest.raises(OSError):
        read_wav(path)


def test_channel_order_survives_round_trip(tmp_path):
    data = np.vstack([np.full(16, 0.25), np.full(16, -0.25)])
    path = tmp_path / "st.wav"
    write_wav(path, AudioBuffer(data, 48000))
    back = read_wav(path)
    assert np.all(back.samples[0] == 0.25)
    assert np.all(back.samples[1] == -0.25)


def test_rms_energy_invariant_under_delay(rng):
    buf = AudioBuffer(rng.standard_normal((2, 333)), 48000)
    assert rms_energy(delay(buf, 7.3)) == rms_energy(buf)


def test_delay_sample_count_rounds():
    buf = AudioBuffer(np.ones((1, 10)), 48000)
    out = delay(buf, 10.0)
    assert out.num_samples == 10 + 480
    assert np.all(out.samples[0, :480] == 0.0)
    assert np.all(out.samples[0, 480:] == 1.0)
    with pytest.raises(ContractError):
        delay(buf, -1.0)


def test_convolve_matches_reference_both_paths(rng):
    """The direct and FFT convolution paths must agree with numpy's
    reference to 1e-9 relative, straddling the kernel-size switch."""
    sig = rng.standard_normal(2000)
    buf = AudioBuffer(sig, 48000)
    for taps in (64, 1023, 1025, 4096):
        kernel = rng.standard_normal(taps)
        ir = ImpulseResponse(AudioBuffer(kernel, 48000))
        got = convolve(buf, ir).samples[0]
        want = np.convolve(sig, kernel)
        scale = np.max(np.abs(want))
        assert got.shape == want.shape
        assert np.max(np.abs(got - want)) <= 1e-9 * scale


def test_convolve_rejects_rate_mismatch():
    buf = AudioBuffer(np.zeros((1, 10)), 48000)
    ir = ImpulseResponse(AudioBuffer(np.zeros(4), 44100))
    with pytest.raises(ContractError):
        convolve(buf, ir)
