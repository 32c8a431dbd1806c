import math
import os

import numpy as np
import pytest
from scipy.signal import lfilter

from roomfill.audio import AudioBuffer, read_wav, write_wav
from roomfill.cli import main
from roomfill.designfile import load_design
from roomfill.render import support_chain_latency
from roomfill.rirs import average_pair
from roomfill.simulate import SyntheticRirParams, synth_rir
from roomfill.audio import ImpulseResponse

RUN_INI = """[io]
primary_left = pl.wav
primary_right = pr.wav
support_left = sl.wav
support_right = sr.wav
output_dir = out
"""


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Small flat fixture quad plus a config, solving in a second or two."""
    root = tmp_path_factory.mktemp("cli")
    for name, seed in (("pl", 301), ("pr", 309), ("sl", 303), ("sr", 304)):
        ir = synth_rir(
            SyntheticRirParams(48000, 500.0, 150.0, direct_delay_ms=2.0, seed=seed)
        )
        write_wav(root / ("%s.wav" % name), ir.buffer)

    # a support with essentially no energy below 2 kHz: unfillable bass
    w = 2.0 * math.pi * 2000.0 / 48000.0
    alpha = math.sin(w) / math.sqrt(2.0)
    cw = math.cos(w)
    b = np.array([(1 + cw) / 2, -(1 + cw), (1 + cw) / 2])
    a = np.array([1 + alpha, -2 * cw, 1 - alpha])
    b, a = b / a[0], a / a[0]
    dull = synth_rir(
        SyntheticRirParams(48000, 500.0, 150.0, direct_delay_ms=2.0, seed=305)
    ).data
    for _ in range(10):
        dull = lfilter(b, a, dull)
    write_wav(root / "bright.wav", AudioBuffer(dull, 48000))

    (root / "run.ini").write_text(RUN_INI)
    return root


@pytest.fixture(scope="module")
def designed(workspace):
    rc = main(["design", "--config", str(workspace / "run.ini")])
    assert rc == 0
    return workspace / "out" / "design.txt"


def test_synth_rir_writes_wav(tmp_path, capsys):
    out = tmp_path / "room.wav"
    rc = main(
        ["synth-rir", "-o", str(out), "--t60-ms", "120", "--length-ms", "400",
         "--notch", "1500,12,2", "--seed", "7"]
    )
    assert rc == 0
    assert "notch 1500 Hz" in capsys.readouterr().out
    buf = read_wav(out)
    assert buf.sample_rate == 48000
    assert buf.num_samples == 19200


def test_synth_rir_colorations_are_exclusive(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth-rir", "-o", str(tmp_path / "x.wav"),
              "--notch", "1000,15,3", "--lowpass", "8000"])
    assert exc.value.code == 2


def test_synth_rir_rejects_malformed_notch(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["synth-rir", "-o", str(tmp_path / "x.wav"), "--notch", "1000,15"])
    assert exc.value.code == 2


def test_avg_rir_matches_library_average(workspace, tmp_path, capsys):
    out = tmp_path / "avg.wav"
    rc = main(["avg-rir", str(workspace / "pl.wav"), str(workspace / "pr.wav"),
               "-o", str(out)])
    assert rc == 0
    a = ImpulseResponse(read_wav(workspace / "pl.wav"))
    b = ImpulseResponse(read_wav(workspace / "pr.wav"))
    want = average_pair(a, b).data.astype(np.float32)
    assert np.array_equal(read_wav(out).samples[0], want.astype(np.float64))


def test_design_solves_and_reports(workspace, designed, capsys):
    assert designed.exists()
    design = load_design(designed)
    assert design.gains.left.converged
    assert design.gains.right.converged
    assert np.all(design.gains.left.gains >= 0.0)


def test_design_reruns_byte_identical(workspace, designed):
    again = workspace / "again.txt"
    rc = main(["design", "--config", str(workspace / "run.ini"), "-o", str(again)])
    assert rc == 0
    assert again.read_bytes() == designed.read_bytes()


def test_design_unknown_key_exits_2(workspace, tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text(RUN_INI.replace("[io]", "[io]\n") + "\n[solver]\ndampening = 0.7\n")
    rc = main(["design", "--config", str(bad)])
    assert rc == 2
    assert "dampening" in capsys.readouterr().err


def test_design_iteration_cap_exits_3_with_best_effort(workspace, tmp_path, capsys):
    strict = workspace / "strict.ini"
    strict.write_text(RUN_INI + "\n[solver]\ntolerance_db = 0.001\nmax_iterations = 2\n")
    out = tmp_path / "best.txt"
    rc = main(["design", "--config", str(strict), "-o", str(out)])
    assert rc == 3
    assert out.exists()
    assert "NOT converged" in capsys.readouterr().out


def test_design_unfillable_exits_4_naming_bands(workspace, capsys):
    unfill = workspace / "unfill.ini"
    unfill.write_text(
        RUN_INI.replace("support_left = sl.wav", "support_left = bright.wav")
    )
    rc = main(["design", "--config", str(unfill)])
    assert rc == 4
    err = capsys.readouterr().err
    assert "80.0 Hz" in err


def test_render_writes_four_channels(workspace, designed, tmp_path, capsys):
    stereo = tmp_path / "in.wav"
    rng = np.random.default_rng(8)
    write_wav(stereo, AudioBuffer(rng.standard_normal((2, 2000)) * 0.1, 48000))
    out = tmp_path / "cond.wav"
    rc = main(["render", "--design", str(designed), "-i", str(stereo), "-o", str(out)])
    assert rc == 0
    assert read_wav(out).num_channels == 4
    text = capsys.readouterr().out
    expected = support_chain_latency(load_design(designed), "left")
    assert "chain latency: FL 0 samples" in text
    assert ("SL %d samples" % expected) in text


def test_render_rejects_mono_input(workspace, designed, tmp_path, capsys):
    mono = tmp_path / "mono.wav"
    write_wav(mono, AudioBuffer(np.zeros((1, 64)), 48000))
    rc = main(["render", "--design", str(designed), "-i", str(mono),
               "-o", str(tmp_path / "x.wav")])
    assert rc == 2
    assert "stereo" in capsys.readouterr().err


def test_simulate_writes_per_channel_reports(workspace, designed, tmp_path, capsys):
    out = tmp_path / "rep.csv"
    rc = main(["simulate", "--design", str(designed),
               "--config", str(workspace / "run.ini"), "-o", str(out)])
    assert rc == 0
    assert (tmp_path / "rep_left.csv").exists()
    assert (tmp_path / "rep_right.csv").exists()
    assert not out.exists()

    single = tmp_path / "left_only.csv"
    rc = main(["simulate", "--design", str(designed),
               "--config", str(workspace / "run.ini"),
               "-o", str(single), "--channel", "left"])
    assert rc == 0
    assert single.exists()


def test_simulate_enforces_deviation_budget(workspace, designed, tmp_path, capsys):
    rc = main(["simulate", "--design", str(designed),
               "--config", str(workspace / "run.ini"),
               "-o", str(tmp_path / "r.csv"), "--max-deviation-db", "0.001"])
    assert rc == 1
    assert "exceeds" in capsys.readouterr().err


def test_report_pretty_prints(workspace, designed, tmp_path, capsys):
    csv = tmp_path / "rep.csv"
    main(["simulate", "--design", str(designed),
          "--config", str(workspace / "run.ini"),
          "-o", str(csv), "--channel", "right"])
    capsys.readouterr()
    rc = main(["report", str(csv)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "f_c_hz" in out
    assert "max |deviation| over filled bands" in out
    assert "unfilled bands" in out


def test_missing_file_exits_2(tmp_path, capsys):
    rc = main(["report", str(tmp_path / "nope.csv")])
    assert rc == 2
