import numpy as np
import pytest

from roomfill.designfile import dumps_design, load_design, loads_design, save_design
from roomfill.errors import FormatError


def test_save_load_round_trip(tmp_path, solved_design):
    path = tmp_path / "design.txt"
    save_design(solved_design, path)
    back = load_design(path)

    assert back.spec == solved_design.spec
    assert back.target == solved_design.target
    assert back.delay_ms == solved_design.delay_ms
    assert back.decorrelator_len == solved_design.decorrelator_len
    assert back.seed_left == solved_design.seed_left
    assert back.seed_right == solved_design.seed_right
    assert back.balance_gains == solved_design.balance_gains
    for side in ("left", "right"):
        got = getattr(back.gains, side)
        want = getattr(solved_design.gains, side)
        assert np.array_equal(got.gains, want.gains)
        assert np.array_equal(got.residual_db, want.residual_db)
        assert got.offset_db == want.offset_db
        assert got.converged == want.converged
        assert got.iterations_used == want.iterations_used
        front_got = getattr(back.front_gains, side)
        front_want = getattr(solved_design.front_gains, side)
        assert np.array_equal(front_got.gains, front_want.gains)


def test_redump_of_loaded_design_is_byte_identical(solved_design):
    text = dumps_design(solved_design)
    assert dumps_design(loads_design(text)) == text


def test_unsupported_version_rejected(solved_design):
    text = dumps_design(solved_design).replace("format_version = 1", "format_version = 99")
    with pytest.raises(FormatError):
        loads_design(text)


def test_missing_section_rejected(solved_design):
    text = dumps_design(solved_design)
    head = text.index("[fill_right]")
    tail = text.index("[front_left]")
    with pytest.raises(FormatError):
        loads_design(text[:head] + text[tail:])


def test_unknown_key_rejected(solved_design):
    text = dumps_design(solved_design).replace(
        "[render]\ndelay_ms", "[render]\nreverb = wet\ndelay_ms"
    )
    with pytest.raises(FormatError):
        loads_design(text)


def test_gain_count_must_match_filterbank(solved_design):
    text = dumps_design(solved_design)
    for line in text.splitlines():
        if line.startswith("gains = "):
            broken = text.replace(line, line + ", 1.0", 1)
            break
    with pytest.raises(FormatError):
        loads_design(broken)


def test_not_a_design_file_rejected():
    with pytest.raises(FormatError):
        loads_design("just some prose, no sections at all")
    with pytest.raises(FormatError):
        loads_design("[design]\nformat_version = 1\n")  # sections missing
