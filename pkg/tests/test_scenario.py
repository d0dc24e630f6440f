import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from antiisrj import scenario
from antiisrj.scenario import (ConfigError, amplitudes_from_ratios, delay_to_range, dump_config,
                               parse_config, range_to_delay)


def test_table1_frozen_values(table1):
    assert table1.target.delay_s == pytest.approx(6.004153713566737e-06, rel=1e-15)
    assert table1.false_target_ranges_m == pytest.approx([927.0], abs=1e-9)
    assert table1.noise.variance == pytest.approx(10 ** 1.2, rel=1e-12)
    assert table1.waveform.n_quadratic == pytest.approx(math.pi * 1e14, rel=1e-15)
    assert table1.jammers[0].duty_cycle == pytest.approx(2 / 3)


def test_table2_frozen_values(table2):
    assert table2.false_target_ranges_m == pytest.approx([867.0, 927.0], abs=1e-9)
    assert [j.n_slices for j in table2.jammers] == [6, 7]
    assert table2.jammers[0].amplitude == pytest.approx(10 ** (-4.2 / 20), rel=1e-12)
    assert table2.jammers[1].amplitude == pytest.approx(1.0)


@given(st.floats(min_value=0.0, max_value=1e6, allow_nan=False))
def test_range_delay_round_trip(r):
    assert delay_to_range(range_to_delay(r)) == pytest.approx(r, rel=1e-12, abs=1e-9)


def test_negative_range_rejected():
    with pytest.raises(ValueError):
        range_to_delay(-1.0)


@given(st.floats(min_value=-30, max_value=30), st.floats(min_value=-30, max_value=30))
def test_amplitudes_from_ratios_inverts(sjr, snr):
    a_t, a_j, sigma = amplitudes_from_ratios(sjr, snr)
    assert 20 * math.log10(a_t / a_j) == pytest.approx(sjr, abs=1e-9)
    assert 10 * math.log10(a_t**2 / sigma**2) == pytest.approx(snr, abs=1e-9)


def test_dump_parse_round_trip(table2):
    again = parse_config(dump_config(table2))
    assert again == table2


def test_with_overrides_rederives_amplitudes(table1):
    cfg = table1.with_overrides(sjr_db=-6.0, snr_db=0.0, seed=9)
    assert cfg.jammers[0].amplitude == pytest.approx(10 ** (6 / 20))
    assert cfg.noise.sigma == pytest.approx(1.0)
    assert cfg.noise.seed == 9
    assert table1.noise.seed == 1


def test_missing_key_names_key(table1):
    text = "\n".join(line for line in dump_config(table1).splitlines() if not line.startswith("snr_db"))
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert err.value.key == "snr_db"


@pytest.mark.parametrize("bad, key", [
    ("bandwidth_hz = abc", "bandwidth_hz"),
    ("jammer.1.slice_width_s = 1e-6", "slice_width_s"),
    ("jammer.1.n_slices = 2.5", "jammer.1.n_slices"),
])
def test_bad_values_raise_config_error(table1, bad, key):
    lines = dump_config(table1).splitlines()
    k = bad.split("=")[0].strip()
    text = "\n".join(bad if line.split("=")[0].strip() == k else line for line in lines)
    with pytest.raises(ConfigError) as err:
        parse_config(text)
    assert key in str(err.value)


def test_duplicate_and_malformed_lines():
    with pytest.raises(ConfigError):
        scenario.parse_text("a = 1\na = 2\n")
    with pytest.raises(ConfigError):
        scenario.parse_text("just words\n")
    assert scenario.parse_text("# c\n\n x = 3 # tail\n") == {"x": "3"}


def test_load_missing_file_is_oserror(tmp_path):
    with pytest.raises(OSError):
        scenario.load_config(tmp_path / "nope.cfg")
