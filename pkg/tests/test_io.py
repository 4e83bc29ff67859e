import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from mvtwin.errors import ParseError
from mvtwin.io import (load_params, params_from_config, read_config, read_waveform_csv,
                       write_waveform_csv)
from mvtwin.twin import FIELD_630KVA, SIM_50KVA

VALID = """# fs=1000
t,uA,uB,uC,iA,iB,iC
0.0,1,2,3,4,5,6
0.001,1.5,2.5,3.5,4.5,5.5,6.5
0.002,-1,-2,-3,-4,-5,-6e-1
"""


def write(tmp_path, text, name="w.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_three_row_file(tmp_path):
    ch = read_waveform_csv(write(tmp_path, VALID))
    assert sorted(ch) == ["iA", "iB", "iC", "uA", "uB", "uC"]
    assert all(w.n == 3 and w.fs == 1000.0 for w in ch.values())
    assert ch["iC"].samples[-1] == -0.6
    assert ch["uA"].unit == "V" and ch["iA"].unit == "A"


def test_channel_subset_and_metadata_lines(tmp_path):
    text = "# fs=500\n# site=north\n# samples=2\nt,iB\n1.0,3\n1.002,4\n"
    ch = read_waveform_csv(write(tmp_path, text))
    assert list(ch) == ["iB"] and ch["iB"].t0 == 1.0


@pytest.mark.parametrize("text, line", [
    ("", 1),
    ("fs=1000\nt,uA\n0,1\n", 1),
    ("# fs=abc\nt,uA\n0,1\n", 1),
    ("# fs=1000\nt,uA\n0,1\n0.0015,2\n", 4),
    ("# fs=1000\nt,uA\n0,1\n0.001,nan\n", 4),
    ("# fs=1000\nt,uA\n0,1\n0.001,1 000\n", 4),
    ("# fs=1000\nt,uA\n0,1\n0.001\n", 4),
    ("# fs=1000\ntime,uA\n0,1\n", 2),
    ("# fs=1000\nt,uA,uX\n0,1,2\n", 2),
    ("# fs=1000\nt,uA,uA\n0,1,2\n", 2),
    ("# fs=1000\nt,uA\n", 3),
    ("# fs=1000\n# samples=3\nt,uA\n0,1\n", 4),
    ("# fs=1000\n# not a pair\nt,uA\n0,1\n", 2),
])
def test_rejected_inputs_carry_line_numbers(tmp_path, text, line):
    with pytest.raises(ParseError) as exc:
        read_waveform_csv(write(tmp_path, text))
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_writer_headers(tmp_path):
    p = tmp_path / "o.csv"
    write_waveform_csv(p, {"uA": np.array([1.0, 2.0])}, fs=4000.0, meta={"seed": 3})
    head = p.read_text().splitlines()[:5]
    assert head == ["# fs=4000.0", "# version=1", "# samples=2", "# seed=3", "t,uA"]


def test_writer_validation(tmp_path):
    with pytest.raises(ValueError):
        write_waveform_csv(tmp_path / "x", {"uZ": np.ones(2)}, fs=1.0)
    with pytest.raises(ValueError):
        write_waveform_csv(tmp_path / "x", {"uA": np.ones(2), "iA": np.ones(3)}, fs=1.0)
    with pytest.raises(ValueError):
        write_waveform_csv(tmp_path / "x", {"uA": np.ones(2)})


@settings(max_examples=40, deadline=None)
@given(data=arrays(float, (6, 17), elements=st.floats(-1e6, 1e6, allow_subnormal=True)),
       fs=st.sampled_from([5000.0, 13200.0, 30000.0, 52000.0]),
       t0=st.floats(0, 100))
def test_round_trip_is_bit_exact(tmp_path_factory, data, fs, t0):
    p = tmp_path_factory.mktemp("rt") / "w.csv"
    names = ["uA", "uB", "uC", "iA", "iB", "iC"]
    write_waveform_csv(p, dict(zip(names, data)), fs=fs, t0=t0)
    back = read_waveform_csv(p)
    for k, n in enumerate(names):
        assert np.array_equal(back[n].samples, data[k])
        assert back[n].fs == fs and back[n].t0 == t0


def test_config_parsing(tmp_path):
    cfg = read_config(write(tmp_path, "# c\na = 1  # trailing\n\nb=x\n", "c.cfg"))
    assert cfg == {"a": "1", "b": "x"}
    with pytest.raises(ParseError):
        read_config(write(tmp_path, "a=1\na=2\n", "d.cfg"))
    with pytest.raises(ParseError):
        read_config(write(tmp_path, "just words\n", "e.cfg"))


def test_presets_match_constants():
    assert load_params("sim_50kva") == SIM_50KVA
    assert load_params("field_630kva") == FIELD_630KVA


def test_params_from_config():
    base = dict(s_rated="1e5", v1_rated="400", v2_rated="10e3", r1="0.01", l1="0.03",
                r2="0.01", l2="0.03", rm="400", lm="400")
    p = params_from_config({**base, "vector_group": "Dy1", "tap_min": "0.8"})
    assert p.vector_group == "Dy1" and p.tap_range == (0.8, 1.1)
    with pytest.raises(ParseError):
        params_from_config({**base, "colour": "red"})
    with pytest.raises(ParseError):
        params_from_config({k: v for k, v in base.items() if k != "rm"})
