import math
import struct

import numpy as np
import pytest

from conftest import random_field
from modhf.errors import ConfigError
from modhf.grid import GridSpec
from modhf.io import (MAGIC, fmt_float, read_field, read_snapshots, write_csv, write_field,
                      write_snapshots)


def test_snapshot_round_trip(tmp_path, rng):
    grid = GridSpec(2, 16, 3.0)
    states = rng.standard_normal((3, 2, 16, 16)) + 1j * rng.standard_normal((3, 2, 16, 16))
    path = tmp_path / "run.snap"
    write_snapshots(path, grid, [0.0, 0.1, 0.25], states, extra={"gamma": 0.5})
    g, times, back, header = read_snapshots(path)
    assert g == grid
    assert times == [0.0, 0.1, 0.25]
    assert header["gamma"] == 0.5
    np.testing.assert_array_equal(back, states)


def test_layout(tmp_path):
    grid = GridSpec(1, 8, 1.0)
    path = tmp_path / "f.snap"
    write_snapshots(path, grid, [0.0], np.ones((1, 1, 8)))
    raw = path.read_bytes()
    assert raw.startswith(MAGIC)
    (hlen,) = struct.unpack_from("<Q", raw, len(MAGIC))
    assert len(raw) == len(MAGIC) + 8 + hlen + 8 * 16
    assert struct.unpack_from("<dd", raw, len(MAGIC) + 8 + hlen) == (1.0, 0.0)


def test_field_round_trip(tmp_path, grid1, rng):
    f = random_field(grid1, rng)
    write_field(tmp_path / "f.snap", f)
    g = read_field(tmp_path / "f.snap")
    assert g.grid == grid1
    np.testing.assert_array_equal(g.values, f.values)


def test_field_rejects_multi_state(tmp_path):
    grid = GridSpec(1, 8, 1.0)
    write_snapshots(tmp_path / "s.snap", grid, [0.0, 1.0], np.zeros((2, 1, 8)))
    with pytest.raises(ConfigError):
        read_field(tmp_path / "s.snap")


def test_write_shape_checks(tmp_path):
    grid = GridSpec(1, 8, 1.0)
    with pytest.raises(ConfigError):
        write_snapshots(tmp_path / "a", grid, [0.0], np.zeros((1, 1, 16)))
    with pytest.raises(ConfigError):
        write_snapshots(tmp_path / "a", grid, [0.0, 1.0], np.zeros((1, 1, 8)))


@pytest.mark.parametrize("mutate", [
    lambda raw: b"garbage" + raw[7:],
    lambda raw: raw[:-16],
    lambda raw: raw[:10],
    lambda raw: raw.replace(b'"n": 8', b'"n": 9'),
    lambda raw: raw.replace(b'"times"', b'"tyme"'),
])
def test_malformed(tmp_path, mutate):
    grid = GridSpec(1, 8, 1.0)
    good = tmp_path / "good.snap"
    write_snapshots(good, grid, [0.0], np.zeros((1, 1, 8)))
    bad = tmp_path / "bad.snap"
    bad.write_bytes(mutate(good.read_bytes()))
    with pytest.raises(ConfigError):
        read_snapshots(bad)


def test_non_finite_rejected(tmp_path):
    grid = GridSpec(1, 8, 1.0)
    vals = np.zeros((1, 1, 8), complex)
    vals[0, 0, 3] = np.nan
    write_snapshots(tmp_path / "n.snap", grid, [0.0], vals)
    with pytest.raises(ConfigError, match="non-finite"):
        read_snapshots(tmp_path / "n.snap")


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        read_field(tmp_path / "absent.snap")


def test_float_text_round_trips():
    for x in (0.1, 1 / 3, 1e-300, 6.02e23, -0.0, math.pi):
        assert float(fmt_float(x)) == x
    assert fmt_float(math.inf) == "inf"
    assert fmt_float(np.float64(0.5)) == "0.5"


def test_csv(tmp_path):
    path = tmp_path / "t.csv"
    write_csv(path, ("a", "b", "c"), [(1 / 3, 2, "x"), (np.float64(0.1), 0, "y")])
    assert path.read_text() == "a,b,c\n0.3333333333333333,2,x\n0.1,0,y\n"
