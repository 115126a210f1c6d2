import json

import numpy as np
import pytest

from bomber import ConfigurationError
from bomber.io import MAGIC, read_field, write_field


def _same(a, b):
    assert a.grid == b.grid and a.params == b.params and a.mode == b.mode
    for name in ("P_comp", "H_comp", "K"):
        assert getattr(a, name).tobytes() == getattr(b, name).tobytes()


@pytest.mark.parametrize("suffix", [".bin", ".json"])
def test_roundtrip(field_v1, tmp_path, suffix):
    path = tmp_path / f"f{suffix}"
    write_field(field_v1, path)
    _same(field_v1, read_field(path))


def test_binary_is_reproducible(field_v1, tmp_path):
    a, b = tmp_path / "a.bin", tmp_path / "b.bin"
    write_field(field_v1, a)
    write_field(read_field(a), b)
    assert a.read_bytes() == b.read_bytes()
    data = a.read_bytes()
    assert data.startswith(MAGIC)
    hlen = int.from_bytes(data[8:12], "little")
    header = json.loads(data[12:12 + hlen])
    assert header["v"] == 1.0 and header["mode"] == "continuous" and header["nx"] == field_v1.grid.nx
    assert len(data) == 12 + hlen + 5 * 8 * field_v1.grid.nx * field_v1.grid.nt


def test_csv(field_v1, tmp_path):
    path = tmp_path / "k.csv"
    write_field(field_v1, path, csv_field="K")
    lines = path.read_text().splitlines()
    assert lines[0] == "x,t,value"
    assert len(lines) == 1 + field_v1.grid.nx * field_v1.grid.nt
    x, t, k = map(float, lines[2].split(","))
    assert (x, t) == (0.0, field_v1.grid.dt) and k == field_v1.K[0, 1]
    with pytest.raises(ConfigurationError):
        read_field(path)
    with pytest.raises(ConfigurationError):
        write_field(field_v1, path, csv_field="Z")


def test_bad_files(field_v1, tmp_path):
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"NOTAFIELD" * 4)
    with pytest.raises(ConfigurationError):
        read_field(bad)
    good = tmp_path / "g.bin"
    write_field(field_v1, good)
    bad.write_bytes(good.read_bytes()[:-8])
    with pytest.raises(ConfigurationError):
        read_field(bad)
    with pytest.raises(ConfigurationError):
        write_field(field_v1, good, fmt="hdf5")


def test_json_without_complements(field_v1, tmp_path):
    path = tmp_path / "f.json"
    write_field(field_v1, path)
    doc = json.loads(path.read_text())
    del doc["P_comp"], doc["H_comp"]
    path.write_text(json.dumps(doc))
    back = read_field(path)
    assert np.allclose(back.P, field_v1.P, atol=1e-15)
