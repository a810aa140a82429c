import numpy as np
import pytest

from ovalcount import io
from ovalcount.errors import DomainError
from ovalcount.geometry import OvalCurve
from ovalcount.lattice import UnimodularLattice, sample_haar


def test_curve_presets():
    assert io.parse_curve("disk").area() == pytest.approx(np.pi, abs=1e-12)
    e = io.parse_curve("ellipse(2, 1)")
    assert e.area() == pytest.approx(2 * np.pi, abs=1e-9)
    with pytest.raises(DomainError):
        io.parse_curve("triangle")


def test_custom_curve_roundtrip(tmp_path):
    c = OvalCurve.from_coeffs([1.0, 0.1, 0.05, 0.02, -0.03])
    io.write_curve(tmp_path / "c.json", c)
    back = io.parse_curve(str(tmp_path / "c.json"))
    np.testing.assert_array_equal(back.coeffs(), c.coeffs())
    assert io.curve_to_spec(back) == io.curve_to_spec(c)


def test_lattice_roundtrip_exact(tmp_path):
    L = sample_haar(np.random.default_rng(0))
    io.write_lattice(tmp_path / "l.txt", L)
    assert np.array_equal(io.read_lattice(tmp_path / "l.txt").basis, L.basis)
    with pytest.raises(DomainError):
        io.lattice_from_text("1 0 0")


def test_jsonl_roundtrip(tmp_path):
    recs = [{"a": 0.1, "b": [1, 2]}, {"header": {"seed": 3}}]
    io.write_jsonl(tmp_path / "x.jsonl", recs)
    assert io.read_jsonl(tmp_path / "x.jsonl") == recs
