"""Tests for the Touchstone writer and reader."""

import numpy as np
import pytest

from app.errors import TouchstoneError
from app.models.network import SweepRow, SweepTable, TwoPort
from app.services.touchstone import format_touchstone, parse_touchstone, touchstone_read, touchstone_write


def table_of(freqs, matrices, z0=50.0) -> SweepTable:
    return SweepTable(rows=[SweepRow(frequency=f, s=TwoPort("S", m, z0)) for f, m in zip(freqs, matrices)], z0=z0)


def test_single_row_layout():
    text = format_touchstone(table_of([40e9], [np.array([[0.1 - 0.2j, 0.0], [3.5 + 1j, 0.05]])]))
    lines = text.splitlines()
    assert len(lines) == 2
    assert lines[0] == "# GHz S RI R 50"
    # S11 S21 S12 S22, each as a real/imaginary pair
    assert lines[1].split() == ["40", "0.1", "-0.2", "3.5", "1", "0", "0", "0.05", "0"]


def test_write_then_read(tmp_path):
    rng = np.random.default_rng(3)
    freqs = np.sort(rng.uniform(1e9, 100e9, 25))
    matrices = rng.normal(size=(25, 2, 2)) + 1j * rng.normal(size=(25, 2, 2))
    path = touchstone_write(table_of(freqs, matrices), 50.0, tmp_path / "amp.s2p")
    data = touchstone_read(path)
    assert data.z0 == 50.0
    np.testing.assert_allclose(data.frequencies, freqs, rtol=1e-7)
    np.testing.assert_allclose(data.s, matrices, rtol=1e-7, atol=1e-7)


def test_rejected_table_writes_nothing(tmp_path):
    m = np.eye(2)
    target = tmp_path / "bad.s2p"
    with pytest.raises(TouchstoneError) as exc:
        touchstone_write(table_of([2e9, 1e9], [m, m]), 50.0, target)
    assert exc.value.context["row"] == 1
    assert not target.exists()


def test_duplicate_and_empty_tables_are_rejected():
    m = np.eye(2)
    with pytest.raises(TouchstoneError):
        format_touchstone(table_of([1e9, 1e9], [m, m]))
    with pytest.raises(TouchstoneError):
        format_touchstone(SweepTable(rows=[]))


def test_magnitude_angle_in_mhz():
    data = parse_touchstone("! comment\n# MHz S MA R 75\n100 0.5 90 2 0 2 0 0.5 -90\n")
    assert data.frequencies[0] == pytest.approx(100e6)
    assert data.z0 == 75.0
    assert data.s[0, 0, 0] == pytest.approx(0.5j, abs=1e-12)
    assert data.s[0, 1, 0] == pytest.approx(2.0)
    assert data.s[0, 1, 1] == pytest.approx(-0.5j, abs=1e-12)


def test_decibel_angle():
    data = parse_touchstone("# GHz S DB R 50\n1 -20 0 6.0206 180 -40 0 -20 0\n")
    assert data.s[0, 0, 0] == pytest.approx(0.1)
    assert data.s[0, 1, 0] == pytest.approx(-2.0, rel=1e-4)
    assert data.s[0, 0, 1] == pytest.approx(0.01)


def test_default_options_and_record_split_across_lines():
    data = parse_touchstone("1 0.5 0 1 0\n  1 0 0.5 0\n")
    assert data.z0 == 50.0
    assert data.frequencies[0] == 1e9
    assert data.s[0, 1, 0] == pytest.approx(1.0)


def test_one_port_file(tmp_path):
    path = tmp_path / "load.s1p"
    path.write_text("# GHz S RI R 50\n1 0.2 0.1\n2 0.3 -0.1\n", encoding="utf-8")
    data = touchstone_read(path)
    assert data.s.shape == (2, 1, 1)
    assert data.s[1, 0, 0] == pytest.approx(0.3 - 0.1j)


@pytest.mark.parametrize("text", [
    "# GHz Y RI R 50\n1 0 0 0 0 0 0 0 0\n",
    "# GHz S RI R\n1 0 0 0 0 0 0 0 0\n",
    "# GHz S RI R -50\n1 0 0 0 0 0 0 0 0\n",
    "# GHz S XY R 50\n1 0 0 0 0 0 0 0 0\n",
    "# GHz S RI R 50\n1 0 0 0 0 0 0 0\n",
    "# GHz S RI R 50\n1 0 0 zero 0 0 0 0 0\n",
])
def test_malformed_files(text):
    with pytest.raises(TouchstoneError):
        parse_touchstone(text)


def test_missing_file(tmp_path):
    with pytest.raises(TouchstoneError):
        touchstone_read(tmp_path / "absent.s2p")
