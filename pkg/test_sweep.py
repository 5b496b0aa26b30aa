"""Tests for frequency, control-voltage and corner sweeps and metric extraction."""

import math

import numpy as np
import pytest

from app.errors import SweepError
from app.models.network import FrequencyGrid, SweepRow, SweepTable, TwoPort
from app.services.lna import noise_factor_cf
from app.services.reference_design import ReferenceDesigns, reference_design
from app.services.sweep import (
    corner_sweep,
    extract_metrics,
    frequency_sweep,
    phase_deviation,
    vctrl_sweep,
)

BAND = FrequencyGrid(start=30e9, stop=50e9, points=41)


def synthetic_table(freqs_ghz, gain_db, s11=0.5) -> SweepTable:
    rows = []
    for f, g in zip(freqs_ghz, gain_db):
        s21 = 10.0 ** (g / 20.0)
        m = np.array([[s11, 0.0], [s21, 0.0]])
        rows.append(SweepRow(frequency=f * 1e9, s=TwoPort("S", m, 50.0)))
    return SweepTable(rows=rows)


def parabola(freqs_ghz):
    return 20.0 - 3.0 * ((np.asarray(freqs_ghz) - 40.4) / 3.4) ** 2


@pytest.mark.parametrize("spacing", ["linear", "log"])
def test_two_point_grid_is_its_endpoints(spacing):
    f = FrequencyGrid(start=30e9, stop=50e9, points=2, spacing=spacing).frequencies()
    assert list(f) == [30e9, 50e9]


def test_grid_must_be_ordered():
    with pytest.raises(ValueError):
        FrequencyGrid(start=50e9, stop=30e9, points=11)


def test_synthetic_parabola_metrics():
    f = np.linspace(30.0, 50.0, 201)
    m = extract_metrics(synthetic_table(f, parabola(f)))
    assert m.f0_hz == pytest.approx(40.4e9, abs=1e6)
    assert m.peak_gain_db == pytest.approx(20.0, abs=1e-6)
    assert m.bw_low_hz == pytest.approx(37.0e9, abs=2e6)
    assert m.bw_high_hz == pytest.approx(43.8e9, abs=2e6)
    assert not m.bw_clipped_low and not m.bw_clipped_high
    # |S11| of 0.5 never reaches -10 dB
    assert m.s11_min_db == pytest.approx(20.0 * math.log10(0.5))
    assert m.matching_band_hz == 0.0
    assert m.match_low_hz is None
    assert m.nf_at_f0_db is None
    assert m.fom_db is None


def test_flat_gain_clips_both_band_edges():
    f = np.linspace(30.0, 50.0, 21)
    m = extract_metrics(synthetic_table(f, np.full(f.shape, 12.0)))
    assert m.bw_clipped_low and m.bw_clipped_high
    assert m.bw_low_hz == 30e9
    assert m.bw_high_hz == 50e9


def test_metrics_ignore_duplicates_and_out_of_band_rows():
    f = np.linspace(30.0, 50.0, 201)
    base = extract_metrics(synthetic_table(f, parabola(f)))

    doubled = synthetic_table(np.concatenate([f, f[::-1]]), np.concatenate([parabola(f), parabola(f)[::-1]]))
    assert extract_metrics(doubled) == base

    far = np.linspace(60.0, 70.0, 11)
    extended = synthetic_table(np.concatenate([f, far]), np.concatenate([parabola(f), np.full(far.shape, -40.0)]))
    wide = extract_metrics(extended)
    assert wide.f0_hz == base.f0_hz
    assert wide.bw_3db_hz == base.bw_3db_hz


def test_empty_and_one_port_tables_are_rejected():
    with pytest.raises(SweepError):
        extract_metrics(SweepTable(rows=[]))
    one_port = SweepTable(rows=[SweepRow(frequency=1e9, s=TwoPort("S", np.array([[0.1]]), 50.0))])
    with pytest.raises(SweepError):
        extract_metrics(one_port)


def test_reference_design_peaks_inside_the_band():
    m = extract_metrics(frequency_sweep(reference_design(), 0.0, BAND))
    assert 30e9 < m.f0_hz < 50e9
    assert m.s11_min_db <= -10.0
    assert m.matching_band_hz > 0.0
    assert m.nf_at_f0_db is not None and m.nf_at_f0_db > 0.0


def test_gain_control_lowers_s21_everywhere():
    p = reference_design()
    tables = [frequency_sweep(p, v, BAND) for v in np.linspace(0.0, 0.7, 8)]
    s21 = np.array([np.abs(t.s_matrices()[:, 1, 0]) for t in tables])
    assert np.all(np.diff(s21, axis=0) <= 0.0)
    assert np.all(s21[-1] < 0.7 * s21[0])


def test_refining_the_grid_keeps_metrics():
    p = reference_design()
    coarse = extract_metrics(frequency_sweep(p, 0.0, BAND))
    fine = extract_metrics(frequency_sweep(p, 0.0, BAND.model_copy(update={"points": 81})))
    assert fine.f0_hz == pytest.approx(coarse.f0_hz, rel=5e-3)
    assert fine.bw_3db_hz == pytest.approx(coarse.bw_3db_hz, rel=5e-3)


def test_sweep_noise_figure_follows_closed_form():
    p = reference_design()
    table = frequency_sweep(p, 0.35, FrequencyGrid(start=30e9, stop=50e9, points=11))
    for row in table.rows:
        assert row.nf_db == pytest.approx(10.0 * math.log10(noise_factor_cf(p, row.frequency)), rel=1e-6)
    assert table.vctrl == 0.35
    assert table.corner == "TT"


def test_vctrl_sweep_peak_gain_decreases():
    result = vctrl_sweep(reference_design(), [0.0, 0.3, 0.5, 0.7], BAND)
    gains = [e.peak_gain_db for e in result.entries]
    assert all(b < a for a, b in zip(gains, gains[1:]))
    assert result.peak_gain_spread_db == pytest.approx(gains[0] - gains[-1])
    assert result.entries[0].phase_deviation_deg == 0.0
    assert result.max_phase_deviation_deg == max(e.phase_deviation_deg for e in result.entries)


def test_phase_deviation_is_anchored_at_zero_volts():
    p = reference_design()
    ordered = vctrl_sweep(p, [0.0, 0.35, 0.7], BAND)
    shuffled = vctrl_sweep(p, [0.7, 0.0, 0.35], BAND)
    assert shuffled.entries[1].phase_deviation_deg == 0.0
    assert shuffled.reference_frequency_hz == ordered.reference_frequency_hz
    by_vctrl = {e.vctrl: e.phase_deviation_deg for e in shuffled.entries}
    for e in ordered.entries:
        assert by_vctrl[e.vctrl] == pytest.approx(e.phase_deviation_deg, abs=1e-9)


def test_single_vctrl_matches_one_frequency_sweep():
    p = reference_design()
    result = vctrl_sweep(p, [0.35], BAND)
    direct = extract_metrics(frequency_sweep(p, 0.35, BAND))
    assert result.entries[0] == direct.model_copy(update={"phase_deviation_deg": 0.0})
    assert result.peak_gain_spread_db == 0.0
    assert result.f0_spread_hz == 0.0


def test_vctrl_sweep_rejects_bad_grids():
    with pytest.raises(SweepError):
        vctrl_sweep(reference_design(), [], BAND)


def test_corners_shift_peak_frequency_and_gain():
    corners = [ReferenceDesigns.corner(name) for name in ("SS", "TT", "FF")]
    ss, tt, ff = corner_sweep(reference_design(), corners, BAND)
    assert ff.f0_hz > tt.f0_hz > ss.f0_hz
    assert ff.peak_gain_db > tt.peak_gain_db > ss.peak_gain_db
    assert [m.corner for m in (ss, tt, ff)] == ["SS", "TT", "FF"]


def test_typical_corner_is_the_plain_sweep():
    p = reference_design()
    (tt,) = corner_sweep(p, [ReferenceDesigns.corner("TT")], BAND)
    plain = extract_metrics(frequency_sweep(p, 0.0, BAND))
    assert tt.peak_gain_db == pytest.approx(plain.peak_gain_db, rel=1e-12)
    assert tt.f0_hz == pytest.approx(plain.f0_hz, rel=1e-12)


@pytest.mark.parametrize("a, b, expected", [
    (10.0, -10.0, 20.0),
    (170.0, -170.0, 20.0),
    (0.0, 360.0, 0.0),
    (90.0, -90.0, 180.0),
    (-725.0, 0.0, 5.0),
])
def test_phase_deviation_wraps(a, b, expected):
    assert phase_deviation(a, b) == pytest.approx(expected)
