"""
Sweep Service - frequency, control-voltage and corner sweeps of the
two-stage LNA, plus extraction of the reported scalar metrics.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.config import config
from app.errors import RfssError, SweepError
from app.models.design import CornerFactors, DesignParams, FomInputs
from app.models.netlist import Netlist, OutputSpec
from app.models.network import FrequencyGrid, SweepMetrics, SweepRow, SweepTable, VctrlSweepResult
from app.services.lna import check_vctrl, fom
from app.services.mna import port_parameters
from app.services.netlist import build_two_stage_model
from app.services.noise import output_noise
from app.services.reference_design import apply_corner

logger = logging.getLogger(__name__)

OUTPUT = OutputSpec(kind="short_circuit_current", node="o2")
S11_FLOOR = 1e-15
MATCH_LEVEL_DB = -10.0


def _map(fn, items: Sequence, workers: Optional[int] = None) -> list:
    """Evaluate fn over items concurrently, results in input order."""
    workers = workers or config.worker_count()
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))


def frequency_sweep(p: DesignParams, vctrl: float, grid: FrequencyGrid, z0: Optional[float] = None,
                    workers: Optional[int] = None) -> SweepTable:
    """
    S-parameters and noise figure of the two-stage model at every grid point.

    Raises:
        RfssError: the first failing point, with its frequency in the context
    """
    z0 = float(config.DEFAULT_Z0 if z0 is None else z0)
    netlist = build_two_stage_model(p, vctrl)
    noisy = any(s.is_input for s in netlist.noise_sources)
    frequencies = grid.frequencies()

    def point(f: float) -> SweepRow:
        try:
            s = port_parameters(netlist, f, "S", z0)
            nf = output_noise(netlist, OUTPUT, f).noise_figure_db if noisy else None
        except RfssError as exc:
            exc.context.setdefault("frequency", float(f))
            raise
        return SweepRow(frequency=float(f), s=s, nf_db=nf)

    logger.info("frequency sweep: %d points, vctrl=%.3f V, corner=%s",
                len(frequencies), vctrl, p.corner_scale.name)
    rows = _map(point, list(frequencies), workers)
    return SweepTable(rows=rows, vctrl=vctrl, corner=p.corner_scale.name, z0=z0)


def _db(x: np.ndarray) -> np.ndarray:
    return 20.0 * np.log10(np.maximum(np.abs(x), S11_FLOOR))


def _interp_crossing(f: np.ndarray, y: np.ndarray, i: int, j: int, level: float) -> float:
    """Linear crossing of `level` between samples i and j."""
    if y[j] == y[i]:
        return float(f[i])
    return float(f[i] + (level - y[i]) * (f[j] - f[i]) / (y[j] - y[i]))


def _band_edges(f: np.ndarray, y: np.ndarray, centre: int, level: float,
                above: bool = True) -> Tuple[float, float, bool, bool]:
    """Edges of the contiguous region around `centre` on the inside of `level`."""
    inside = (y >= level) if above else (y <= level)
    lo = centre
    while lo > 0 and inside[lo - 1]:
        lo -= 1
    hi = centre
    while hi < len(f) - 1 and inside[hi + 1]:
        hi += 1
    clipped_lo = lo == 0
    clipped_hi = hi == len(f) - 1
    low = float(f[0]) if clipped_lo else _interp_crossing(f, y, lo - 1, lo, level)
    high = float(f[-1]) if clipped_hi else _interp_crossing(f, y, hi, hi + 1, level)
    return low, high, clipped_lo, clipped_hi


def _parabolic_peak(f: np.ndarray, y: np.ndarray, i: int) -> Tuple[float, float]:
    if i == 0 or i == len(f) - 1:
        return float(f[i]), float(y[i])
    x = (f[i - 1:i + 2] - f[i]) / (f[i + 1] - f[i - 1])
    a, b, c = np.polyfit(x, y[i - 1:i + 2], 2)
    if a >= 0:
        return float(f[i]), float(y[i])
    xv = float(np.clip(-b / (2.0 * a), x[0], x[2]))
    return float(f[i] + xv * (f[i + 1] - f[i - 1])), float(np.polyval([a, b, c], xv))


def _phase_deg(f: np.ndarray, s21: np.ndarray, at: float) -> float:
    phase = np.degrees(np.unwrap(np.angle(s21)))
    return float(np.interp(at, f, phase))


def _table_arrays(table: SweepTable):
    if not table.rows:
        raise SweepError("cannot extract metrics from an empty sweep")
    f, idx = np.unique(table.frequencies, return_index=True)
    s = table.s_matrices()[idx]
    if s.shape[1] != 2:
        raise SweepError("metrics need a two-port sweep", {"ports": int(s.shape[1])})
    return f, s, table.nf_db()[idx]


def phase_at(table: SweepTable, frequency: float) -> float:
    """Unwrapped S21 phase in degrees, linearly interpolated at `frequency`."""
    f, s, _ = _table_arrays(table)
    return _phase_deg(f, s[:, 1, 0], frequency)


def extract_metrics(table: SweepTable, iip3_dbm: Optional[float] = None,
                    pdc_mw: Optional[float] = None) -> SweepMetrics:
    """
    Peak gain and its frequency (parabolic refinement), relative -3 dB band,
    S11 minimum and its -10 dB band, NF and S21 phase at the peak, and the
    figure of merit when IIP3 and DC power are supplied.
    """
    f, s, nf = _table_arrays(table)
    gain = _db(s[:, 1, 0])
    s11 = _db(s[:, 0, 0])

    peak_idx = int(np.argmax(gain))
    f0, peak = _parabolic_peak(f, gain, peak_idx)
    bw_low, bw_high, clip_lo, clip_hi = _band_edges(f, gain, peak_idx, peak - 3.0)

    m = int(np.argmin(s11))
    match_low = match_high = None
    match_clipped = False
    band = 0.0
    if s11[m] <= MATCH_LEVEL_DB:
        match_low, match_high, c_lo, c_hi = _band_edges(f, s11, m, MATCH_LEVEL_DB, above=False)
        match_clipped = c_lo or c_hi
        band = match_high - match_low

    finite = np.isfinite(nf)
    nf_at_f0 = float(np.interp(f0, f[finite], nf[finite])) if finite.any() else None

    fom_db = None
    if iip3_dbm is not None and pdc_mw is not None and nf_at_f0 is not None and nf_at_f0 > 0:
        fom_db = fom(FomInputs(gain_db=peak, bw_3db_ghz=(bw_high - bw_low) / 1e9, f0_ghz=f0 / 1e9,
                               iip3_dbm=iip3_dbm, nf_db=nf_at_f0, pdc_mw=pdc_mw))

    return SweepMetrics(
        f0_hz=f0,
        peak_gain_db=peak,
        bw_3db_hz=bw_high - bw_low,
        bw_low_hz=bw_low,
        bw_high_hz=bw_high,
        bw_clipped_low=clip_lo,
        bw_clipped_high=clip_hi,
        s11_min_db=float(s11[m]),
        s11_min_freq_hz=float(f[m]),
        matching_band_hz=band,
        match_low_hz=match_low,
        match_high_hz=match_high,
        match_clipped=match_clipped,
        nf_at_f0_db=nf_at_f0,
        phase_at_f0_deg=_phase_deg(f, s[:, 1, 0], f0),
        fom_db=fom_db,
        vctrl=table.vctrl,
        corner=table.corner,
    )


def vctrl_tables(p: DesignParams, vgrid: Sequence[float], fgrid: FrequencyGrid,
                 z0: Optional[float] = None) -> List[SweepTable]:
    """One frequency sweep per control voltage, in vgrid order."""
    if not vgrid:
        raise SweepError("vctrl grid is empty")
    for v in vgrid:
        check_vctrl(v)
    workers = config.worker_count()
    if len(vgrid) > 1:
        return _map(lambda v: frequency_sweep(p, v, fgrid, z0, workers=1), list(vgrid), workers)
    return [frequency_sweep(p, vgrid[0], fgrid, z0, workers=workers)]


def summarize_vctrl(tables: Sequence[SweepTable], iip3_dbm: Optional[float] = None,
                    pdc_mw: Optional[float] = None) -> VctrlSweepResult:
    """
    Collect per-vctrl metrics. Phase deviation is measured against the
    vctrl = 0 table at its peak frequency, or against the first table when
    0 V is not on the grid.
    """
    entries = [extract_metrics(t, iip3_dbm, pdc_mw) for t in tables]
    ref = next((i for i, t in enumerate(tables) if t.vctrl == 0.0), 0)
    f_ref = entries[ref].f0_hz
    ref_phase = phase_at(tables[ref], f_ref)
    deviations = [phase_deviation(phase_at(t, f_ref), ref_phase) for t in tables]
    entries = [e.model_copy(update={"phase_deviation_deg": d}) for e, d in zip(entries, deviations)]
    gains = [e.peak_gain_db for e in entries]
    f0s = [e.f0_hz for e in entries]
    return VctrlSweepResult(
        entries=entries,
        reference_frequency_hz=f_ref,
        peak_gain_spread_db=max(gains) - min(gains),
        f0_spread_hz=max(f0s) - min(f0s),
        max_phase_deviation_deg=max(deviations),
    )


def vctrl_sweep(p: DesignParams, vgrid: Sequence[float], fgrid: FrequencyGrid, z0: Optional[float] = None,
                iip3_dbm: Optional[float] = None, pdc_mw: Optional[float] = None) -> VctrlSweepResult:
    """
    Metrics per control voltage, with peak-gain and f0 spreads and the S21
    phase deviation from the 0 V entry (or the first entry) at its peak
    frequency.
    """
    return summarize_vctrl(vctrl_tables(p, vgrid, fgrid, z0), iip3_dbm, pdc_mw)


def corner_sweep(p: DesignParams, corners: Sequence[CornerFactors], fgrid: FrequencyGrid,
                 vctrl: float = 0.0, z0: Optional[float] = None) -> List[SweepMetrics]:
    """Metrics per process corner at a fixed control voltage."""
    if not corners:
        raise SweepError("corner list is empty")
    check_vctrl(vctrl)
    designs = [apply_corner(p, c) for c in corners]
    workers = config.worker_count()
    tables = _map(lambda d: frequency_sweep(d, vctrl, fgrid, z0, workers=1), designs, workers)
    return [extract_metrics(t) for t in tables]


def phase_deviation(a: float, b: float) -> float:
    """|a - b| in degrees, wrapped to [0, 180]."""
    return abs((a - b + 180.0) % 360.0 - 180.0)


def netlist_sweep(netlist: Netlist, grid: FrequencyGrid, z0: Optional[float] = None,
                  workers: Optional[int] = None) -> SweepTable:
    """
    S-parameters of an arbitrary 1- or 2-port netlist over a grid. NF is added
    when a noise source is marked as the input, observed as the short-circuit
    current at the last port.
    """
    z0 = float(config.DEFAULT_Z0 if z0 is None else z0)
    output = OutputSpec(kind="short_circuit_current", node=netlist.ports[-1].node) if netlist.ports else None
    noisy = output is not None and any(s.is_input for s in netlist.noise_sources)

    def point(f: float) -> SweepRow:
        try:
            s = port_parameters(netlist, f, "S", z0)
            nf = output_noise(netlist, output, f).noise_figure_db if noisy else None
        except RfssError as exc:
            exc.context.setdefault("frequency", float(f))
            raise
        return SweepRow(frequency=float(f), s=s, nf_db=nf)

    return SweepTable(rows=_map(point, list(grid.frequencies()), workers), z0=z0)
