"""
Report Service - assembles sweep results into CSV tables and the JSON
report shared by the command line and the HTTP API.
"""

import csv
import io
import json
import logging
from typing import Any, Dict, List, Optional, Sequence, Tuple

from app.models.design import SUPPLY_V, DesignParams
from app.models.network import FrequencyGrid, SweepMetrics, SweepTable
from app.models.schemas import DesignFile, ReportResponse
from app.services.lna import dc_block_check, iip3_from_p1db, match_residuals, ro_vg
from app.services.reference_design import reference_design
from app.services.sweep import summarize_vctrl, vctrl_tables

logger = logging.getLogger(__name__)

METRIC_COLUMNS = [
    "vctrl_v",
    "corner",
    "f0_ghz",
    "peak_gain_db",
    "bw_3db_ghz",
    "bw_low_ghz",
    "bw_high_ghz",
    "bw_clipped_low",
    "bw_clipped_high",
    "s11_min_db",
    "s11_min_freq_ghz",
    "matching_band_ghz",
    "nf_at_f0_db",
    "phase_at_f0_deg",
    "phase_deviation_deg",
]
NF_COLUMNS = ["vctrl_v", "frequency_ghz", "nf_db"]


def _fmt(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def _ghz(value: Optional[float]) -> Optional[float]:
    return None if value is None else value / 1e9


def _csv(header: List[str], rows: List[List[Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def metrics_csv(entries: Sequence[SweepMetrics], include_fom: Optional[bool] = None) -> str:
    """One row per sweep case; the fom_db column only appears when any entry has a FoM."""
    if include_fom is None:
        include_fom = any(e.fom_db is not None for e in entries)
    header = METRIC_COLUMNS + (["fom_db"] if include_fom else [])
    rows = []
    for e in entries:
        row = [
            e.vctrl, e.corner, _ghz(e.f0_hz), e.peak_gain_db, _ghz(e.bw_3db_hz), _ghz(e.bw_low_hz),
            _ghz(e.bw_high_hz), e.bw_clipped_low, e.bw_clipped_high, e.s11_min_db, _ghz(e.s11_min_freq_hz),
            _ghz(e.matching_band_hz), e.nf_at_f0_db, e.phase_at_f0_deg, e.phase_deviation_deg,
        ]
        if include_fom:
            row.append(e.fom_db)
        rows.append(row)
    return _csv(header, rows)


def nf_csv(tables: Sequence[SweepTable]) -> str:
    rows = []
    for t in tables:
        for r in t.rows:
            rows.append([t.vctrl, r.frequency / 1e9, r.nf_db])
    return _csv(NF_COLUMNS, rows)


def resolve_design(params: DesignFile) -> DesignParams:
    return params.design if params.design is not None else reference_design(params.match_f0_hz)


def effective_iip3(params: DesignFile) -> Optional[float]:
    if params.iip3_dbm is not None:
        return params.iip3_dbm
    if params.p1db_dbm is not None:
        return iip3_from_p1db(params.p1db_dbm)
    return None


def report_header(p: DesignParams, params: DesignFile, vgrid: Sequence[float], grid: FrequencyGrid,
                  z0: float) -> Dict[str, Any]:
    """Design echo, DC-block check at full gain reduction and input-match residuals."""
    check = dc_block_check(p.c0, ro_vg(SUPPLY_V, p.vg_device), params.match_f0_hz)
    residuals = match_residuals(p.gm1, p.cgs, p.k, params.match_f0_hz, p.rs, p.lg, p.ls)
    return {
        "design": p.model_dump(mode="json"),
        "match_f0_hz": params.match_f0_hz,
        "dc_block": {"corner_hz": check.corner_hz, "ratio": check.ratio, "passed": check.passed},
        "match_residuals": residuals._asdict(),
        "vctrl": list(vgrid),
        "grid": grid.model_dump(mode="json"),
        "z0": z0,
        "iip3_dbm": effective_iip3(params),
        "pdc_mw": params.pdc_mw,
    }


def build_report(params: DesignFile, vgrid: Sequence[float], grid: FrequencyGrid,
                 z0: float) -> Tuple[ReportResponse, List[SweepTable]]:
    p = resolve_design(params)
    tables = vctrl_tables(p, vgrid, grid, z0)
    result = summarize_vctrl(tables, effective_iip3(params), params.pdc_mw)
    logger.info("report: %d vctrl cases, peak-gain spread %.2f dB", len(tables), result.peak_gain_spread_db)
    return ReportResponse(header=report_header(p, params, vgrid, grid, z0), result=result), tables


def report_json(report: ReportResponse) -> str:
    return json.dumps(report.model_dump(mode="json"), indent=2, sort_keys=True) + "\n"
