"""
Analysis routes - figure of merit, input-match synthesis, netlist
S-parameters and the variable-gain LNA report.
"""

from fastapi import APIRouter, Depends, HTTPException, status
from starlette.concurrency import run_in_threadpool

from app.config import config
from app.errors import InvalidNetlistError, InvalidParamsError, PortCountError, RfssError
from app.middleware.auth import verify_api_key
from app.models.design import FomInputs
from app.models.schemas import (
    AnalyzeRequest,
    AnalyzeResponse,
    DesignMatchRequest,
    DesignMatchResponse,
    FomRequest,
    FomResponse,
    ReportRequest,
    ReportResponse,
    SParamPoint,
)
from app.services.lna import design_input_match, fom, iip3_from_p1db, match_residuals
from app.services.netlist import require_valid
from app.services.report import build_report
from app.services.sweep import netlist_sweep

# All routes in this router require the API key when one is configured
router = APIRouter(prefix="/api", tags=["analysis"], dependencies=[Depends(verify_api_key)])


def _http_error(exc: RfssError) -> HTTPException:
    if isinstance(exc, (InvalidParamsError, InvalidNetlistError, PortCountError)):
        code = status.HTTP_422_UNPROCESSABLE_ENTITY
    else:
        code = status.HTTP_400_BAD_REQUEST
    return HTTPException(status_code=code, detail=exc.to_dict())


@router.post("/fom", response_model=FomResponse)
async def figure_of_merit(request: FomRequest):
    """
    Figure of merit of an LNA operating point.

    Gain is read as a power ratio; IIP3 falls back to P1dB + 9.6 dB.
    """
    estimated = request.iip3_dbm is None
    iip3 = iip3_from_p1db(request.p1db_dbm) if estimated else request.iip3_dbm
    try:
        value = fom(FomInputs(gain_db=request.gain_db, bw_3db_ghz=request.bw_3db_ghz, f0_ghz=request.f0_ghz,
                              iip3_dbm=iip3, nf_db=request.nf_db, pdc_mw=request.pdc_mw))
    except RfssError as e:
        raise _http_error(e)
    return FomResponse(fom_db=value, iip3_dbm=iip3, iip3_estimated=estimated)


@router.post("/design-match", response_model=DesignMatchResponse)
async def design_match(request: DesignMatchRequest):
    """Lg/Ls sizing for a real source match at f0 with coupled inductors."""
    try:
        lg, ls = design_input_match(request.gm1, request.cgs, request.k, request.f0_hz, request.rs)
    except RfssError as e:
        raise _http_error(e)
    res = match_residuals(request.gm1, request.cgs, request.k, request.f0_hz, request.rs, lg, ls)
    return DesignMatchResponse(
        lg_h=lg,
        ls_h=ls,
        mutual_h=request.k * (lg * ls) ** 0.5,
        residual_real_part=res.real_part,
        residual_resonance=res.resonance,
    )


@router.post("/analyze", response_model=AnalyzeResponse)
async def analyze(request: AnalyzeRequest):
    """S-parameters of a 1- or 2-port netlist over a frequency grid."""
    z0 = request.z0 or config.DEFAULT_Z0
    try:
        netlist = require_valid(request.netlist)
        table = await run_in_threadpool(netlist_sweep, netlist, request.grid, z0)
    except RfssError as e:
        raise _http_error(e)

    points = [
        SParamPoint(
            frequency_hz=row.frequency,
            s=[[[float(v.real), float(v.imag)] for v in line] for line in row.s.matrix],
        )
        for row in table.rows
    ]
    nf = [row.nf_db for row in table.rows]
    return AnalyzeResponse(z0=z0, points=points, nf_db=nf if all(v is not None for v in nf) else None)


@router.post("/report", response_model=ReportResponse)
async def report(request: ReportRequest):
    """Per-vctrl metrics of the two-stage LNA with the design header."""
    z0 = request.z0 or config.DEFAULT_Z0
    try:
        result, _ = await run_in_threadpool(build_report, request, request.vctrl, request.grid, z0)
    except RfssError as e:
        raise _http_error(e)
    return result
