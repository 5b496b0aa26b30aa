"""
Pydantic schemas for request and response validation.
Shared by the HTTP API and the command line (parameter files).
"""

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, model_validator

from app.models.design import DesignParams
from app.models.netlist import Netlist
from app.models.network import FrequencyGrid, VctrlSweepResult


def default_grid() -> FrequencyGrid:
    return FrequencyGrid(start=30e9, stop=50e9, points=81)


class FomRequest(BaseModel):
    """
    Figure-of-merit inputs in table units. IIP3 may be derived from P1dB.
    """
    gain_db: float = Field(..., description="Gain in dB")
    bw_3db_ghz: float = Field(..., gt=0, description="3-dB bandwidth in GHz")
    f0_ghz: float = Field(..., gt=0, description="Centre frequency in GHz")
    iip3_dbm: Optional[float] = Field(default=None, description="Input IP3 in dBm")
    p1db_dbm: Optional[float] = Field(default=None, description="Input P1dB in dBm, used when IIP3 is absent")
    nf_db: float = Field(..., description="Noise figure in dB")
    pdc_mw: float = Field(..., gt=0, description="DC power in mW")

    @model_validator(mode="after")
    def _linearity(self):
        if self.iip3_dbm is None and self.p1db_dbm is None:
            raise ValueError("one of iip3_dbm or p1db_dbm is required")
        return self

    class Config:
        json_schema_extra = {
            "example": {
                "gain_db": 15,
                "bw_3db_ghz": 9.8,
                "f0_ghz": 39.75,
                "iip3_dbm": 1.2,
                "nf_db": 5.5,
                "pdc_mw": 4.5
            }
        }


class FomResponse(BaseModel):
    fom_db: float = Field(..., description="Figure of merit in dB")
    iip3_dbm: float = Field(..., description="IIP3 used in the expression")
    iip3_estimated: bool = Field(..., description="True when IIP3 was derived from P1dB")


class DesignMatchRequest(BaseModel):
    """Electricals for the coupled Lg/Ls input-match synthesis (SI units)."""
    gm1: float = Field(default=20e-3, gt=0, description="Input transconductance (S)")
    cgs: float = Field(default=20e-15, gt=0, description="Gate-source capacitance (F)")
    k: float = Field(default=0.3, ge=0, lt=1, description="Lg/Ls coupling coefficient")
    f0_hz: float = Field(default=40e9, gt=0, description="Match frequency (Hz)")
    rs: float = Field(default=50.0, gt=0, description="Source resistance (ohms)")


class DesignMatchResponse(BaseModel):
    lg_h: float
    ls_h: float
    mutual_h: float
    residual_real_part: float
    residual_resonance: float


class SParamPoint(BaseModel):
    frequency_hz: float
    s: List[List[List[float]]] = Field(..., description="Row-major matrix of [re, im] pairs")


class AnalyzeRequest(BaseModel):
    netlist: Netlist
    grid: FrequencyGrid = Field(default_factory=default_grid)
    z0: Optional[float] = Field(default=None, gt=0)


class AnalyzeResponse(BaseModel):
    z0: float
    points: List[SParamPoint]
    nf_db: Optional[List[float]] = None


class DesignFile(BaseModel):
    """
    Parameter file for report and sweep runs. The reference design at
    match_f0_hz is used when `design` is omitted.
    """
    design: Optional[DesignParams] = None
    match_f0_hz: float = Field(default=40e9, gt=0)
    iip3_dbm: Optional[float] = None
    p1db_dbm: Optional[float] = None
    pdc_mw: Optional[float] = Field(default=None, gt=0)


class ReportRequest(DesignFile):
    vctrl: List[float] = Field(default_factory=lambda: [0.0, 0.7])
    grid: FrequencyGrid = Field(default_factory=default_grid)
    z0: Optional[float] = Field(default=None, gt=0)


class ReportResponse(BaseModel):
    header: Dict[str, Any]
    result: VctrlSweepResult


class HealthCheckResponse(BaseModel):
    """
    Response schema for health check endpoint.
    """
    status: str = Field(..., description="Service health status")
    app: str = Field(..., description="Application name")
    version: str = Field(..., description="Application version")

    class Config:
        json_schema_extra = {
            "example": {
                "status": "healthy",
                "app": "RFSS",
                "version": "1.0.0"
            }
        }
