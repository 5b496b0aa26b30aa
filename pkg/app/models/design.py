"""
Design-parameter models for the variable-gain LNA small-signal model.
"""

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.config import config

# Supply rail; also the upper end of the gain-control range.
SUPPLY_V = 0.7
VG_ANCHOR_OHMS = 45.0


def softplus_overdrive(vctrl: float, vth: float, blend: float) -> float:
    """Smooth max(vctrl - vth, 0) with transition width `blend` volts."""
    x = (vctrl - vth) / blend
    if x > 30.0:
        return (vctrl - vth) + blend * math.log1p(math.exp(-x))
    return blend * math.log1p(math.exp(x))


class RoVgCalibration(BaseModel):
    """Small-signal resistance law of the gain-control transistor."""
    model_config = ConfigDict(frozen=True)

    vth: float = Field(default=0.41, description="Threshold after forward body bias (V)")
    beta: float = Field(default=0.0765594, gt=0, description="Triode conductance slope (S/V)")
    r_off: float = Field(default=50e3, gt=0, description="Plateau below threshold (ohms)")
    blend: float = Field(default=0.02, gt=0, description="Threshold blend width (V)")

    @classmethod
    def calibrate(cls, vth: float = 0.41, r_off: float = 50e3, anchor_ohms: float = VG_ANCHOR_OHMS,
                  anchor_vctrl: float = SUPPLY_V, blend: float = 0.02) -> "RoVgCalibration":
        """Solve beta so that the model passes exactly through the anchor point."""
        vov = softplus_overdrive(anchor_vctrl, vth, blend)
        g_needed = 1.0 / anchor_ohms - 1.0 / r_off
        if vov <= 0 or g_needed <= 0:
            raise ValueError("anchor must lie above threshold and below the off-state plateau")
        return cls(vth=vth, beta=g_needed / vov, r_off=r_off, blend=blend)


class BodyBiasParams(BaseModel):
    """Body-effect parameters of the threshold-voltage law."""
    model_config = ConfigDict(frozen=True)

    vt0: float = Field(default=0.46, description="Zero-bias threshold (V)")
    gamma_body: float = Field(default=0.12676711, ge=0, description="Body-effect coefficient (sqrt V)")
    phi_f: float = Field(default=0.40, gt=0, description="Bulk Fermi potential (V)")


class CornerFactors(BaseModel):
    """Process-corner scaling applied to the device parameters."""
    model_config = ConfigDict(frozen=True)

    name: Literal["TT", "FF", "SS"] = "TT"
    gm_scale: float = Field(default=1.0, gt=0)
    cgs_scale: float = Field(default=1.0, gt=0)
    vt_shift: float = Field(default=0.0, description="Threshold shift (V)")


class DesignParams(BaseModel):
    """
    All symbols of the LNA small-signal model. Units are SI throughout:
    siemens, farads, henries, ohms, kelvin.
    """
    model_config = ConfigDict(frozen=True)

    gm1: float = Field(default=20e-3, ge=0)
    gm2: float = Field(default=20e-3, ge=0)
    cgs: float = Field(default=20e-15, gt=0)
    lg: float = Field(..., ge=0)
    ls: float = Field(..., ge=0)
    k: float = Field(default=0.3)
    c0: float = Field(default=0.75e-12, gt=0)
    ro1: float = Field(default=2e3, gt=0)
    ro2: float = Field(default=2e3, gt=0)
    rs: float = Field(default=50.0, ge=0)
    gamma_noise: float = Field(default=1.0, ge=0)
    eta: float = Field(default=1.0, ge=0)
    temperature: float = Field(default_factory=lambda: config.NOISE_TEMPERATURE, gt=0)
    rd: float = Field(default=200.0, gt=0, description="Drain load resistance of each stage")
    ld: float = Field(default=791.57e-12, gt=0, description="Interstage tank inductor")
    c_couple: float = Field(default=10e-12, gt=0, description="Interstage DC-block capacitor")
    vg_device: RoVgCalibration = Field(default_factory=RoVgCalibration.calibrate)
    body: BodyBiasParams = Field(default_factory=BodyBiasParams)
    corner_scale: CornerFactors = Field(default_factory=CornerFactors)

    @model_validator(mode="after")
    def _coupling_range(self):
        if not 0.0 <= self.k < 1.0:
            raise ValueError(f"coupling coefficient k must satisfy 0 <= k < 1, got {self.k}")
        return self

    @property
    def mutual(self) -> float:
        return self.k * math.sqrt(self.lg * self.ls)

    @property
    def total_loop_inductance(self) -> float:
        return self.lg + self.ls + 2.0 * self.mutual

    def resonance_frequency(self) -> float:
        """Series resonance of Cgs with Lg + Ls + 2M."""
        return 1.0 / (2.0 * math.pi * math.sqrt(self.cgs * self.total_loop_inductance))


class FomInputs(BaseModel):
    """Inputs of the figure-of-merit expression, in the units the table uses."""
    model_config = ConfigDict(frozen=True)

    gain_db: float
    bw_3db_ghz: float = Field(..., gt=0)
    f0_ghz: float = Field(..., gt=0)
    iip3_dbm: float
    nf_db: float
    pdc_mw: float = Field(..., gt=0)


class PublishedRow(BaseModel):
    """One row of the published comparison table, in table units."""
    model_config = ConfigDict(frozen=True)

    label: str
    band_low_ghz: float
    band_high_ghz: float
    f0_ghz: float
    gain_db: float
    nf_db: float
    iip3_dbm: float
    p1db_dbm: float
    supply_v: float
    pdc_mw: float
    printed_fom_db: float

    @property
    def bw_3db_ghz(self) -> float:
        return self.band_high_ghz - self.band_low_ghz

    def fom_inputs(self) -> FomInputs:
        return FomInputs(gain_db=self.gain_db, bw_3db_ghz=self.bw_3db_ghz, f0_ghz=self.f0_ghz,
                         iip3_dbm=self.iip3_dbm, nf_db=self.nf_db, pdc_mw=self.pdc_mw)
