"""
Result types: AC solutions, network parameters, noise reports and sweep data.
Array-holding results are frozen dataclasses; serialisable summaries are pydantic.
"""

from dataclasses import dataclass
from typing import Dict, List, Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

ParamKind = Literal["S", "Y", "Z"]


@dataclass(frozen=True)
class AcSolution:
    frequency: float
    node_voltages: Dict[str, complex]
    branch_currents: Dict[str, complex]
    residual: float = 0.0


@dataclass(frozen=True)
class TwoPort:
    """n x n network parameters (n is 1 or 2) tagged with their kind."""
    kind: str
    matrix: np.ndarray
    z0: Optional[float] = None

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"network matrix must be square, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("network matrix has non-finite entries")
        if self.kind not in ("S", "Y", "Z"):
            raise ValueError(f"unknown parameter kind {self.kind!r}")
        if self.kind == "S" and (self.z0 is None or self.z0 <= 0):
            raise ValueError("S-parameters need a positive reference impedance")
        object.__setattr__(self, "matrix", m)

    @property
    def nports(self) -> int:
        return self.matrix.shape[0]

    def __getitem__(self, idx):
        return self.matrix[idx]


@dataclass(frozen=True)
class NoiseReport:
    frequency: float
    contributions: Dict[str, float]
    total_output_psd: float
    source_contribution: float
    noise_factor: float
    noise_figure_db: float


@dataclass(frozen=True)
class SweepRow:
    frequency: float
    s: TwoPort
    nf_db: Optional[float] = None


@dataclass(frozen=True)
class SweepTable:
    rows: List[SweepRow]
    vctrl: Optional[float] = None
    corner: Optional[str] = None
    z0: float = 50.0

    @property
    def frequencies(self) -> np.ndarray:
        return np.array([r.frequency for r in self.rows], dtype=float)

    def s_matrices(self) -> np.ndarray:
        return np.array([r.s.matrix for r in self.rows], dtype=complex)

    def nf_db(self) -> np.ndarray:
        return np.array([np.nan if r.nf_db is None else r.nf_db for r in self.rows], dtype=float)


class FrequencyGrid(BaseModel):
    model_config = ConfigDict(frozen=True)

    start: float = Field(..., gt=0, description="Hz")
    stop: float = Field(..., gt=0, description="Hz")
    points: int = Field(..., ge=2)
    spacing: Literal["linear", "log"] = "linear"

    @model_validator(mode="after")
    def _ordered(self):
        if not self.start < self.stop:
            raise ValueError(f"grid start {self.start} must be below stop {self.stop}")
        return self

    def frequencies(self) -> np.ndarray:
        if self.spacing == "log":
            f = np.geomspace(self.start, self.stop, self.points)
        else:
            f = np.linspace(self.start, self.stop, self.points)
        f[0], f[-1] = self.start, self.stop
        return f


class SweepMetrics(BaseModel):
    """Scalar figures extracted from one frequency sweep."""
    model_config = ConfigDict(frozen=True)

    f0_hz: float
    peak_gain_db: float
    bw_3db_hz: float
    bw_low_hz: float
    bw_high_hz: float
    bw_clipped_low: bool = False
    bw_clipped_high: bool = False
    s11_min_db: float
    s11_min_freq_hz: float
    matching_band_hz: float = 0.0
    match_low_hz: Optional[float] = None
    match_high_hz: Optional[float] = None
    match_clipped: bool = False
    nf_at_f0_db: Optional[float] = None
    phase_at_f0_deg: float
    phase_deviation_deg: Optional[float] = None
    fom_db: Optional[float] = None
    vctrl: Optional[float] = None
    corner: Optional[str] = None


class VctrlSweepResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    entries: List[SweepMetrics]
    reference_frequency_hz: float
    peak_gain_spread_db: float
    f0_spread_hz: float
    max_phase_deviation_deg: float = Field(default=0.0)
