"""
Pydantic schemas for run configuration files and JSON artifacts.
"""
from datetime import datetime
from fractions import Fraction
from typing import Dict, List, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from swclock.clock_model import ClockConfig, build_config
from swclock.utils.rationals import format_rational, parse_rational


class ClockConfigRequest(BaseModel):
    """JSON run configuration as read from --config."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    n: int = Field(..., ge=2, description="Inverse relative accuracy T/tau")
    m: int = Field(1, ge=1, description="Dial-length multiplier")
    T_seconds: float = Field(..., gt=0, description="Running time in seconds")
    M_kg: Optional[float] = Field(None, gt=0, description="Mass of the clock bodies")
    phi: str = Field("1/2", description="Phase of the first hand scattering, 'p/q'")
    recorder_x: Optional[str] = Field(None, description="Recorder position in c*tau, 'p/q'")
    seed: Optional[int] = Field(None, ge=0, description="Monte-Carlo seed")

    @field_validator("phi", "recorder_x", mode="before")
    @classmethod
    def validate_rational(cls, v):
        """Accept integers or 'p/q' strings; reject floats."""
        if v is None:
            return v
        if isinstance(v, float):
            raise ValueError("Rational fields must be 'p/q' strings, not floats")
        return format_rational(parse_rational(v))

    def to_config(self) -> ClockConfig:
        return build_config(
            n=self.n,
            m=self.m,
            T=self.T_seconds,
            M=self.M_kg,
            phi=Fraction(self.phi),
            recorder_x=None if self.recorder_x is None else Fraction(self.recorder_x),
        )


class McSummary(BaseModel):
    """Monte-Carlo summary artifact (times in seconds)."""

    n: int
    m: int
    samples: int
    seed: int
    err_mean: float
    err_std: float
    err_std_over_tau: float
    pairing_flips: int


class MassBoundResponse(BaseModel):
    T_seconds: float
    tau_seconds: float
    two_ell_meters: float
    mass_bound_kg: float


class RunManifest(BaseModel):
    """Index of the files written by one CLI run."""

    subcommand: str
    config: Dict = Field(default_factory=dict)
    outputs: List[str] = Field(default_factory=list)
    tool_version: str
    timestamp: datetime
