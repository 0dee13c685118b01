"""
Pydantic models for inputs, sampling parameters and reports.
"""
import math
from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator

from overlap.config import settings

CodeId = Literal["direct", "dual_rail", "three_qubit", "bosonic", "four_qubit_approx"]

CODE_IDS: tuple[str, ...] = ("direct", "dual_rail", "three_qubit", "bosonic", "four_qubit_approx")


class BlochInput(BaseModel):
    """Logical input cos(w/2)|0> + e^{i theta} sin(w/2)|1>."""

    model_config = ConfigDict(frozen=True)

    w: float = Field(..., ge=0.0, le=math.pi, description="Polar angle")
    theta: float = Field(default=0.0, ge=0.0, lt=2 * math.pi, description="Azimuth")


class CatInput(BaseModel):
    """
    Coherent-state input (sqrt(w)|-alpha> + e^{i theta} sqrt(1-w)|alpha>) / sqrt(N(alpha)).

    The amplitude alpha belongs to the code or pipeline the input is sent through.
    The azimuth covers the full circle so that antipodal partners stay in the alphabet.
    """

    model_config = ConfigDict(frozen=True)

    w: float = Field(..., ge=0.0, le=1.0, description="Weight of |-alpha>")
    theta: float = Field(default=0.0, ge=0.0, lt=2 * math.pi, description="Relative phase")


class SphereSampling(BaseModel):
    """How the Bloch sphere average is taken."""

    scheme: Literal["quadrature", "monte_carlo"] = "quadrature"
    n_points: int = Field(
        default_factory=lambda: settings.quadrature_nodes ** 2,
        ge=1,
        description="Total number of sphere points (quadrature uses a square product grid)"
    )
    seed: int = Field(default=0, ge=0, lt=2 ** 64, description="Monte Carlo seed")

    model_config = ConfigDict(
        frozen=True,
        json_schema_extra={
            "example": {"scheme": "quadrature", "n_points": 1024, "seed": 0}
        }
    )


class OverlapResult(BaseModel):
    """Sphere-averaged codeword overlap."""

    value: float = Field(..., ge=0.0, le=1.0)
    stderr: Optional[float] = Field(None, ge=0.0, description="Monte Carlo only")
    n_points: int = Field(..., ge=1)


class CatCode(BaseModel):
    """Coherent-state repetition code over n_modes modes (1 means direct transmission)."""

    model_config = ConfigDict(frozen=True)

    n_modes: int = Field(default=1, ge=1)
    alpha: float = Field(..., ge=0.0, description="Coherent amplitude, real and nonnegative")

    @field_validator("n_modes")
    @classmethod
    def validate_odd(cls, v: int) -> int:
        """Majority voting needs an odd number of modes."""
        if v % 2 == 0:
            raise ValueError(f"n_modes must be odd, got {v}")
        return v

    @property
    def code_id(self) -> str:
        return "direct" if self.n_modes == 1 else f"rep{self.n_modes}"


class ConcordanceReport(BaseModel):
    """Agreement between the best code by overlap and the best code by concurrence."""

    fraction: float = Field(..., ge=0.0, le=1.0)
    n_points: int
    disagreements: List[float] = Field(default_factory=list, description="Parameters that disagree")


class NogoStratum(BaseModel):
    """Margin statistics F' - F over one group of samples."""

    samples: int = 0
    min_margin: Optional[float] = None
    max_abs_margin: Optional[float] = None
    violations: int = 0


class NogoReport(BaseModel):
    """Outcome of the randomized Gaussian no-go check."""

    samples: int
    seed: int
    kind: str
    min_margin: float
    violations: int
    by_det: Dict[str, NogoStratum]
    by_kind: Dict[str, NogoStratum]
