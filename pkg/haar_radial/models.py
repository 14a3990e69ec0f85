from __future__ import annotations

from typing import Any

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from haar_radial.services.spectral import SpectralData


# =============================================
# MATRIX PAYLOAD
# =============================================
class MatrixPayload(BaseModel):
    """Complex matrix as {"rows", "cols", "data": [[re, im], ...]} in row-major order."""

    rows: int = Field(ge=1)
    cols: int = Field(ge=1)
    data: list[tuple[float, float]]

    @model_validator(mode="after")
    def _check_size(self) -> "MatrixPayload":
        if len(self.data) != self.rows * self.cols:
            raise ValueError(f"data has {len(self.data)} entries, expected {self.rows * self.cols}")
        return self

    @classmethod
    def from_array(cls, a: np.ndarray) -> "MatrixPayload":
        a = np.atleast_2d(np.asarray(a, dtype=np.complex128))
        return cls(
            rows=a.shape[0],
            cols=a.shape[1],
            data=[(float(z.real), float(z.imag)) for z in a.reshape(-1)],
        )

    def to_array(self) -> np.ndarray:
        flat = np.array([complex(re, im) for re, im in self.data], dtype=np.complex128)
        return flat.reshape(self.rows, self.cols)


# =============================================
# SPECTRAL RECORD
# =============================================
class SpectralRecord(BaseModel):
    n: int = Field(ge=1)
    m: int = Field(ge=1)
    t: list[tuple[float, float]]
    C: MatrixPayload
    U: MatrixPayload

    @model_validator(mode="after")
    def _check_shapes(self) -> "SpectralRecord":
        if len(self.t) != self.m:
            raise ValueError(f"t has {len(self.t)} points, expected m={self.m}")
        if (self.C.rows, self.C.cols) != (self.n, self.m):
            raise ValueError(f"C is {self.C.rows}x{self.C.cols}, expected {self.n}x{self.m}")
        if (self.U.rows, self.U.cols) != (self.n, self.n):
            raise ValueError(f"U is {self.U.rows}x{self.U.cols}, expected {self.n}x{self.n}")
        return self

    @classmethod
    def from_spectral(cls, sd: SpectralData) -> "SpectralRecord":
        return cls(
            n=sd.n,
            m=sd.m,
            t=[(float(z.real), float(z.imag)) for z in sd.t],
            C=MatrixPayload.from_array(sd.C),
            U=MatrixPayload.from_array(sd.U),
        )

    def to_spectral(self) -> SpectralData:
        """Raw coordinates; no canonicalization, so density can see boundary points such as t = -1."""
        t = np.array([complex(re, im) for re, im in self.t], dtype=np.complex128)
        return SpectralData(t=t, C=self.C.to_array(), U=self.U.to_array())


# =============================================
# REPORTS
# =============================================
class McReportModel(BaseModel):
    estimate: float
    std_error: float
    n_samples: int
    n_attempted: int
    n_rejected: int = 0
    rejected_by_reason: dict[str, int] = Field(default_factory=dict)
    effective_sample_size: float
    seed: int
    wall_time: float
    flags: list[str] = Field(default_factory=list)
    passed: bool
    details: dict[str, Any] = Field(default_factory=dict)

    @model_validator(mode="after")
    def _check_counts(self) -> "McReportModel":
        if self.n_samples + self.n_rejected != self.n_attempted:
            raise ValueError("accepted + rejected must equal attempted")
        return self


class StatisticResult(BaseModel):
    name: str
    haar_value: float
    haar_stderr: float
    mcmc_value: float
    mcmc_stderr: float
    z_score: float
    passed: bool


class PushforwardReport(BaseModel):
    n: int
    m: int
    seed: int
    n_samples: int
    chain_length: int
    mutation: str = "none"
    statistics: list[StatisticResult]
    rejected_by_reason: dict[str, int] = Field(default_factory=dict)
    acceptance_rates: dict[str, float] = Field(default_factory=dict)
    wall_time: float
    passed: bool


class RoundtripReport(BaseModel):
    n: int
    m: int
    seed: int
    n_attempted: int
    n_checked: int
    rejected_by_reason: dict[str, int] = Field(default_factory=dict)
    failures: int
    max_field_error: float
    max_charfn_error: float
    max_cross_path_error: float
    max_normalization_error: float
    perturbation: float = 0.0
    wall_time: float
    passed: bool


class AnalyticReport(BaseModel):
    n: int
    m: int
    seed: int
    realizations: int
    max_errors: dict[str, float]
    thresholds: dict[str, float]
    wall_time: float
    passed: bool


# =============================================
# ARTIFACT ENVELOPE
# =============================================
class Artifact(BaseModel):
    """Everything needed to reproduce ``payload``: package version, resolved settings and seed.
    No timestamp, so seeded runs are byte-identical."""

    version: str
    command: str
    config: dict[str, Any]
    seed: int | None = None
    payload: Any

    @field_validator("command")
    @classmethod
    def _non_empty(cls, v: str) -> str:
        if not v:
            raise ValueError("command must be non-empty")
        return v
