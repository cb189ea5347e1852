"""
Pydantic schemas for request/response validation and the report format.
"""
from pydantic import BaseModel, Field, ConfigDict
from typing import Optional, List, Dict, Any
from datetime import datetime
from uuid import UUID


VERDICT_PATTERN = "^(pass|fail|expected-fail|error)$"


# Report Schemas
class CheckResult(BaseModel):
    """Outcome of one named check."""
    name: str = Field(..., max_length=255)
    group: str = Field(..., max_length=64)
    verdict: str = Field(..., pattern=VERDICT_PATTERN)
    residual: Optional[float] = None
    tol: float
    comparison: str = Field(default="le", pattern="^(le|ge)$")
    expectation: str = Field(default="pass", pattern="^(pass|fail)$")
    provenance: str = Field(default="analytic", pattern="^(analytic|fd)$")
    seconds: float = 0.0
    message: Optional[str] = None

    model_config = ConfigDict(from_attributes=True)


class ReportMeta(BaseModel):
    """Inputs that fully determine a report."""
    schema_version: str
    example: str
    n: int = Field(..., ge=1)
    mode: str = Field(..., pattern="^(analytic|fd)$")
    grid: int = Field(..., ge=2)
    step: float = Field(..., gt=0)
    tol_profile: str
    seed: int
    s_max: float = Field(..., gt=0)
    rays: int = Field(..., ge=1)
    params: Dict[str, float] = Field(default_factory=dict)
    checks_filter: Optional[List[str]] = None
    grid_nodes: Optional[int] = None
    samples: Optional[int] = None
    heavy_samples: Optional[int] = None
    quadric_points: Optional[int] = None


class Report(BaseModel):
    """Verification report of one example."""
    meta: ReportMeta
    checks: List[CheckResult] = Field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.verdict in ("pass", "expected-fail") for check in self.checks)

    def counts(self) -> Dict[str, int]:
        tally = {"pass": 0, "fail": 0, "expected-fail": 0, "error": 0}
        for check in self.checks:
            tally[check.verdict] += 1
        return tally


# Example Schemas
class ExampleManifest(BaseModel):
    """Expected properties of a registered example."""
    name: str
    n: int
    mode: str
    groups: List[str]
    cone: Optional[str] = None
    box: List[List[float]]
    affine_sphere: bool = False
    sphere_type: Optional[str] = None
    maximal: bool = False
    harmonic: bool = False
    pseudoflat: bool = False
    period: Optional[float] = None


class ExampleSummary(BaseModel):
    """Registry entry with its supported dimensions."""
    name: str
    default_n: int
    min_n: int
    max_n: int


# Verification Run Schemas
class VerificationRequest(BaseModel):
    """Schema for requesting a verification run."""
    example: str = Field(..., max_length=64)
    n: Optional[int] = Field(None, ge=1, le=4)
    grid: Optional[int] = Field(None, ge=5, le=101)
    tol_profile: Optional[str] = Field(None, pattern="^(analytic|fd)$")
    seed: int = 0
    checks: Optional[List[str]] = None
    params: Dict[str, float] = Field(default_factory=dict)
    s_max: Optional[float] = Field(None, gt=0)
    rays: Optional[int] = Field(None, ge=1, le=256)


class CheckRecordResponse(BaseModel):
    """Schema for a persisted check result."""
    id: UUID
    name: str
    group: str
    verdict: str
    residual: Optional[float] = None
    tol: float
    comparison: str
    expectation: str
    provenance: str
    message: Optional[str] = None

    model_config = ConfigDict(from_attributes=True)


class VerificationRunResponse(BaseModel):
    """Schema for a persisted verification run."""
    id: UUID
    example: str
    n: int
    mode: str
    tol_profile: str
    seed: int
    passed: bool
    pass_count: int
    fail_count: int
    expected_fail_count: int
    error_count: int
    meta: Dict[str, Any] = Field(default_factory=dict)
    created_at: datetime

    model_config = ConfigDict(from_attributes=True)


class VerificationRunDetail(VerificationRunResponse):
    """Persisted run with its check records."""
    checks: List[CheckRecordResponse] = Field(default_factory=list)


class VerificationResponse(BaseModel):
    """Fresh report plus the id it was recorded under."""
    run_id: UUID
    passed: bool
    report: Report
