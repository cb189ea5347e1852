"""
Configuration module for the affine verifier.
Loads settings from environment variables and defines tolerance profiles.
"""
from pydantic import BaseModel, Field
from pydantic_settings import BaseSettings, SettingsConfigDict
from typing import Dict, List


class ToleranceProfile(BaseModel):
    """Named tolerances used by the verification checks."""

    name: str
    fd_tol: float = Field(..., gt=0)
    reconstruction_tol: float = Field(..., gt=0)
    codazzi_tol: float = Field(..., gt=0)
    symmetry_tol: float = Field(..., gt=0)
    sphere_tol: float = Field(..., gt=0)
    identity_tol: float = Field(..., gt=0)
    dual_tol: float = Field(..., gt=0)
    quadric_tol: float = Field(..., gt=0)
    metric_tol: float = Field(..., gt=0)
    horizontality_tol: float = Field(..., gt=0)
    mean_curvature_tol: float = Field(..., gt=0)
    lagrangian_tol: float = Field(..., gt=0)
    sasaki_tol: float = Field(..., gt=0)
    path_tol: float = Field(..., gt=0)
    duality_tol: float = Field(..., gt=0)
    homothety_tol: float = Field(..., gt=0)
    harm_tol: float = Field(..., gt=0)
    composed_harm_tol: float = Field(..., gt=0)
    block_tol: float = Field(..., gt=0)
    algebra_tol: float = Field(..., gt=0)
    boundary_tol: float = Field(..., gt=0)
    flow_tol: float = Field(..., gt=0)
    negative_control_floor: float = Field(..., gt=0)
    rank_floor: float = Field(..., gt=0)
    contact_floor_ratio: float = Field(..., gt=0)
    fd_noise_floor: float = Field(..., gt=0)


TOLERANCE_PROFILES: Dict[str, ToleranceProfile] = {
    "analytic": ToleranceProfile(
        name="analytic",
        fd_tol=1e-8,
        reconstruction_tol=1e-9,
        codazzi_tol=1e-7,
        symmetry_tol=1e-9,
        sphere_tol=1e-6,
        identity_tol=1e-5,
        dual_tol=1e-7,
        quadric_tol=1e-10,
        metric_tol=1e-8,
        horizontality_tol=1e-9,
        mean_curvature_tol=1e-6,
        lagrangian_tol=1e-8,
        sasaki_tol=1e-8,
        path_tol=1e-9,
        duality_tol=1e-8,
        homothety_tol=1e-7,
        harm_tol=1e-8,
        composed_harm_tol=1e-5,
        block_tol=1e-8,
        algebra_tol=1e-12,
        boundary_tol=1e-3,
        flow_tol=1e-6,
        negative_control_floor=1e-2,
        rank_floor=1e-8,
        contact_floor_ratio=0.5,
        fd_noise_floor=1e-5,
    ),
    "fd": ToleranceProfile(
        name="fd",
        fd_tol=1e-5,
        reconstruction_tol=1e-9,
        codazzi_tol=1e-7,
        symmetry_tol=1e-9,
        sphere_tol=1e-6,
        identity_tol=1e-5,
        dual_tol=1e-7,
        quadric_tol=1e-10,
        metric_tol=1e-8,
        horizontality_tol=1e-6,
        mean_curvature_tol=1e-6,
        lagrangian_tol=1e-8,
        sasaki_tol=1e-5,
        path_tol=1e-6,
        duality_tol=1e-8,
        homothety_tol=1e-7,
        harm_tol=1e-4,
        composed_harm_tol=1e-3,
        block_tol=1e-8,
        algebra_tol=1e-10,
        boundary_tol=1e-3,
        flow_tol=1e-6,
        negative_control_floor=1e-2,
        rank_floor=1e-8,
        contact_floor_ratio=0.5,
        fd_noise_floor=1e-5,
    ),
}


class Settings(BaseSettings):
    """Application settings loaded from environment variables."""

    # Logging
    LOG_LEVEL: str = "INFO"

    # Database Configuration
    DATABASE_URL: str = "sqlite:///./verification_ledger.db"

    # API Configuration
    API_V1_PREFIX: str = "/api/v1"
    ALLOW_ORIGINS: str = "http://localhost:3000,http://localhost:8000"

    # Server Configuration
    # Binding to 0.0.0.0 is intentional for containerized deployment
    HOST: str = "0.0.0.0"  # nosec B104
    PORT: int = 8001

    # Numerics
    FD_STEP: float = 1e-3
    SINGULAR_TOL: float = 1e-10
    QUAD_TOL: float = 1e-8
    QUADRATURE_NODES: int = 16

    # Verification suite
    DEFAULT_GRID: int = 21
    MAX_SAMPLE_POINTS: int = 25
    DEFAULT_SEED: int = 0
    DEFAULT_TOL_PROFILE: str = "fd"
    WORKERS: int = 4
    S_MAX: float = 10.0
    REPORT_SCHEMA_VERSION: str = "1.0"
    RECORD_TIMINGS: bool = False

    model_config = SettingsConfigDict(
        env_file=".env",
        case_sensitive=True,
        extra="ignore"
    )

    def __init__(self, **values):
        super().__init__(**values)
        if self.FD_STEP <= 0 or self.SINGULAR_TOL <= 0 or self.QUAD_TOL <= 0:
            raise ValueError(
                "FD_STEP, SINGULAR_TOL and QUAD_TOL must be strictly positive"
            )
        if self.DEFAULT_GRID < 5:
            raise ValueError(f"DEFAULT_GRID must be at least 5, got {self.DEFAULT_GRID}")
        if self.QUADRATURE_NODES < 2:
            raise ValueError(
                f"QUADRATURE_NODES must be at least 2, got {self.QUADRATURE_NODES}"
            )
        if self.DEFAULT_TOL_PROFILE not in TOLERANCE_PROFILES:
            raise ValueError(
                f"DEFAULT_TOL_PROFILE must be one of {sorted(TOLERANCE_PROFILES)}, "
                f"got {self.DEFAULT_TOL_PROFILE!r}"
            )

    @property
    def cors_origins(self) -> List[str]:
        """Parse ALLOW_ORIGINS into a list."""
        return [origin.strip() for origin in self.ALLOW_ORIGINS.split(",")]

    def tolerance_profile(self, name: str = None) -> ToleranceProfile:
        """
        Look up a tolerance profile by name.

        Args:
            name: Profile name, defaults to DEFAULT_TOL_PROFILE

        Returns:
            The matching tolerance profile
        """
        profile_name = name or self.DEFAULT_TOL_PROFILE
        if profile_name not in TOLERANCE_PROFILES:
            raise ValueError(
                f"Unknown tolerance profile {profile_name!r}; "
                f"expected one of {sorted(TOLERANCE_PROFILES)}"
            )
        return TOLERANCE_PROFILES[profile_name]


# Global settings instance
settings = Settings()
