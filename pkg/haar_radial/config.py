from functools import lru_cache
from typing import Literal

from pydantic_settings import BaseSettings, SettingsConfigDict


class Settings(BaseSettings):
    # Certification thresholds
    tol_unitarity: float = 1e-10
    tol_hermitian: float = 1e-10
    tol_singular: float = 1e-12  # smallest singular value cutoff for inversions
    tol_degenerate: float = 1e-8  # general-position margins (unit-circle δ, first coordinates, ...)
    tol_eig_gap: float = 1e-8
    tol_boundary: float = 1e-10  # ordering chart: ties and arg t = 0
    tol_certify: float = 1e-8  # smallest singular value of χ(t_k)+1 at an extracted point

    # Monte Carlo execution
    threads: int = 1
    chunk_size: int = 10_000
    importance_scale: float | None = None  # None = pilot-tuned over PILOT_SCALES
    density_reading: Literal["m", "n"] = "m"

    log_level: str = "INFO"

    model_config = SettingsConfigDict(
        env_prefix="HAAR_RADIAL_",
        env_file=".env",
        extra="ignore",  # Allow unknown env vars without crashing
        validate_assignment=True,
    )


@lru_cache()
def get_settings() -> Settings:
    return Settings()


def apply_overrides(**updates) -> Settings:
    """Set fields on the cached settings (CLI flags); None values are skipped."""
    settings = get_settings()
    for key, value in updates.items():
        if value is not None:
            setattr(settings, key, value)
    return settings
