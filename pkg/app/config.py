from pydantic_settings import BaseSettings, SettingsConfigDict
from pydantic import Field, field_validator
from typing import Optional
from functools import lru_cache
from enum import Enum


class LogLevel(str, Enum):
    """Valid logging levels"""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class Settings(BaseSettings):
    """Solver defaults

    Values come from environment variables or a .env file and are the
    lowest-priority layer: a ``--config`` file overrides them and explicit
    command-line flags override both.
    """

    # Precision
    RPM_PRECISION: Optional[int] = Field(
        default=None,
        ge=20,
        description="Fixed working precision in decimal digits; unset selects the adaptive policy"
    )
    RPM_TARGET_DIGITS: int = Field(
        default=20,
        ge=6,
        description="Significant digits the result must be certified to"
    )

    # Hankel sequence
    RPM_DMAX: int = Field(
        default=15,
        ge=3,
        le=60,
        description="Largest Hankel determinant dimension"
    )
    RPM_DISPLACEMENT: int = Field(
        default=0,
        ge=0,
        description="Hankel displacement d"
    )
    RPM_IMAG_KICK: float = Field(
        default=1e-6,
        gt=0,
        lt=1,
        description="Relative imaginary perturbation applied to real seeds"
    )
    RPM_MAX_NEWTON_ITERS: int = Field(
        default=60,
        ge=1,
        le=1000,
        description="Newton iteration cap per root"
    )
    RPM_JOBS: int = Field(
        default=1,
        ge=1,
        description="Worker processes for sweeps"
    )

    # Service Configuration
    LOG_LEVEL: LogLevel = Field(
        default=LogLevel.WARNING,
        description="Logging level"
    )

    # Complex rotation check
    ROTATION_THETA: float = Field(
        default=0.2,
        gt=0,
        description="Rotation angle in radians"
    )
    ROTATION_OMEGA: float = Field(
        default=1.0,
        gt=0,
        description="Frequency of the oscillator basis"
    )
    ROTATION_BASIS: int = Field(
        default=200,
        ge=10,
        le=400,
        description="Number of oscillator basis functions"
    )

    model_config = SettingsConfigDict(
        env_file='.env',
        env_file_encoding='utf-8',
        case_sensitive=True,
        env_prefix='',
        env_ignore_empty=True,
        extra='ignore'
    )

    @field_validator('ROTATION_THETA')
    @classmethod
    def validate_theta(cls, v):
        """Complex rotation needs 0 < theta < pi/4"""
        if v >= 0.785398:
            raise ValueError(f"ROTATION_THETA must be below pi/4, got {v}")
        return v

    @field_validator('LOG_LEVEL', mode='before')
    @classmethod
    def normalize_log_level(cls, v):
        return v.upper() if isinstance(v, str) else v


@lru_cache()
def get_settings() -> Settings:
    """Get cached settings instance"""
    return Settings()


def get_settings_dict() -> dict:
    """Get settings as a dictionary (useful for debugging)"""
    settings_dict = get_settings().model_dump(mode="json")
    return settings_dict
