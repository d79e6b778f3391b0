from typing import Optional
from pydantic_settings import BaseSettings, SettingsConfigDict

class Settings(BaseSettings):
    # Dense oracles
    DENSE_ORACLE_CAP: int = 4096
    PARLETT_GAP_TOL: float = 1e-10
    HERMITIAN_DENSE_TOL: float = 1e-12

    # Krylov
    BREAKDOWN_TOL: float = 1e-12
    HERMITIAN_PROBE_TOL: float = 1e-10
    HERMITIAN_PROBE_SEED: int = 7

    # Decay fitting
    FIT_FLOOR: float = 1e-14
    FIT_Q_MAX: float = 0.999999
    FIT_KRYLOV_STEPS: int = 40

    # Generators
    GMRF_SEED: int = 1234
    GMRF_REFERENCE_N: int = 1000
    GMRF_REFERENCE_DELTA: float = 0.02
    COVARIANCE_MAX_NNZ: int = 50_000_000

    # Persistence
    OUTPUT_DIR: str = "results"
    PERSIST_ENABLED: bool = True
    MTX_PRECISION: int = 17
    CSV_SCHEMA_VERSION: int = 2

    # System
    LOG_LEVEL: str = "INFO"
    WORKERS: int = 1
    RUN_LABEL: Optional[str] = None

    model_config = SettingsConfigDict(
        env_file=".env",
        env_file_encoding="utf-8",
        case_sensitive=True,
        extra="ignore"
    )

settings = Settings()
