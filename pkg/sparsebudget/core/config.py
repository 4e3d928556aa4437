"""
Application configuration and settings
"""
import os
from pathlib import Path

from dotenv import load_dotenv
from pydantic import Field
from pydantic_settings import BaseSettings, SettingsConfigDict

# Load environment variables from .env file
load_dotenv()


class Settings(BaseSettings):
    """Process-wide settings, overridable through SPARSEBUDGET_* variables"""

    model_config = SettingsConfigDict(env_prefix="SPARSEBUDGET_", extra="ignore")

    PROJECT_NAME: str = "sparsebudget"
    VERSION: str = "1.0.0"

    # Output Configuration
    OUTPUT_ROOT: Path = Path("runs")
    LOG_LEVEL: str = "INFO"

    # Trial pool: 0 means one worker per available CPU
    WORKERS: int = Field(default=0, ge=0)

    # elapsed_ms stays 0 unless this is on, keeping reruns byte-identical
    RECORD_WALL_CLOCK: bool = False
    PROGRESS: bool = True

    def worker_count(self) -> int:
        """Resolved worker-pool degree"""
        if self.WORKERS > 0:
            return self.WORKERS
        return os.cpu_count() or 1


# Global settings instance
settings = Settings()
