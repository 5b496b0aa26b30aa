"""
Configuration module for RFSS.
Loads environment variables and provides application and solver settings.
"""

import logging
import os
from typing import Optional

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


def _int_env(name: str, default: int) -> int:
    raw = os.getenv(name, "")
    try:
        return int(raw) if raw.strip() else default
    except ValueError:
        return default


class Config:
    """Application configuration class"""

    # API Security (empty key leaves the HTTP API open for desk use)
    API_KEY = os.getenv("API_KEY", "")

    # Application Settings
    APP_NAME = "RFSS"
    APP_VERSION = "1.0.0"
    DEBUG = os.getenv("DEBUG", "False").lower() == "true"
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO").upper()

    # Server Settings
    HOST = os.getenv("HOST", "0.0.0.0")
    PORT = int(os.getenv("PORT", "8000"))

    # Analysis Settings
    THREADS = _int_env("RFSS_THREADS", 0)
    DEFAULT_Z0 = float(os.getenv("RFSS_DEFAULT_Z0", "50"))
    NOISE_TEMPERATURE = float(os.getenv("RFSS_NOISE_TEMPERATURE", "290"))

    @classmethod
    def worker_count(cls) -> int:
        """Worker cap for parallel sweeps; RFSS_THREADS <= 0 means one per CPU."""
        threads = _int_env("RFSS_THREADS", cls.THREADS)
        if threads <= 0:
            return os.cpu_count() or 1
        return threads

    @classmethod
    def validate(cls):
        """Validate that configuration values are usable"""
        if cls.DEFAULT_Z0 <= 0:
            raise ValueError("RFSS_DEFAULT_Z0 must be a positive resistance")
        if cls.NOISE_TEMPERATURE <= 0:
            raise ValueError("RFSS_NOISE_TEMPERATURE must be positive (kelvin)")
        if not isinstance(logging.getLevelName(cls.LOG_LEVEL), int):
            raise ValueError(f"Unknown LOG_LEVEL {cls.LOG_LEVEL!r}")
        return True

    @classmethod
    def configure_logging(cls, level: Optional[str] = None) -> None:
        level = (level or cls.LOG_LEVEL).upper()
        if not isinstance(logging.getLevelName(level), int):
            level = "INFO"
        logging.basicConfig(
            level=level,
            format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        )
        # basicConfig is a no-op once handlers exist
        logging.getLogger().setLevel(level)


# Create a global config instance
config = Config()
