"""
Configuration for entroscope

This file loads the environment and holds the numerical defaults shared by
every computation (tolerances, restarts, seeds, size caps, worker count).
"""

import logging
import os
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

# =============================================================================
# STEP 1: Load Environment Variables
# =============================================================================


def load_environment_variables() -> None:
    """Load environment variables from .env file if it exists."""
    try:
        from dotenv import load_dotenv

        env_file = Path(__file__).parent / ".env"
        if env_file.exists():
            load_dotenv(env_file)
            logger.info(f"✅ Loaded environment variables from {env_file}")
        else:
            logger.debug(f"ℹ️  No .env file found at {env_file}")
    except ImportError:
        logger.debug("ℹ️  python-dotenv not installed, skipping .env file loading")


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        return int(raw)
    except ValueError as e:
        raise ValueError(
            f"❌ {name} must be an integer, got {raw!r}.\n"
            f"Please fix it in your environment or .env file."
        ) from e


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    if raw is None or not raw.strip():
        return default
    try:
        return float(raw)
    except ValueError as e:
        raise ValueError(
            f"❌ {name} must be a number, got {raw!r}.\n"
            f"Please fix it in your environment or .env file."
        ) from e


# =============================================================================
# STEP 2: Numerical Configuration
# =============================================================================


@dataclass
class Settings:
    """Defaults for every computation; operations accept explicit overrides."""

    # Worker threads for restarts, fuzz batches and probes
    threads: int = field(default_factory=lambda: os.cpu_count() or 1)

    # Optimizer defaults (Dinkelbach outer loop, multistart)
    seed: int = 0
    restarts: int = 32
    tol: float = 1e-9
    max_iters: int = 2000

    # Size caps
    max_states: int = 2_000_000
    max_dense: int = 5040
    # S_8 enumerates for sampled checks; its generator is past max_dense
    max_permutation_n: int = 8
    max_product_states: int = 1_000_000
    max_slice_states: int = 1_000_000
    max_hypergraph_n: int = 16
    max_graph_n: int = 12

    log_level: str = "WARNING"

    def __post_init__(self) -> None:
        """Load environment variables and validate settings."""

        load_environment_variables()

        self.threads = _env_int("ENTROSCOPE_THREADS", self.threads)
        if self.threads < 1:
            raise ValueError(
                "❌ ENTROSCOPE_THREADS must be at least 1.\n"
                "Unset it to use one worker per CPU."
            )

        self.seed = _env_int("ENTROSCOPE_SEED", self.seed)
        self.restarts = _env_int("ENTROSCOPE_RESTARTS", self.restarts)
        if self.restarts < 0:
            raise ValueError("❌ ENTROSCOPE_RESTARTS cannot be negative.")

        self.tol = _env_float("ENTROSCOPE_TOL", self.tol)
        if not 0.0 < self.tol < 1.0:
            raise ValueError("❌ ENTROSCOPE_TOL must lie in (0, 1), e.g. 1e-9.")

        self.max_iters = _env_int("ENTROSCOPE_MAX_ITERS", self.max_iters)
        self.max_states = _env_int("ENTROSCOPE_MAX_STATES", self.max_states)
        self.max_dense = _env_int("ENTROSCOPE_MAX_DENSE", self.max_dense)
        if self.max_dense > self.max_states:
            raise ValueError(
                "❌ ENTROSCOPE_MAX_DENSE cannot exceed ENTROSCOPE_MAX_STATES."
            )
        self.max_permutation_n = _env_int(
            "ENTROSCOPE_MAX_PERMUTATION_N", self.max_permutation_n
        )
        if self.max_permutation_n < 2:
            raise ValueError("❌ ENTROSCOPE_MAX_PERMUTATION_N must be at least 2.")

        self.log_level = os.environ.get("ENTROSCOPE_LOG_LEVEL", self.log_level)
        if not isinstance(logging.getLevelName(self.log_level.upper()), int):
            raise ValueError(
                f"❌ Unknown ENTROSCOPE_LOG_LEVEL {self.log_level!r}.\n"
                "Use one of DEBUG, INFO, WARNING, ERROR."
            )
        self.log_level = self.log_level.upper()


# =============================================================================
# STEP 3: Initialize Configuration
# =============================================================================

settings = Settings()
