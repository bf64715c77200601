"""
Configuration module for KP Torus Lab.

Environment defaults, logging setup and the validated parameter models of
every experiment command.
"""

import os
import json
import hashlib
import logging
import sys
from typing import Optional, Dict, Any, List, Literal, Type

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field

# Load environment variables from .env file
load_dotenv()

# Environment variable names
LOG_LEVEL_ENV = "KPLAB_LOG_LEVEL"
OUTPUT_DIR_ENV = "KPLAB_OUTPUT_DIR"
SEED_ENV = "KPLAB_SEED"
THREADS_ENV = "KPLAB_THREADS"
OVERSAMPLING_ENV = "KPLAB_OVERSAMPLING"

# Default values
DEFAULT_LOG_LEVEL = "INFO"
DEFAULT_OUTPUT_DIR = "reports"
DEFAULT_SEED = 0
DEFAULT_THREADS = 1
DEFAULT_OVERSAMPLING = 2

COMMANDS = ("count", "resonance", "norms", "probe", "sweep", "solve", "picard")


def _int_from_env(name: str, default: int, minimum: int) -> int:
    value = os.getenv(name)
    if value:
        try:
            return max(minimum, int(value))
        except ValueError:
            logging.getLogger(__name__).warning(
                f"Ignoring non-integer {name}={value!r}, using {default}"
            )
    return default


def get_default_log_level() -> str:
    """
    Get the default log level from environment variables or use the default.

    Returns:
        str: The default log level
    """
    return os.getenv(LOG_LEVEL_ENV, DEFAULT_LOG_LEVEL)


def get_default_output_dir() -> str:
    """
    Get the base directory for experiment outputs.

    Returns:
        str: The output directory
    """
    return os.getenv(OUTPUT_DIR_ENV, DEFAULT_OUTPUT_DIR)


def get_default_seed() -> int:
    """
    Get the default random seed.

    Returns:
        int: The seed (non-negative)
    """
    return _int_from_env(SEED_ENV, DEFAULT_SEED, 0)


def get_default_threads() -> int:
    """
    Get the default worker thread count; 1 guarantees bit-reproducible runs.

    Returns:
        int: Number of worker threads
    """
    return _int_from_env(THREADS_ENV, DEFAULT_THREADS, 1)


def get_default_oversampling() -> int:
    """
    Get the zero-padding factor used for L^p quadrature.

    Returns:
        int: Oversampling factor (at least 1)
    """
    return _int_from_env(OVERSAMPLING_ENV, DEFAULT_OVERSAMPLING, 1)


def get_config() -> Dict[str, Any]:
    """
    Get all environment-level configuration values.

    Returns:
        Dict[str, Any]: Dictionary with all configuration values
    """
    return {
        "log_level": get_default_log_level(),
        "output": get_default_output_dir(),
        "seed": get_default_seed(),
        "threads": get_default_threads(),
        "oversampling": get_default_oversampling(),
    }


def setup_logging(level_name: Optional[str] = None) -> None:
    """
    Set up logging with the specified level.

    Args:
        level_name: The name of the logging level, or None to use default
    """
    if level_name is None:
        level_name = get_default_log_level()

    level_map = {
        "DEBUG": logging.DEBUG,
        "INFO": logging.INFO,
        "WARNING": logging.WARNING,
        "ERROR": logging.ERROR,
        "CRITICAL": logging.CRITICAL,
    }

    level = level_map.get(level_name.upper(), logging.INFO)

    logging.basicConfig(
        level=level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
        stream=sys.stdout,
    )

    logging.debug(f"Logging initialized at level: {level_name}")


# ---------------------------------------------------------------------------
# Command parameter models
# ---------------------------------------------------------------------------


class _Params(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class CountParams(_Params):
    r_max: int = Field(10000, ge=100)
    delta_grid: int = Field(8, ge=1, description="delta grid step is 1/delta_grid on [0,1]^2")
    two_squares_max: int = Field(100000, ge=0)
    parity_r_max: int = Field(10000, ge=0)
    dyadic_max_exponent: int = Field(3, ge=1, le=4)
    max_exponent: float = 0.3


class ResonanceParams(_Params):
    alpha: List[float] = [2.0]
    kmax: int = Field(30, ge=1)
    etamax: int = Field(20, ge=0)
    eta_samples: int = Field(4, ge=1)
    taus: int = Field(10, ge=1)
    tolerance: float = 1e-10
    factorization_K: int = Field(8, ge=1)
    factorization_M: int = Field(16, ge=1)
    factorization_times: List[float] = [0.1, 1.0]
    factorization_tolerance: float = 1e-12


class NormsParams(_Params):
    K: int = Field(4, ge=1)
    M: int = Field(4, ge=1)
    J: int = Field(4, ge=1)
    s: float = 0.5
    eps: float = 0.0
    b: float = 0.5
    beta: float = Field(0.0, ge=0.0)
    alpha: float = Field(2.0, ge=2.0)
    k_weight: Literal["homogeneous", "bracket"] = "homogeneous"
    p_tau: float = Field(2.0, ge=1.0, le=2.0)
    dump_weights: bool = False


class ProbeParams(_Params):
    case: str = "bil"
    family: Literal["random_gaussian", "single_pair", "wave_packet", "shell_concentrated"] = "random_gaussian"
    budget: int = Field(20, ge=1)
    K: int = Field(4, ge=1)
    M: int = Field(4, ge=1)
    J: int = Field(4, ge=1)
    overrides: Dict[str, float] = {}
    falsification: bool = False
    duality_triples: int = Field(50, ge=0)
    duality_tolerance: float = 1e-8
    kmax: int = Field(20, ge=2)
    radii: List[float] = [4.0, 16.0, 32.0, 64.0]
    kernel_tolerance: float = 1e-10
    stability_change: float = 0.1
    times: List[float] = [0.5, 0.25, 0.125, 0.0625]


class SweepParams(_Params):
    case: str = "bil"
    family: Literal["random_gaussian", "single_pair", "wave_packet", "shell_concentrated"] = "random_gaussian"
    sizes: List[int] = [4, 8]
    budget: int = Field(20, ge=1)
    overrides: Dict[str, float] = {}
    falsification: bool = False
    max_slope: float = 0.15
    min_falsification_gap: float = 0.2


class SolveParams(_Params):
    alpha: float = Field(2.0, ge=2.0)
    K: int = Field(16, ge=1)
    M: int = Field(16, ge=1)
    dt: float = Field(1e-3, gt=0.0)
    t_end: float = Field(1.0, gt=0.0)
    scheme: Literal["integrating_factor_rk4", "etdrk4"] = "integrating_factor_rk4"
    amplitude: float = 0.1
    linear: bool = False
    max_drift: float = 1e-6
    save_every: int = Field(100, ge=1)
    convergence_check: bool = False
    convergence_amplitude: float = Field(1.0, gt=0.0)
    ref_K: int = Field(32, ge=1)
    ref_M: int = Field(32, ge=1)
    ref_dt: float = Field(2.5e-4, gt=0.0)
    min_reduction: float = 8.0
    lipschitz: bool = False
    perturbations: List[float] = [1e-4, 1e-5]
    max_lipschitz_change: float = 0.2


class PicardParams(_Params):
    alpha: float = Field(2.0, ge=2.0)
    K: int = Field(8, ge=1)
    M: int = Field(8, ge=1)
    dt: float = Field(1e-3, gt=0.0)
    depth: int = Field(6, ge=1)
    T: float = Field(0.05, gt=0.0)
    amplitude: float = 0.05
    tolerance: float = 1e-5


COMMAND_PARAMS: Dict[str, Type[_Params]] = {
    "count": CountParams,
    "resonance": ResonanceParams,
    "norms": NormsParams,
    "probe": ProbeParams,
    "sweep": SweepParams,
    "solve": SolveParams,
    "picard": PicardParams,
}


class ExperimentConfig(BaseModel):
    """A fully resolved experiment: command, its parameters, seed and output path."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    command: Literal["count", "resonance", "norms", "probe", "sweep", "solve", "picard"]
    parameters: Dict[str, Any] = {}
    seed: int = Field(default_factory=get_default_seed, ge=0)
    threads: int = Field(default_factory=get_default_threads, ge=1)
    output: str = Field(default_factory=get_default_output_dir)

    def resolved_parameters(self) -> _Params:
        """
        Validate the parameter map against the command's model.

        Returns:
            _Params: The command's parameter model

        Raises:
            pydantic.ValidationError: On unknown keys or out-of-range values
        """
        return COMMAND_PARAMS[self.command](**self.parameters)

    def canonical(self) -> Dict[str, Any]:
        """Resolved configuration as plain JSON-ready data (threads excluded)."""
        return {
            "command": self.command,
            "parameters": self.resolved_parameters().model_dump(mode="json"),
            "seed": self.seed,
        }

    def config_hash(self) -> str:
        """SHA-256 of the canonical configuration."""
        payload = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()
