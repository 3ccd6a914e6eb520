"""
Shared configuration utilities.
"""

import os
from pathlib import Path
from typing import Any, Dict, Optional

import yaml
from pydantic_settings import BaseSettings, SettingsConfigDict

from shared.errors import ConfigError

# Find project root (parent of shared directory)
PROJECT_ROOT = Path(__file__).parent.parent
ENV_FILE = PROJECT_ROOT / ".env"


class BaseConfig(BaseSettings):
    """Base configuration class with common settings."""

    model_config = SettingsConfigDict(
        env_file=str(ENV_FILE),
        env_file_encoding="utf-8",
        env_prefix="INTERFEROMETER_",
        extra="ignore",
        case_sensitive=False,
    )

    # Logging
    log_level: str = "WARNING"
    log_file: Optional[str] = None


class SolverSettings(BaseConfig):
    """Numerical knobs shared by all backends."""

    # Exact Fock backend
    default_cutoff: int = 5
    max_liouvillian_entries: int = 2 ** 32
    nonzero_budget: int = 50_000_000
    exact_max_cutoff: int = 8
    dense_cutoff: int = 2
    direct_max_cutoff: int = 3
    steady_residual_tol: float = 1e-10
    inverse_iteration_steps: int = 20

    # Iterative steady state (cutoff above direct_max_cutoff)
    ilu_drop_tol: float = 1e-5
    ilu_fill_factor: float = 20.0
    ilu_attempts: int = 3
    factor_budget: int = 120_000_000
    iterative_rtol: float = 1e-12
    iterative_maxiter: int = 400
    ode_rtol: float = 1e-8
    ode_atol: float = 1e-10
    convergence_check: bool = True
    convergence_tol: float = 0.01

    # Observable floors
    n2_floor: float = 1e-12
    background_floor: float = 1e-14

    # Bogoliubov backend
    validity_ratio: float = 0.1

    # P-function mean-field backend
    pmf_damping: float = 0.5
    pmf_min_damping: float = 1e-6
    pmf_max_iterations: int = 5000
    pmf_tol: float = 1e-10
    pmf_solution_separation: float = 1e-6
    pmf_j_bound: float = 0.5
    pmf_u_floor: float = 1.0

    # Cross-method comparison
    agreement_tol: float = 0.05
    deviation_floor: float = 1e-12


def load_yaml_config(config_path: str) -> Dict[str, Any]:
    """Load configuration from a YAML file."""
    if not os.path.exists(config_path):
        raise ConfigError(f"config file not found: {config_path}", path=config_path)

    with open(config_path, "r") as f:
        try:
            data = yaml.safe_load(f) or {}
        except yaml.YAMLError as e:
            raise ConfigError(f"invalid YAML in {config_path}", path=config_path, reason=str(e))

    if not isinstance(data, dict):
        raise ConfigError("config file must contain a mapping of sections", path=config_path)
    return data


def get_config_value(config: Dict[str, Any], key: str, default: Any = None) -> Any:
    """Get a configuration value using dot notation (e.g., 'steady.omega')."""
    keys = key.split(".")
    value = config

    for k in keys:
        if isinstance(value, dict) and k in value:
            value = value[k]
        else:
            return default

    return value


def section_values(config: Dict[str, Any], command: str) -> Dict[str, Any]:
    """Flatten the `defaults` section and the section of one subcommand.

    Keys in the subcommand section win over `defaults`. Hyphens in keys are
    accepted and mapped to underscores.
    """
    merged: Dict[str, Any] = {}
    for name in ("defaults", command):
        section = get_config_value(config, name, {}) or {}
        if not isinstance(section, dict):
            raise ConfigError(f"section '{name}' must be a mapping", section=name)
        for key, value in section.items():
            merged[str(key).replace("-", "_")] = value
    return merged


def solver_settings_from(config: Dict[str, Any], **overrides: Any) -> SolverSettings:
    """Build SolverSettings from the `solver` section plus explicit overrides."""
    values = dict(get_config_value(config, "solver", {}) or {})
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return SolverSettings(**values)
    except ValueError as e:
        raise ConfigError("invalid solver settings", reason=str(e))
