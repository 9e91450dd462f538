#!/usr/bin/env python3

import json
import logging
import os
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Literal, Mapping, Optional, Tuple

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from ring_dynamics.errors import ConfigError, IoError, RegimeError
from ring_dynamics.exact_dynamics import DEFAULT_DT
from ring_dynamics.integrators import STABILITY_MARGIN
from ring_dynamics.lattice_bath import (
    LatticeParams,
    band_structure,
    classify_regime,
    decay_time,
    feedback_rates,
)

logger = logging.getLogger(__name__)

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


class Scenario(Enum):
    BANDS = "bands"
    EVOLVE_EXACT = "evolve_exact"
    EVOLVE_KERNEL = "evolve_kernel"
    EVOLVE_DDE = "evolve_dde"
    ANALYTIC = "analytic"
    STAIRCASE = "staircase"
    SPECTRUM = "spectrum"
    CROSSCHECK = "crosscheck"
    FIGURES = "figures"


# scenarios whose outputs do not involve the emitter coupling
ALPHA_OPTIONAL = {Scenario.BANDS}
NEEDS_T_MAX = {Scenario.EVOLVE_EXACT, Scenario.EVOLVE_KERNEL, Scenario.EVOLVE_DDE,
               Scenario.ANALYTIC, Scenario.CROSSCHECK}
NEEDS_CROSSING = {Scenario.EVOLVE_DDE, Scenario.ANALYTIC, Scenario.STAIRCASE,
                  Scenario.CROSSCHECK, Scenario.FIGURES}


@dataclass(frozen=True)
class RunSettings:
    """Environment-level settings (.env, then process environment)"""

    out_dir: str = "results"
    log_level: str = "INFO"
    log_file: str = "logs/crq.log"
    manifest_name: str = "manifest.json"
    csv_digits: int = 17

    @classmethod
    def from_env(cls) -> "RunSettings":
        load_dotenv()
        return cls(
            out_dir=os.getenv('CRQ_OUT_DIR', 'results'),
            log_level=os.getenv('LOG_LEVEL', 'INFO').upper(),
            log_file=os.getenv('LOG_FILE', 'logs/crq.log'),
            manifest_name=os.getenv('CRQ_MANIFEST_NAME', 'manifest.json'),
            csv_digits=int(os.getenv('CRQ_CSV_DIGITS', '17')),
        )


def get_settings() -> RunSettings:
    return RunSettings.from_env()


_logging_configured = False


def configure_logging(settings: RunSettings):
    """basicConfig once per process: file handler on LOG_FILE plus the console stream"""
    global _logging_configured
    if _logging_configured:
        return
    log_path = Path(settings.log_file)
    log_path.parent.mkdir(parents=True, exist_ok=True)
    logging.basicConfig(
        level=getattr(logging, settings.log_level, logging.INFO),
        format=LOG_FORMAT,
        handlers=[
            logging.FileHandler(log_path),
            logging.StreamHandler()
        ]
    )
    _logging_configured = True


class ScenarioConfig(BaseModel):
    """One resolved run: scenario, model constants, grids and output location"""

    model_config = ConfigDict(extra="forbid", allow_inf_nan=False)

    scenario: Scenario
    params: LatticeParams
    label: Optional[str] = None
    t_max: Optional[float] = None
    t_max_loops: Optional[float] = None
    dt: Optional[float] = None
    kernel_dt: Optional[float] = None
    dde_dt: Optional[float] = None
    output_dir: Path = Field(default_factory=lambda: Path(get_settings().out_dir))
    output_stride: int = 1
    seed: int = 0
    method: Literal["modespace", "realspace"] = "modespace"
    alphas: List[float] = Field(default_factory=list)
    snapshot_times: List[float] = Field(default_factory=list)
    n_pieces: Optional[int] = None
    odd_N: int = 501
    pr_threshold: float = 10.0
    neighborhood: int = 5
    weight_threshold: float = 0.5
    dump_eigenvectors: bool = False

    @field_validator("t_max", "t_max_loops", "dt", "kernel_dt", "dde_dt")
    @classmethod
    def _positive(cls, value: Optional[float]) -> Optional[float]:
        if value is not None and value <= 0:
            raise ValueError("must be positive")
        return value

    @field_validator("output_stride")
    @classmethod
    def _stride(cls, value: int) -> int:
        if value < 1:
            raise ValueError("must be at least 1")
        return value

    @field_validator("alphas")
    @classmethod
    def _alphas(cls, value: List[float]) -> List[float]:
        if any(a < 0 for a in value):
            raise ValueError("couplings must be non-negative")
        return value

    def resolved_t_max(self) -> Optional[float]:
        """t_max, or t_max_loops in units of the fast loop time"""
        if self.t_max is not None:
            return self.t_max
        if self.t_max_loops is not None:
            return self.t_max_loops * feedback_rates(self.params).T_minus
        return None

    def step(self) -> float:
        return DEFAULT_DT if self.dt is None else self.dt

    def to_manifest_dict(self) -> Dict[str, Any]:
        return self.model_dump(mode="json")


def _merge(raw: Dict[str, Any], overrides: Optional[Mapping[str, Any]]) -> Dict[str, Any]:
    merged = dict(raw)
    merged["params"] = dict(raw.get("params") or {})
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key == "params":
            merged["params"].update({k: v for k, v in value.items() if v is not None})
        else:
            merged[key] = value
    return merged


def _error_key(error: Dict[str, Any]) -> str:
    loc = [str(part) for part in error.get("loc", ())]
    if len(loc) > 1 and loc[0] == "params":
        return loc[1]
    return loc[0] if loc else "config"


def load_config(path: Optional[Path] = None, overrides: Optional[Mapping[str, Any]] = None) -> ScenarioConfig:
    """
    Build a ScenarioConfig from a JSON file and command-line overrides.

    A run manifest is accepted as well; its "config" entry is used.

    Raises:
        IoError: the file cannot be read
        ConfigError: syntax error, missing or invalid key (the key is named)
    """
    raw: Dict[str, Any] = {}
    if path is not None:
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as e:
            raise IoError(f"cannot read config {path}: {e}")
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as e:
            raise ConfigError("config", f"{path} is not valid JSON ({e.msg} at line {e.lineno})")
        if not isinstance(raw, dict):
            raise ConfigError("config", f"{path} must hold a JSON object")
        if "scenario" not in raw and isinstance(raw.get("config"), dict):
            logger.info(f"Reading configuration from run manifest {path}")
            raw = raw["config"]

    merged = _merge(raw, overrides)
    try:
        scenario = Scenario(merged.get("scenario"))
    except ValueError:
        if "scenario" not in merged:
            raise ConfigError("scenario", "missing required key")
        raise ConfigError("scenario", f"unknown scenario '{merged['scenario']}'")
    if scenario in ALPHA_OPTIONAL and "alpha" not in merged["params"]:
        merged["params"]["alpha"] = 0.0

    try:
        config = ScenarioConfig.model_validate(merged)
    except ValidationError as e:
        first = e.errors()[0]
        key = _error_key(first)
        if first["type"] == "missing":
            raise ConfigError(key, "missing required key")
        raise ConfigError(key, first.get("msg", "invalid value"))

    logger.info(f"Loaded {config.scenario.value} config: N={config.params.N} alpha={config.params.alpha}")
    return config


def validate_config(config: ScenarioConfig) -> Tuple[bool, str, Dict[str, Any]]:
    """
    Scenario-specific checks beyond field validation

    Returns:
        (is_valid, message, metadata)
        metadata: derived time scales, parity class and regime when the bands cross
    """
    params = config.params
    metadata: Dict[str, Any] = {"parity": params.parity, "scenario": config.scenario.value}

    if params.at_crossing() and params.rho != 0.0:
        rates = feedback_rates(params)
        metadata.update({
            "T_minus": rates.T_minus,
            "T_plus": rates.T_plus,
            "T_d": decay_time(rates),
            "T_meet_1": rates.T_meet(1),
        })
        try:
            regime, reason, _ = classify_regime(params)
            metadata["regime"] = regime.value
            metadata["regime_reason"] = reason
        except RegimeError:
            pass
    elif config.scenario in NEEDS_CROSSING:
        return False, f"{config.scenario.value} needs phi = pi/2 and rho > 0", metadata

    if config.scenario in NEEDS_T_MAX and config.resolved_t_max() is None:
        return False, "t_max (or t_max_loops) is required", metadata

    if config.scenario in (Scenario.EVOLVE_EXACT, Scenario.CROSSCHECK, Scenario.FIGURES):
        radius = max(band_structure(params).max_abs_energy(), abs(params.omega_e))
        if config.step() * radius > STABILITY_MARGIN:
            return False, f"dt * max|E| = {config.step() * radius:.4g} exceeds {STABILITY_MARGIN}", metadata

    if config.scenario == Scenario.ANALYTIC and params.parity != 2:
        return False, "closed-form amplitude needs N = 2 (mod 4)", metadata
    if config.scenario == Scenario.STAIRCASE and params.parity == 0:
        return False, "N = 0 (mod 4) has no staircase", metadata
    if config.scenario == Scenario.FIGURES and config.odd_N % 2 == 0:
        return False, "odd_N must be odd", metadata

    if config.scenario == Scenario.SPECTRUM and config.dt is not None:
        logger.info("spectrum ignores dt")

    return True, f"Config valid ({config.scenario.value})", metadata
