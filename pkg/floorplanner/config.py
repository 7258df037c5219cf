"""
Application configuration management.
Loads environment variables and provides solver configuration objects.
"""
import math
import os
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, List, Optional

from dotenv import load_dotenv

from floorplanner.errors import ConfigError

# Load environment variables from .env file
load_dotenv()

MODE_BASIC = "basic"
MODE_IO = "io"
MODES = (MODE_BASIC, MODE_IO)

# Environment values that failed to parse; reported by Config.validate().
ENV_ERRORS: List[str] = []


def _env_number(name: str, default: str, parse: Callable[[str], Any]) -> Any:
    raw = os.getenv(name, default)
    try:
        return parse(raw.strip())
    except ValueError:
        ENV_ERRORS.append(f"{name}={raw!r} could not be parsed, using {default}")
        return parse(default)


def _parse_threshold(raw: str) -> float:
    if raw.lower() in ("inf", "infinity", "none"):
        return math.inf
    return int(raw)


class Config:
    """Environment-driven defaults."""

    # Solve defaults
    MODE: str = os.getenv("FLOORPLAN_MODE", MODE_BASIC)
    SEED: int = _env_number("FLOORPLAN_SEED", "0", int)
    NUM_PERTURB: int = _env_number("FLOORPLAN_NUM_PERTURB", "3", int)
    RESET_THRESHOLD: float = _env_number("FLOORPLAN_RESET_THRESHOLD", "10", _parse_threshold)
    EPS_PREF_SCALE: float = _env_number("FLOORPLAN_EPS_PREF_SCALE", "2e-4", float)
    STOP_THRESHOLD: float = _env_number("FLOORPLAN_STOP_THRESHOLD", "0.001", float)
    MAX_ITER: int = _env_number("FLOORPLAN_MAX_ITER", "10000", int)
    POST_MAX_ITER: int = _env_number("FLOORPLAN_POST_MAX_ITER", "2000", int)
    OSCILLATION_WINDOW: int = _env_number("FLOORPLAN_OSCILLATION_WINDOW", "50", int)

    # Initialization
    KEY_MODULE_QUANTILE: float = _env_number("FLOORPLAN_KEY_MODULE_QUANTILE", "0.2", float)
    PCG_TOL: float = _env_number("FLOORPLAN_PCG_TOL", "1e-8", float)
    PCG_MAX_ITER: int = _env_number("FLOORPLAN_PCG_MAX_ITER", "1000", int)

    # Logging
    LOG_LEVEL: str = os.getenv("FLOORPLAN_LOG_LEVEL", "WARNING").upper()

    # Step sizes are fractions of the die diagonal. The MCNC hyperparameters
    # (lambda_init 321 and 488, lambda_min 0.1) were tuned on dies whose
    # diagonal is close to 10,000 units.
    MODE_PRESETS: Dict[str, Dict[str, float]] = {
        MODE_BASIC: {"lambda_init_scale": 0.0321, "gamma_init": 0.7804, "gamma_growth": 1.1},
        MODE_IO: {"lambda_init_scale": 0.0488, "gamma_init": 0.7761, "gamma_growth": 1.0001},
    }
    LAMBDA_MIN_SCALE: float = 1e-5
    LAMBDA_DECAY: float = 0.99
    EPS_POST: float = 0.35

    @classmethod
    def validate(cls) -> List[str]:
        """
        Validate environment configuration.

        Returns:
            List of problems found (empty when the configuration is usable).
        """
        problems = list(ENV_ERRORS)

        if cls.MODE not in MODES:
            problems.append(f"FLOORPLAN_MODE must be one of {', '.join(MODES)}")
        if cls.NUM_PERTURB < 1:
            problems.append("FLOORPLAN_NUM_PERTURB must be at least 1")
        if cls.RESET_THRESHOLD < 1:
            problems.append("FLOORPLAN_RESET_THRESHOLD must be a positive integer or 'inf'")
        if cls.EPS_PREF_SCALE <= 0:
            problems.append("FLOORPLAN_EPS_PREF_SCALE must be positive")
        if not 0 < cls.STOP_THRESHOLD < 1:
            problems.append("FLOORPLAN_STOP_THRESHOLD must lie in (0, 1)")
        if cls.MAX_ITER < 1 or cls.POST_MAX_ITER < 0:
            problems.append("FLOORPLAN_MAX_ITER must be positive and FLOORPLAN_POST_MAX_ITER non-negative")
        if cls.OSCILLATION_WINDOW < 2:
            problems.append("FLOORPLAN_OSCILLATION_WINDOW must be at least 2")
        if not 0 <= cls.KEY_MODULE_QUANTILE <= 1:
            problems.append("FLOORPLAN_KEY_MODULE_QUANTILE must lie in [0, 1]")
        if cls.PCG_TOL <= 0 or cls.PCG_MAX_ITER < 1:
            problems.append("FLOORPLAN_PCG_TOL and FLOORPLAN_PCG_MAX_ITER must be positive")
        if cls.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            problems.append("FLOORPLAN_LOG_LEVEL must be a standard logging level name")

        return problems


@dataclass(frozen=True)
class SmConfig:
    """
    Superiorization (wirelength perturbation) parameters.

    lambda_init=None and lambda_min=None mean the matching scale times the die
    diagonal; resolved() fills them in for one instance.
    """

    num_perturb: int = Config.NUM_PERTURB
    lambda_min: Optional[float] = None
    lambda_init: Optional[float] = None
    lambda_decay: float = Config.LAMBDA_DECAY
    max_trials: int = 10
    seed: int = Config.SEED
    lambda_init_scale: float = Config.MODE_PRESETS[MODE_BASIC]["lambda_init_scale"]
    lambda_min_scale: float = Config.LAMBDA_MIN_SCALE

    def __post_init__(self):
        if self.num_perturb < 1:
            raise ConfigError("num_perturb must be at least 1")
        if not 0 < self.lambda_decay < 1:
            raise ConfigError("perturbation decay factor must lie in (0, 1)")
        if self.lambda_init_scale <= 0 or self.lambda_min_scale < 0:
            raise ConfigError("lambda_init_scale must be positive and lambda_min_scale non-negative")
        if self.lambda_init is not None and self.lambda_init <= 0:
            raise ConfigError("lambda_init must be positive")
        if self.lambda_min is not None and self.lambda_min < 0:
            raise ConfigError("lambda_min must be non-negative")
        if None not in (self.lambda_init, self.lambda_min) and self.lambda_min > self.lambda_init:
            raise ConfigError("require 0 <= lambda_min <= lambda_init")
        if self.max_trials < 1:
            raise ConfigError("max_trials must be at least 1")

    def resolved(self, die_diagonal: float) -> "SmConfig":
        """
        Copy with absolute step sizes for a die of the given diagonal.

        A scaled lambda_min never exceeds lambda_init.
        """
        lambda_init = self.lambda_init
        if lambda_init is None:
            lambda_init = self.lambda_init_scale * die_diagonal
        lambda_min = self.lambda_min
        if lambda_min is None:
            lambda_min = min(self.lambda_min_scale * die_diagonal, lambda_init)
        return replace(self, lambda_init=lambda_init, lambda_min=lambda_min)


@dataclass(frozen=True)
class RmapConfig:
    """
    Resettable alternating projection parameters.

    eps_pref=None means Config.EPS_PREF_SCALE times the die diagonal, resolved
    per instance. threshold=math.inf disables resetting (plain MAP weights).
    """

    eps_pref: Optional[float] = None
    threshold: float = Config.RESET_THRESHOLD
    order: str = "position"

    def __post_init__(self):
        if self.eps_pref is not None and self.eps_pref <= 0:
            raise ConfigError("eps_pref must be positive")
        if self.threshold != math.inf and (self.threshold < 1 or int(self.threshold) != self.threshold):
            raise ConfigError("reset threshold must be a positive integer or infinity")
        if self.order not in ("position", "index"):
            raise ConfigError("order must be 'position' or 'index'")

    def resolved_eps(self, die_diagonal: float) -> float:
        if self.eps_pref is not None:
            return self.eps_pref
        return Config.EPS_PREF_SCALE * die_diagonal


@dataclass(frozen=True)
class SolverConfig:
    """Complete configuration of one solve."""

    sm: SmConfig = field(default_factory=SmConfig)
    rmap: RmapConfig = field(default_factory=RmapConfig)
    gamma_init: float = Config.MODE_PRESETS[MODE_BASIC]["gamma_init"]
    gamma_growth: float = Config.MODE_PRESETS[MODE_BASIC]["gamma_growth"]
    eps_post: float = Config.EPS_POST
    stop_threshold: float = Config.STOP_THRESHOLD
    max_iter: int = Config.MAX_ITER
    post_max_iter: int = Config.POST_MAX_ITER
    oscillation_window: int = Config.OSCILLATION_WINDOW
    mode: str = MODE_BASIC
    key_module_quantile: float = Config.KEY_MODULE_QUANTILE
    key_modules: Optional[tuple] = None
    pcg_tol: float = Config.PCG_TOL
    pcg_max_iter: int = Config.PCG_MAX_ITER

    def __post_init__(self):
        if not 0 < self.gamma_init < 1:
            raise ConfigError("gamma_init must lie in (0, 1)")
        if self.gamma_growth <= 1:
            raise ConfigError("projection progress factor must exceed 1")
        if not 0 < self.eps_post < 1:
            raise ConfigError("eps_post must lie in (0, 1)")
        if not 0 < self.stop_threshold < 1:
            raise ConfigError("stop threshold must lie in (0, 1)")
        if self.max_iter < 1 or self.post_max_iter < 0:
            raise ConfigError("iteration caps must be positive")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        if not 0 <= self.key_module_quantile <= 1:
            raise ConfigError("key module quantile must lie in [0, 1]")

    @property
    def io_assignment(self) -> bool:
        return self.mode == MODE_IO

    @property
    def seed(self) -> int:
        return self.sm.seed

    @classmethod
    def for_mode(cls, mode: str = Config.MODE, **overrides: Any) -> "SolverConfig":
        """
        Build a configuration from the mode preset plus explicit overrides.

        Args:
            mode: "basic" or "io".
            **overrides: Any SolverConfig, SmConfig or RmapConfig field name.

        Returns:
            Validated SolverConfig.
        """
        if mode not in MODES:
            raise ConfigError(f"mode must be one of {', '.join(MODES)}")
        preset = Config.MODE_PRESETS[mode]
        sm_fields = {f for f in SmConfig.__dataclass_fields__}
        rmap_fields = {f for f in RmapConfig.__dataclass_fields__}

        sm_kwargs = {"lambda_init_scale": preset["lambda_init_scale"]}
        rmap_kwargs: Dict[str, Any] = {}
        top_kwargs: Dict[str, Any] = {
            "gamma_init": preset["gamma_init"],
            "gamma_growth": preset["gamma_growth"],
            "mode": mode,
        }
        for key, value in overrides.items():
            if value is None and key not in ("eps_pref", "key_modules"):
                continue
            if key in sm_fields:
                sm_kwargs[key] = value
            elif key in rmap_fields:
                rmap_kwargs[key] = value
            elif key in cls.__dataclass_fields__:
                top_kwargs[key] = value
            else:
                raise ConfigError(f"unknown configuration field: {key}")

        return cls(sm=SmConfig(**sm_kwargs), rmap=RmapConfig(**rmap_kwargs), **top_kwargs)

    def with_seed(self, seed: int) -> "SolverConfig":
        return replace(self, sm=replace(self.sm, seed=seed))

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        if data["rmap"]["threshold"] == math.inf:
            data["rmap"]["threshold"] = None
        if data["key_modules"] is not None:
            data["key_modules"] = list(data["key_modules"])
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SolverConfig":
        data = dict(data)
        sm = SmConfig(**data.pop("sm"))
        rmap_data = dict(data.pop("rmap"))
        if rmap_data.get("threshold") is None:
            rmap_data["threshold"] = math.inf
        if data.get("key_modules") is not None:
            data["key_modules"] = tuple(data["key_modules"])
        return cls(sm=sm, rmap=RmapConfig(**rmap_data), **data)
