"""Configuration module for the performance-regression pipeline.

Reads configuration from ELAPP_* environment variables (and a .env file)
with validation.
"""
import dataclasses
import os
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from dotenv import load_dotenv


class ConfigurationError(Exception):
    """Raised when configuration values are missing or invalid."""
    exit_code = 1

    def __init__(self, problems: Dict[str, str]):
        self.problems = dict(problems)
        details = "; ".join(f"{name}: {reason}" for name, reason in sorted(self.problems.items()))
        super().__init__(f"Invalid configuration ({details})")


ALLOWED_MULTIPLIERS = (50, 400)
TARGET_CHOICES = ("raw", "log", "natural_log")
GRID_CHOICES = ("full", "quick")
TRUE_VALUES = ("true", "1", "yes")


@dataclass(frozen=True)
class RunConfig:
    """Run configuration loaded from environment variables."""

    # Performance data
    algorithm: str = "random-search"
    budget: int = 1000

    # Suite and features
    multiplier: int = 400
    dim: int = 5
    instances: int = 5
    functions: Tuple[int, ...] = tuple(range(1, 25))
    allow_any_multiplier: bool = False

    # Regression
    target: str = "log"
    grid: str = "full"
    weight_on_validation: bool = False
    refit_selected: bool = True

    # Seeds
    seed: int = 42
    feature_seed: Optional[int] = None

    # Parallel processing
    fit_workers: int = 4
    fold_workers: int = 1

    # Output
    output_dir: str = "./artifacts"
    log_path: Optional[str] = None
    debug: bool = False

    _problems: Dict[str, str] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        problems = dict(self._problems)
        object.__setattr__(self, "_problems", {})
        if self.feature_seed is None:
            object.__setattr__(self, "feature_seed", self.seed)
        object.__setattr__(self, "functions", tuple(int(f) for f in self.functions))

        if self.budget <= 0:
            problems.setdefault("ELAPP_BUDGET", f"must be positive, got {self.budget}")
        if self.multiplier <= 0 or (
            self.multiplier not in ALLOWED_MULTIPLIERS and not self.allow_any_multiplier
        ):
            problems.setdefault(
                "ELAPP_MULTIPLIER",
                f"must be one of {ALLOWED_MULTIPLIERS} (or set ELAPP_ALLOW_ANY_MULTIPLIER), got {self.multiplier}",
            )
        if self.dim < 1:
            problems.setdefault("ELAPP_DIM", f"must be positive, got {self.dim}")
        if self.instances < 2:
            problems.setdefault("ELAPP_INSTANCES", f"need at least 2 instances for folds, got {self.instances}")
        if not self.functions or any(f < 1 or f > 24 for f in self.functions):
            problems.setdefault("ELAPP_FUNCTIONS", f"must be ids in 1..24, got {list(self.functions)}")
        if self.target.lower() not in TARGET_CHOICES:
            problems.setdefault("ELAPP_TARGET", f"must be one of {TARGET_CHOICES}, got {self.target!r}")
        if self.grid not in GRID_CHOICES:
            problems.setdefault("ELAPP_GRID", f"must be one of {GRID_CHOICES}, got {self.grid!r}")
        if self.fit_workers < 1:
            problems.setdefault("ELAPP_FIT_WORKERS", f"must be at least 1, got {self.fit_workers}")
        if self.fold_workers < 1:
            problems.setdefault("ELAPP_FOLD_WORKERS", f"must be at least 1, got {self.fold_workers}")
        if problems:
            raise ConfigurationError(problems)

    @classmethod
    def from_env(cls, dotenv_path: Optional[str] = None) -> "RunConfig":
        """Load configuration from environment variables.

        A .env file is loaded first without overriding variables that are
        already set.

        Optional environment variables:
        - ELAPP_ALGORITHM: Algorithm id of the performance data (default: random-search)
        - ELAPP_BUDGET: Fixed budget in evaluations (default: 1000)
        - ELAPP_MULTIPLIER: Feature sample size per dimension, 50 or 400 (default: 400)
        - ELAPP_ALLOW_ANY_MULTIPLIER: Accept other multipliers (default: false)
        - ELAPP_DIM: Search space dimension (default: 5)
        - ELAPP_INSTANCES: Instances per function (default: 5)
        - ELAPP_FUNCTIONS: Comma separated function ids (default: 1..24)
        - ELAPP_TARGET: raw, log or natural_log (default: log)
        - ELAPP_GRID: full or quick (default: full)
        - ELAPP_SEED: Run seed (default: 42)
        - ELAPP_FEATURE_SEED: Feature sampling seed (default: ELAPP_SEED)
        - ELAPP_FIT_WORKERS: Threads fitting the grid (default: 4)
        - ELAPP_FOLD_WORKERS: Threads over folds (default: 1)
        - ELAPP_OUTPUT_DIR: Artifact directory (default: ./artifacts)
        - ELAPP_LOG_PATH: JSON-lines log sink (default: none)
        - ELAPP_WEIGHT_ON_VALIDATION: Weight members on held-out instances (default: false)
        - ELAPP_REFIT_SELECTED: Refit selected configs after validation weighting (default: true)
        - ELAPP_DEBUG: Debug logging (default: false)

        Returns:
            RunConfig: Configuration object

        Raises:
            ConfigurationError: Listing every invalid variable
        """
        load_dotenv(dotenv_path, override=False)
        problems: Dict[str, str] = {}

        def get_int(name: str, default: Optional[int]) -> Optional[int]:
            raw = os.environ.get(name)
            if raw is None or raw.strip() == "":
                return default
            try:
                return int(raw)
            except ValueError:
                problems[name] = f"expected an integer, got {raw!r}"
                return default

        def get_bool(name: str, default: bool) -> bool:
            raw = os.environ.get(name)
            if raw is None or raw.strip() == "":
                return default
            return raw.strip().lower() in TRUE_VALUES

        functions = cls.functions
        raw_functions = os.environ.get("ELAPP_FUNCTIONS")
        if raw_functions:
            try:
                functions = tuple(int(f) for f in raw_functions.split(",") if f.strip())
            except ValueError:
                problems["ELAPP_FUNCTIONS"] = f"expected comma separated integers, got {raw_functions!r}"

        seed = get_int("ELAPP_SEED", 42)
        return cls(
            algorithm=os.environ.get("ELAPP_ALGORITHM", "random-search"),
            budget=get_int("ELAPP_BUDGET", 1000),
            multiplier=get_int("ELAPP_MULTIPLIER", 400),
            allow_any_multiplier=get_bool("ELAPP_ALLOW_ANY_MULTIPLIER", False),
            dim=get_int("ELAPP_DIM", 5),
            instances=get_int("ELAPP_INSTANCES", 5),
            functions=functions,
            target=os.environ.get("ELAPP_TARGET", "log").strip().lower(),
            grid=os.environ.get("ELAPP_GRID", "full").strip().lower(),
            seed=seed,
            feature_seed=get_int("ELAPP_FEATURE_SEED", seed),
            fit_workers=get_int("ELAPP_FIT_WORKERS", 4),
            fold_workers=get_int("ELAPP_FOLD_WORKERS", 1),
            output_dir=os.environ.get("ELAPP_OUTPUT_DIR", "./artifacts"),
            log_path=os.environ.get("ELAPP_LOG_PATH") or None,
            weight_on_validation=get_bool("ELAPP_WEIGHT_ON_VALIDATION", False),
            refit_selected=get_bool("ELAPP_REFIT_SELECTED", True),
            debug=get_bool("ELAPP_DEBUG", False),
            _problems=problems,
        )

    def with_overrides(self, **overrides) -> "RunConfig":
        """New validated config; None values leave the field unchanged."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        unknown = [k for k in changes if k not in self.__dataclass_fields__ or k.startswith("_")]
        if unknown:
            raise ConfigurationError({k: "unknown setting" for k in unknown})
        if "seed" in changes and "feature_seed" not in changes and self.feature_seed == self.seed:
            changes["feature_seed"] = changes["seed"]
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        """Provenance echo written into every artifact."""
        return {
            "algorithm": self.algorithm,
            "budget": self.budget,
            "multiplier": self.multiplier,
            "dim": self.dim,
            "instances": self.instances,
            "functions": list(self.functions),
            "target": self.target,
            "grid": self.grid,
            "weight_on_validation": self.weight_on_validation,
            "refit_selected": self.refit_selected,
            "seed": self.seed,
            "feature_seed": self.feature_seed,
            "fit_workers": self.fit_workers,
            "fold_workers": self.fold_workers,
        }
