"""Regression and classifier configuration data models."""
import re
from dataclasses import dataclass
from typing import Optional

from src.errors import ContractError


DECISION_TREE = "DecisionTree"
RANDOM_FOREST = "RandomForest"
BAGGING_DT = "BaggingDT"

TECHNIQUES = (DECISION_TREE, RANDOM_FOREST, BAGGING_DT)
REGRESSION_CRITERIA = ("mse", "mae", "friedman_mse")
SPLIT_MEASURES = ("gini", "entropy")
MINSPLIT_GRID = tuple(range(2, 21, 2))
NEST_GRID = tuple(range(10, 101, 10))

# Accepts both "crit-mse_minsplit-6" and "crit.mse_minsplit.6" spellings
_NAME_PATTERN = re.compile(
    r"^(?P<technique>DecisionTree|RandomForest|BaggingDT)"
    r"_crit[-.](?P<crit>friedman_mse|mse|mae|gini|entropy)"
    r"_minsplit[-.](?P<minsplit>\d+)"
    r"(?:_nest[-.](?P<nest>\d+))?$"
)


@dataclass(frozen=True, order=True)
class RMConfig:
    """One hyperparameter point of a regression technique.

    Attributes:
        technique: DecisionTree, RandomForest or BaggingDT
        crit: Split criterion (mse, mae, friedman_mse)
        minsplit: Minimum number of samples a node needs to be split
        nest: Number of trees (None for DecisionTree)
    """
    technique: str
    crit: str
    minsplit: int
    nest: Optional[int] = None

    def __post_init__(self):
        if self.technique not in TECHNIQUES:
            raise ContractError(f"Unknown regression technique: {self.technique}")
        allowed = REGRESSION_CRITERIA if self.technique == DECISION_TREE else REGRESSION_CRITERIA[:2]
        if self.crit not in allowed:
            raise ContractError(f"{self.technique} does not admit crit={self.crit}")
        if self.minsplit not in MINSPLIT_GRID:
            raise ContractError(f"minsplit must be one of {MINSPLIT_GRID}, got {self.minsplit}")
        if self.technique == DECISION_TREE:
            if self.nest is not None:
                raise ContractError("DecisionTree configs carry no nest")
        elif self.nest not in NEST_GRID:
            raise ContractError(f"nest must be one of {NEST_GRID}, got {self.nest}")

    @property
    def is_ensemble(self) -> bool:
        """True for RandomForest and BaggingDT."""
        return self.technique != DECISION_TREE

    @property
    def canonical_name(self) -> str:
        """Stable external identifier, e.g. RandomForest_crit-mse_minsplit-6_nest-20."""
        name = f"{self.technique}_crit-{self.crit}_minsplit-{self.minsplit}"
        if self.nest is not None:
            name += f"_nest-{self.nest}"
        return name

    @property
    def grid_key(self) -> tuple:
        """Sort key of the stable grid order (technique, crit, minsplit, nest)."""
        return (
            TECHNIQUES.index(self.technique),
            REGRESSION_CRITERIA.index(self.crit),
            self.minsplit,
            self.nest or 0,
        )

    @classmethod
    def parse(cls, name: str) -> "RMConfig":
        """Parse a canonical name back into a config.

        Raises:
            ContractError: If the name does not follow the canonical pattern
        """
        match = _NAME_PATTERN.match(name.strip())
        if not match:
            raise ContractError(f"Not a canonical regression model name: {name!r}")
        nest = match.group("nest")
        return cls(
            technique=match.group("technique"),
            crit=match.group("crit"),
            minsplit=int(match.group("minsplit")),
            nest=int(nest) if nest is not None else None,
        )

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "technique": self.technique,
            "crit": self.crit,
            "minsplit": self.minsplit,
            "nest": self.nest,
            "canonical_name": self.canonical_name,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RMConfig":
        """Create RMConfig from dictionary."""
        return cls(
            technique=data["technique"],
            crit=data["crit"],
            minsplit=int(data["minsplit"]),
            nest=int(data["nest"]) if data.get("nest") is not None else None,
        )


@dataclass(frozen=True)
class ClassifierConfig:
    """One member of the problem-class classifier ensemble.

    Attributes:
        technique: RandomForest or BaggingDT
        split_measure: gini or entropy
        minsplit: Minimum number of samples a node needs to be split
        nest: Number of trees
    """
    technique: str
    split_measure: str
    minsplit: int = 2
    nest: int = 9

    def __post_init__(self):
        if self.technique not in (RANDOM_FOREST, BAGGING_DT):
            raise ContractError(f"Classifier members are RandomForest or BaggingDT, got {self.technique}")
        if self.split_measure not in SPLIT_MEASURES:
            raise ContractError(f"Unknown split measure: {self.split_measure}")
        if self.minsplit < 2 or self.nest < 1:
            raise ContractError(f"Invalid classifier member minsplit={self.minsplit} nest={self.nest}")

    @property
    def canonical_name(self) -> str:
        """E.g. BaggingDT_crit-entropy_minsplit-2_nest-9."""
        return f"{self.technique}_crit-{self.split_measure}_minsplit-{self.minsplit}_nest-{self.nest}"

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "technique": self.technique,
            "split_measure": self.split_measure,
            "minsplit": self.minsplit,
            "nest": self.nest,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClassifierConfig":
        """Create ClassifierConfig from dictionary."""
        return cls(
            technique=data["technique"],
            split_measure=data["split_measure"],
            minsplit=int(data["minsplit"]),
            nest=int(data["nest"]),
        )


DEFAULT_CLASSIFIER_MEMBERS = (
    ClassifierConfig(BAGGING_DT, "entropy", minsplit=2, nest=9),
    ClassifierConfig(RANDOM_FOREST, "entropy", minsplit=2, nest=9),
    ClassifierConfig(RANDOM_FOREST, "gini", minsplit=2, nest=9),
)
