"""Feature configuration and feature vector data models."""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from src.errors import ContractError


def default_ic_epsilons() -> Tuple[float, ...]:
    """{0} followed by a 30-point geometric grid from 1e-5 to 1e15."""
    return (0.0,) + tuple(float(e) for e in np.geomspace(1e-5, 1e15, 30))


@dataclass(frozen=True)
class FeatureConfig:
    """Sampling and quantile parameters of the landscape feature groups.

    Attributes:
        budget_multiplier: Sample size per dimension (50 or 400)
        disp_quantiles: Elite fractions for the dispersion group
        level_quantiles: Fitness quantiles for the level-set group
        ic_epsilons: Symbolization thresholds for information content
        seed: Seed for tours, CV splits and sampling
        qda_reg_param: Covariance regularisation of the quadratic discriminant
    """
    budget_multiplier: int = 400
    disp_quantiles: Tuple[float, ...] = (0.02, 0.05, 0.10, 0.25)
    level_quantiles: Tuple[float, ...] = (0.10, 0.25, 0.50)
    ic_epsilons: Tuple[float, ...] = field(default_factory=default_ic_epsilons)
    seed: int = 42
    qda_reg_param: float = 1e-6

    def __post_init__(self):
        for name in ("disp_quantiles", "level_quantiles"):
            values = tuple(float(q) for q in getattr(self, name))
            if not values or any(q <= 0.0 or q >= 1.0 for q in values):
                raise ContractError(f"{name} must lie strictly inside (0, 1): {values}")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ContractError(f"{name} must be strictly increasing: {values}")
            object.__setattr__(self, name, values)
        eps = tuple(float(e) for e in self.ic_epsilons)
        if not eps or any(e < 0.0 for e in eps) or list(eps) != sorted(eps):
            raise ContractError("ic_epsilons must be nonnegative and sorted")
        object.__setattr__(self, "ic_epsilons", eps)
        if self.budget_multiplier <= 0:
            raise ContractError(f"budget_multiplier must be positive: {self.budget_multiplier}")

    def to_dict(self) -> dict:
        """Convert to dictionary for provenance blocks."""
        return {
            "budget_multiplier": self.budget_multiplier,
            "disp_quantiles": list(self.disp_quantiles),
            "level_quantiles": list(self.level_quantiles),
            "ic_epsilons": list(self.ic_epsilons),
            "seed": self.seed,
            "qda_reg_param": self.qda_reg_param,
        }


@dataclass(frozen=True)
class FeatureVector:
    """Landscape representation of one problem instance.

    Attributes:
        problem_id: Function identity
        instance_id: Instance identity
        names: Canonical feature names, in order
        values: Feature values aligned with names
        groups: Group tag per feature (disp, ela_level, ela_meta, ic, nbc)
    """
    problem_id: int
    instance_id: int
    names: Tuple[str, ...]
    values: np.ndarray = field(repr=False)
    groups: Tuple[str, ...] = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float).ravel()
        if values.size != len(self.names):
            raise ContractError(
                f"Feature vector has {values.size} values for {len(self.names)} names"
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "names", tuple(self.names))
        object.__setattr__(self, "groups", tuple(self.groups))

    @property
    def key(self) -> Tuple[int, int]:
        """(problem_id, instance_id) join key."""
        return (self.problem_id, self.instance_id)

    def as_dict(self) -> Dict[str, float]:
        """Ordered name -> value mapping."""
        return dict(zip(self.names, self.values.tolist()))

    def group(self, name: str) -> np.ndarray:
        """Values of one feature group, in canonical order."""
        mask = np.array([g == name for g in self.groups], dtype=bool)
        return self.values[mask]

    def __getitem__(self, name: str) -> float:
        return float(self.values[self.names.index(name)])


@dataclass
class FeatureTable:
    """Feature vectors of a set of instances, one row per (problem, instance).

    Attributes:
        names: Canonical feature names shared by every row
        keys: (problem_id, instance_id) per row
        matrix: rows x features value matrix
    """
    names: List[str]
    keys: List[Tuple[int, int]]
    matrix: np.ndarray = field(repr=False)

    @classmethod
    def from_vectors(cls, vectors: Sequence[FeatureVector]) -> "FeatureTable":
        """Stack feature vectors sharing one name order."""
        if not vectors:
            raise ContractError("Cannot build a feature table from zero vectors")
        names = list(vectors[0].names)
        for fv in vectors:
            if list(fv.names) != names:
                raise ContractError(f"Feature names of {fv.key} differ from the table's")
        matrix = np.vstack([fv.values for fv in vectors])
        return cls(names=names, keys=[fv.key for fv in vectors], matrix=matrix)

    def __len__(self) -> int:
        return len(self.keys)

    def row(self, key: Tuple[int, int]) -> np.ndarray:
        """Feature values of one instance."""
        return self.matrix[self.keys.index(key)]

    def vector(self, key: Tuple[int, int], groups: Optional[Sequence[str]] = None) -> FeatureVector:
        """Rebuild the FeatureVector of one instance."""
        return FeatureVector(
            problem_id=key[0],
            instance_id=key[1],
            names=tuple(self.names),
            values=self.row(key),
            groups=tuple(groups) if groups is not None else (),
        )
