"""Personalized per-class ensemble data models."""
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from src.errors import ContractError, InternalConsistencyError
from src.models.rm_config import RMConfig
from src.models.tree import ClassifierEnsemble, TrainedRegressor


TARGET_MODES = ("raw", "natural_log")


@dataclass
class QTable:
    """Training MAE of every configuration restricted to every class.

    Attributes:
        configs: Configurations in grid order (rows)
        classes: Class labels (columns)
        values: configs x classes MAE matrix
    """
    configs: List[RMConfig]
    classes: List[int]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (len(self.configs), len(self.classes)):
            raise ContractError(
                f"q table shape {self.values.shape} does not match "
                f"{len(self.configs)} configs x {len(self.classes)} classes"
            )

    @property
    def names(self) -> List[str]:
        return [c.canonical_name for c in self.configs]

    def column(self, class_id: int) -> np.ndarray:
        """q values of all configurations for one class."""
        try:
            return self.values[:, self.classes.index(int(class_id))]
        except ValueError:
            raise ContractError(f"Class {class_id} is not in the q table")

    def value(self, name: str, class_id: int) -> float:
        return float(self.column(class_id)[self.names.index(name)])


@dataclass(frozen=True)
class EnsembleMember:
    """One technique's selected configuration within a class ensemble.

    Attributes:
        model: Fitted regressor of the selected configuration
        q: Its MAE on the class's weighting rows
        weight: Its share of the final prediction
    """
    model: TrainedRegressor
    q: float
    weight: float

    @property
    def config(self) -> RMConfig:
        return self.model.config


@dataclass(frozen=True)
class ClassEnsemble:
    """Weighted best-per-technique ensemble of one problem class."""
    class_id: int
    members: Tuple[EnsembleMember, ...]

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        techniques = [m.config.technique for m in self.members]
        if len(set(techniques)) != len(techniques):
            raise ContractError(f"Class {self.class_id} ensemble repeats a technique: {techniques}")
        weights = np.array([m.weight for m in self.members])
        if np.any(weights < 0.0) or abs(float(np.sum(weights)) - 1.0) > 1e-12:
            raise InternalConsistencyError(
                f"Class {self.class_id} weights {weights.tolist()} are not a probability vector"
            )

    @property
    def weights(self) -> np.ndarray:
        return np.array([m.weight for m in self.members])

    @property
    def canonical_names(self) -> List[str]:
        return [m.config.canonical_name for m in self.members]

    def member_predictions(self, X) -> np.ndarray:
        """members x samples prediction matrix."""
        return np.vstack([m.model.predict_batch(X) for m in self.members])

    def predict_batch(self, X) -> np.ndarray:
        """Weighted sum of the member predictions."""
        return self.weights @ self.member_predictions(X)

    def to_dict(self) -> dict:
        return {
            "class_id": self.class_id,
            "members": [
                {"model": m.model.to_dict(), "q": m.q, "weight": m.weight} for m in self.members
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ClassEnsemble":
        return cls(
            class_id=int(data["class_id"]),
            members=tuple(
                EnsembleMember(
                    model=TrainedRegressor.from_dict(m["model"]),
                    q=float(m["q"]),
                    weight=float(m["weight"]),
                )
                for m in data["members"]
            ),
        )


@dataclass(frozen=True)
class PersonalizedModel:
    """Classifier gate plus one weighted ensemble per problem class.

    Attributes:
        classifier: Voting classifier over problem classes
        ensembles: class_id -> ClassEnsemble
        target_transform: raw or natural_log
        feature_names: Column order the model was trained on
        seed: Training seed
        metadata: Provenance (algorithm, budget, flags)
    """
    classifier: ClassifierEnsemble
    ensembles: Dict[int, ClassEnsemble]
    target_transform: str = "natural_log"
    feature_names: Tuple[str, ...] = ()
    seed: int = 0
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.target_transform not in TARGET_MODES:
            raise ContractError(f"Unknown target transform: {self.target_transform}")
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        if set(self.classifier.labels) != set(self.ensembles):
            raise InternalConsistencyError(
                f"Classifier labels {sorted(self.classifier.labels)} differ from "
                f"ensemble classes {sorted(self.ensembles)}"
            )

    @property
    def classes(self) -> List[int]:
        return sorted(self.ensembles)

    def ensemble(self, class_id: int) -> ClassEnsemble:
        """Ensemble of one class.

        Raises:
            ContractError: If the class was not seen in training
        """
        try:
            return self.ensembles[int(class_id)]
        except KeyError:
            raise ContractError(f"No ensemble for class {class_id}; known classes {self.classes}")

    def composition(self) -> Dict[int, List[Tuple[str, float, float]]]:
        """class_id -> [(canonical_name, q, weight)] per member."""
        return {
            cid: [(m.config.canonical_name, m.q, m.weight) for m in ens.members]
            for cid, ens in sorted(self.ensembles.items())
        }

    def to_dict(self) -> dict:
        """Convert to dictionary (trees included)."""
        return {
            "classifier": self.classifier.to_dict(),
            "ensembles": {str(cid): ens.to_dict() for cid, ens in sorted(self.ensembles.items())},
            "target_transform": self.target_transform,
            "feature_names": list(self.feature_names),
            "seed": self.seed,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PersonalizedModel":
        """Create PersonalizedModel from dictionary."""
        return cls(
            classifier=ClassifierEnsemble.from_dict(data["classifier"]),
            ensembles={int(cid): ClassEnsemble.from_dict(e) for cid, e in data["ensembles"].items()},
            target_transform=data["target_transform"],
            feature_names=tuple(data.get("feature_names", ())),
            seed=int(data.get("seed", 0)),
            metadata=data.get("metadata", {}),
        )
