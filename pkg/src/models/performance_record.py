"""Performance record data model."""
from dataclasses import dataclass
from typing import Tuple

from src.errors import DataError


@dataclass(frozen=True)
class PerformanceRecord:
    """Fixed-budget result of one algorithm run on one problem instance.

    Attributes:
        algorithm_id: Algorithm name (e.g., BIPOP-CMA-ES)
        problem_id: Benchmark function identity
        instance_id: Instance identity
        budget: Number of function evaluations
        target_precision: Best-so-far fitness minus the instance optimum
    """
    algorithm_id: str
    problem_id: int
    instance_id: int
    budget: int
    target_precision: float

    def __post_init__(self):
        if not self.algorithm_id:
            raise DataError("Performance record has an empty algorithm id")
        if self.budget <= 0:
            raise DataError(f"Budget must be positive, got {self.budget}", keys=[self.key])
        if not (self.target_precision >= 0.0):
            raise DataError(
                f"Target precision must be a nonnegative number, got {self.target_precision}",
                keys=[self.key],
            )

    @property
    def key(self) -> Tuple[str, int, int, int]:
        """(algorithm, problem, instance, budget) uniqueness key."""
        return (self.algorithm_id, self.problem_id, self.instance_id, self.budget)

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "algorithm": self.algorithm_id,
            "problem_id": self.problem_id,
            "instance_id": self.instance_id,
            "budget": self.budget,
            "target_precision": self.target_precision,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PerformanceRecord":
        """Create PerformanceRecord from dictionary."""
        return cls(
            algorithm_id=str(data["algorithm"]),
            problem_id=int(data["problem_id"]),
            instance_id=int(data["instance_id"]),
            budget=int(data["budget"]),
            target_precision=float(data["target_precision"]),
        )
