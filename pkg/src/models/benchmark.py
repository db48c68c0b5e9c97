"""Benchmark function, problem instance and design set data models."""
from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from src.errors import ContractError, DataError


@dataclass(frozen=True)
class BenchmarkFunction:
    """Catalog entry for one base benchmark function.

    Attributes:
        function_id: Problem index 1..24
        name: Human readable name (e.g., "Attractive Sector")
        separable: Separable functions are never rotated
        multimodal: Metadata only
        min_dim: Smallest dimension the base formula supports
        rotated: Whether instances apply the seeded rotation
    """
    function_id: int
    name: str
    separable: bool
    multimodal: bool
    min_dim: int = 1
    rotated: bool = True

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "function_id": self.function_id,
            "name": self.name,
            "separable": self.separable,
            "multimodal": self.multimodal,
            "min_dim": self.min_dim,
            "rotated": self.rotated,
        }


@dataclass(frozen=True)
class ProblemInstance:
    """A seeded instance of a benchmark function.

    Attributes:
        function_id: Benchmark function identity
        instance_id: Instance index (0 = untransformed base function)
        dim: Search space dimension
        shift: Optimum location, strictly inside bounds
        rotation_seed: Seed of the orthogonal rotation
        rotation: d x d orthogonal matrix derived from rotation_seed
        lower: Lower box bound
        upper: Upper box bound
    """
    function_id: int
    instance_id: int
    dim: int
    shift: np.ndarray = field(repr=False)
    rotation_seed: int
    rotation: np.ndarray = field(repr=False)
    lower: float = -5.0
    upper: float = 5.0

    @property
    def key(self) -> Tuple[int, int]:
        """(problem_id, instance_id) join key."""
        return (self.function_id, self.instance_id)

    @property
    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        """Per-coordinate (lower, upper) bound vectors."""
        return (
            np.full(self.dim, self.lower, dtype=float),
            np.full(self.dim, self.upper, dtype=float),
        )

    def to_dict(self) -> dict:
        """Convert to dictionary."""
        return {
            "function_id": self.function_id,
            "instance_id": self.instance_id,
            "dim": self.dim,
            "shift": self.shift.tolist(),
            "rotation_seed": self.rotation_seed,
            "lower": self.lower,
            "upper": self.upper,
        }


@dataclass(frozen=True)
class DesignSet:
    """An evaluated sample {(x, f(x))} of one problem instance.

    Attributes:
        points: n x d matrix of sampled points
        fitness: Length-n vector of objective values
        problem_id: Function identity of the sampled instance
        instance_id: Instance identity of the sampled instance
        seed: Seed of the sampling stream
    """
    points: np.ndarray = field(repr=False)
    fitness: np.ndarray = field(repr=False)
    problem_id: int = 0
    instance_id: int = 0
    seed: int = 0

    def __post_init__(self):
        points = np.array(self.points, dtype=float, ndmin=2)
        fitness = np.array(self.fitness, dtype=float).ravel()
        if points.shape[0] == 1 and fitness.size > 1 and points.shape[1] == fitness.size:
            # A flat 1D sample was passed in
            points = points.T
        if points.shape[0] != fitness.size:
            raise ContractError(
                f"Design set has {points.shape[0]} points but {fitness.size} fitness values"
            )
        if not np.all(np.isfinite(fitness)):
            raise DataError("Design set fitness contains non-finite values")
        points.setflags(write=False)
        fitness.setflags(write=False)
        object.__setattr__(self, "points", points)
        object.__setattr__(self, "fitness", fitness)

    @property
    def n(self) -> int:
        """Number of sampled points."""
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        """Search space dimension."""
        return int(self.points.shape[1])
