"""Benchmark function catalog, seeded instances and uniform design sampling.

Every base formula below is written in the transformed coordinates
z = R(x - shift) and attains its global minimum 0 at z = 0.
"""
import hashlib
import logging
from functools import lru_cache
from typing import Callable, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from src.errors import ContractError, DataError
from src.models.benchmark import BenchmarkFunction, DesignSet, ProblemInstance


logger = logging.getLogger(__name__)

LOWER_BOUND = -5.0
UPPER_BOUND = 5.0
SHIFT_RADIUS = 4.0

SCHWEFEL_ARGMAX = 420.9687462275036
SCHWEFEL_RANGE = 500.0


class CatalogError(DataError):
    """Raised for unknown function ids or unsupported dimensions."""
    pass


def _ramp(d: int) -> np.ndarray:
    """i / (d - 1) for i = 0..d-1 (1.0 when d = 1)."""
    if d == 1:
        return np.ones(1)
    return np.arange(d) / (d - 1.0)


def _conditioning(alpha: float, d: int) -> np.ndarray:
    """Diagonal of the alpha^(0.5 i/(d-1)) scaling matrix."""
    return np.power(alpha, 0.5 * _ramp(d))


def _rastrigin_core(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    return 10.0 * (d - np.sum(np.cos(2.0 * np.pi * z), axis=1)) + np.sum(z ** 2, axis=1)


def _rosenbrock_terms(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    u = max(1.0, np.sqrt(d) / 8.0) * z + 1.0
    return 100.0 * (u[:, :-1] ** 2 - u[:, 1:]) ** 2 + (u[:, :-1] - 1.0) ** 2


def sphere(z: np.ndarray) -> np.ndarray:
    return np.sum(z ** 2, axis=1)


def ellipsoidal(z: np.ndarray) -> np.ndarray:
    return np.sum(np.power(10.0, 6.0 * _ramp(z.shape[1])) * z ** 2, axis=1)


def rastrigin(z: np.ndarray) -> np.ndarray:
    return _rastrigin_core(z * _conditioning(10.0, z.shape[1]))


def bueche_rastrigin(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    scale = np.power(10.0, 0.5 * _ramp(d))
    odd = (np.arange(d) % 2 == 0)
    boosted = np.where((z > 0.0) & odd, 10.0 * scale, scale)
    return _rastrigin_core(boosted * z)


def linear_slope(z: np.ndarray) -> np.ndarray:
    # Absolute-value slope so the optimum sits at the instance shift
    return np.sum(np.power(10.0, _ramp(z.shape[1])) * np.abs(z), axis=1)


def attractive_sector(z: np.ndarray) -> np.ndarray:
    u = z * _conditioning(10.0, z.shape[1])
    s = np.where(u > 0.0, 100.0, 1.0)
    return np.power(np.sum((s * u) ** 2, axis=1), 0.9)


def step_ellipsoidal(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    z_hat = z * _conditioning(10.0, d)
    z_tilde = np.where(
        np.abs(z_hat) > 0.5,
        np.floor(0.5 + z_hat),
        np.floor(0.5 + 10.0 * z_hat) / 10.0,
    )
    body = np.sum(100.0 * np.power(10.0, 2.0 * _ramp(d)) * z_tilde ** 2, axis=1)
    return 0.1 * np.maximum(np.abs(z_hat[:, 0]) / 1e4, body)


def rosenbrock(z: np.ndarray) -> np.ndarray:
    return np.sum(_rosenbrock_terms(z), axis=1)


def discus(z: np.ndarray) -> np.ndarray:
    return 1e6 * z[:, 0] ** 2 + np.sum(z[:, 1:] ** 2, axis=1)


def bent_cigar(z: np.ndarray) -> np.ndarray:
    return z[:, 0] ** 2 + 1e6 * np.sum(z[:, 1:] ** 2, axis=1)


def sharp_ridge(z: np.ndarray) -> np.ndarray:
    u = z * _conditioning(10.0, z.shape[1])
    return u[:, 0] ** 2 + 100.0 * np.sqrt(np.sum(u[:, 1:] ** 2, axis=1))


def different_powers(z: np.ndarray) -> np.ndarray:
    exponents = 2.0 + 4.0 * _ramp(z.shape[1])
    return np.sqrt(np.sum(np.power(np.abs(z), exponents), axis=1))


_WEIERSTRASS_K = np.arange(12)
_WEIERSTRASS_A = np.power(0.5, _WEIERSTRASS_K)
_WEIERSTRASS_B = np.power(3.0, _WEIERSTRASS_K)
_WEIERSTRASS_F0 = float(np.sum(_WEIERSTRASS_A * np.cos(np.pi * _WEIERSTRASS_B)))


def weierstrass(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    u = z * _conditioning(0.01, d)
    waves = _WEIERSTRASS_A * np.cos(2.0 * np.pi * _WEIERSTRASS_B * (u[:, :, None] + 0.5))
    inner = np.sum(waves, axis=(1, 2)) / d - _WEIERSTRASS_F0
    # Rounding can push the inner term a hair below zero near the optimum
    return 10.0 * np.maximum(inner, 0.0) ** 3


def _schaffers(z: np.ndarray, alpha: float) -> np.ndarray:
    d = z.shape[1]
    u = z * _conditioning(alpha, d)
    s = np.sqrt(u[:, :-1] ** 2 + u[:, 1:] ** 2)
    root = np.sqrt(s)
    body = np.sum(root + root * np.sin(50.0 * np.power(s, 0.2)) ** 2, axis=1)
    return (body / (d - 1.0)) ** 2


def schaffers_f7(z: np.ndarray) -> np.ndarray:
    return _schaffers(z, 10.0)


def schaffers_f7_ill_conditioned(z: np.ndarray) -> np.ndarray:
    return _schaffers(z, 1000.0)


def griewank_rosenbrock(z: np.ndarray) -> np.ndarray:
    s = _rosenbrock_terms(z)
    d = z.shape[1]
    return 10.0 * np.sum(s / 4000.0 - np.cos(s), axis=1) / (d - 1.0) + 10.0


def _schwefel_wave(u: np.ndarray) -> np.ndarray:
    clipped = np.clip(u, -SCHWEFEL_RANGE, SCHWEFEL_RANGE)
    return clipped * np.sin(np.sqrt(np.abs(clipped)))


_SCHWEFEL_PEAK = float(_schwefel_wave(np.array([SCHWEFEL_ARGMAX]))[0])


def schwefel(z: np.ndarray) -> np.ndarray:
    # z = 0 maps onto the argmax of the wave; outside the range a quadratic penalty applies
    u = SCHWEFEL_ARGMAX + 100.0 * z * _conditioning(10.0, z.shape[1])
    gap = np.mean(_SCHWEFEL_PEAK - _schwefel_wave(u), axis=1)
    overflow = np.maximum(0.0, np.abs(u) - SCHWEFEL_RANGE) / 100.0
    return np.maximum(gap, 0.0) + np.sum(overflow ** 2, axis=1)


@lru_cache(maxsize=None)
def _gallagher_peaks(function_id: int, dim: int, n_peaks: int, best_alpha: float):
    """Seeded peak locations, weights and diagonal shapes; peak 0 sits at z = 0."""
    rng = np.random.default_rng(_hash_seed("gallagher", function_id, dim))
    weights = np.empty(n_peaks)
    weights[0] = 10.0
    weights[1:] = 1.1 + 8.0 * np.arange(n_peaks - 1) / (n_peaks - 2.0)
    alpha_set = np.power(1000.0, 2.0 * np.arange(n_peaks - 1) / (n_peaks - 2.0))
    alphas = np.concatenate([[best_alpha], rng.permutation(alpha_set)])
    shapes = np.empty((n_peaks, dim))
    for i, alpha in enumerate(alphas):
        shapes[i] = rng.permutation(np.power(alpha, 0.5 * _ramp(dim))) / alpha ** 0.25
    span = 4.9 if n_peaks == 21 else 5.0
    centers = rng.uniform(-span, span, size=(n_peaks, dim))
    centers[0] = 0.0
    for arr in (weights, shapes, centers):
        arr.setflags(write=False)
    return weights, shapes, centers


def _gallagher(z: np.ndarray, function_id: int, n_peaks: int, best_alpha: float) -> np.ndarray:
    d = z.shape[1]
    weights, shapes, centers = _gallagher_peaks(function_id, d, n_peaks, best_alpha)
    diff = z[:, None, :] - centers[None, :, :]
    energy = np.sum(shapes[None, :, :] * diff ** 2, axis=2)
    heights = weights[None, :] * np.exp(-energy / (2.0 * d))
    return (10.0 - np.max(heights, axis=1)) ** 2


def gallagher_101(z: np.ndarray) -> np.ndarray:
    return _gallagher(z, 21, 101, 1000.0)


def gallagher_21(z: np.ndarray) -> np.ndarray:
    return _gallagher(z, 22, 21, 1000.0 ** 2)


def katsuura(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    u = z * _conditioning(100.0, d)
    powers = np.power(2.0, np.arange(1, 33))
    scaled = powers * u[:, :, None]
    inner = np.sum(np.abs(scaled - np.round(scaled)) / powers, axis=2)
    prod = np.prod(np.power(1.0 + np.arange(1, d + 1) * inner, 10.0 / d ** 1.2), axis=1)
    return (10.0 / d ** 2) * (prod - 1.0)


def lunacek(z: np.ndarray) -> np.ndarray:
    d = z.shape[1]
    mu0 = 2.5
    s = 1.0 - 1.0 / (2.0 * np.sqrt(d + 20.0) - 8.2)
    mu1 = -np.sqrt((mu0 ** 2 - 1.0) / s)
    x_hat = z + mu0
    sphere_0 = np.sum((x_hat - mu0) ** 2, axis=1)
    sphere_1 = d + s * np.sum((x_hat - mu1) ** 2, axis=1)
    waves = 10.0 * (d - np.sum(np.cos(2.0 * np.pi * z * _conditioning(100.0, d)), axis=1))
    return np.minimum(sphere_0, sphere_1) + waves


_CATALOG: Dict[int, BenchmarkFunction] = {
    1: BenchmarkFunction(1, "Sphere", True, False, rotated=False),
    2: BenchmarkFunction(2, "Ellipsoidal", True, False, rotated=False),
    3: BenchmarkFunction(3, "Rastrigin", True, True, rotated=False),
    4: BenchmarkFunction(4, "Bueche-Rastrigin", True, True, rotated=False),
    5: BenchmarkFunction(5, "Linear Slope", True, False, rotated=False),
    6: BenchmarkFunction(6, "Attractive Sector", False, False),
    7: BenchmarkFunction(7, "Step Ellipsoidal", False, False),
    8: BenchmarkFunction(8, "Rosenbrock", False, False, min_dim=2, rotated=False),
    9: BenchmarkFunction(9, "Rosenbrock Rotated", False, False, min_dim=2),
    10: BenchmarkFunction(10, "Ellipsoidal Rotated", False, False),
    11: BenchmarkFunction(11, "Discus", False, False),
    12: BenchmarkFunction(12, "Bent Cigar", False, False),
    13: BenchmarkFunction(13, "Sharp Ridge", False, False),
    14: BenchmarkFunction(14, "Different Powers", False, False),
    15: BenchmarkFunction(15, "Rastrigin Rotated", False, True),
    16: BenchmarkFunction(16, "Weierstrass", False, True),
    17: BenchmarkFunction(17, "Schaffers F7", False, True, min_dim=2),
    18: BenchmarkFunction(18, "Schaffers F7 Ill-Conditioned", False, True, min_dim=2),
    19: BenchmarkFunction(19, "Griewank-Rosenbrock", False, True, min_dim=2),
    20: BenchmarkFunction(20, "Schwefel", False, True),
    21: BenchmarkFunction(21, "Gallagher 101 Peaks", False, True),
    22: BenchmarkFunction(22, "Gallagher 21 Peaks", False, True),
    23: BenchmarkFunction(23, "Katsuura", False, True),
    24: BenchmarkFunction(24, "Lunacek bi-Rastrigin", False, True),
}

_FORMULAS: Dict[int, Callable[[np.ndarray], np.ndarray]] = {
    1: sphere,
    2: ellipsoidal,
    3: rastrigin,
    4: bueche_rastrigin,
    5: linear_slope,
    6: attractive_sector,
    7: step_ellipsoidal,
    8: rosenbrock,
    9: rosenbrock,
    10: ellipsoidal,
    11: discus,
    12: bent_cigar,
    13: sharp_ridge,
    14: different_powers,
    15: rastrigin,
    16: weierstrass,
    17: schaffers_f7,
    18: schaffers_f7_ill_conditioned,
    19: griewank_rosenbrock,
    20: schwefel,
    21: gallagher_101,
    22: gallagher_21,
    23: katsuura,
    24: lunacek,
}


def _hash_seed(*parts) -> int:
    """Stable 32-bit seed from the given parts."""
    digest = hashlib.sha256(":".join(str(p) for p in parts).encode("utf-8")).digest()
    return int.from_bytes(digest[:4], "big")


def catalog() -> List[BenchmarkFunction]:
    """The 24 catalog entries in id order."""
    return [_CATALOG[fid] for fid in sorted(_CATALOG)]


def get_function(function_id: int) -> BenchmarkFunction:
    """Look up a catalog entry.

    Raises:
        CatalogError: If function_id is not in 1..24
    """
    try:
        return _CATALOG[int(function_id)]
    except (KeyError, TypeError, ValueError):
        raise CatalogError(f"Unknown benchmark function id: {function_id!r} (expected 1..24)")


def rotation_matrix(seed: int, dim: int) -> np.ndarray:
    """Orthogonal basis by Gram-Schmidt on a seeded Gaussian matrix."""
    basis = np.random.default_rng(seed).standard_normal((dim, dim))
    for i in range(dim):
        for j in range(i):
            basis[i] = basis[i] - np.dot(basis[i], basis[j]) * basis[j]
        basis[i] = basis[i] / np.sqrt(np.sum(basis[i] ** 2))
    return basis


def instantiate(function_id: int, instance_id: int, dim: int) -> ProblemInstance:
    """Create the seeded instance (function_id, instance_id) in dimension dim.

    Instance 0 is the untransformed base function.

    Raises:
        CatalogError: Unknown function or dim below the formula's minimum
        ContractError: Negative instance id or non-positive dim
    """
    func = get_function(function_id)
    if instance_id < 0:
        raise ContractError(f"instance_id must be >= 0, got {instance_id}")
    if dim < 1:
        raise ContractError(f"dim must be >= 1, got {dim}")
    if dim < func.min_dim:
        raise CatalogError(f"Function {function_id} ({func.name}) needs dim >= {func.min_dim}, got {dim}")

    if instance_id == 0:
        shift = np.zeros(dim)
        rotation_seed = 0
        rotation = np.eye(dim)
    else:
        shift_rng = np.random.default_rng(_hash_seed("shift", function_id, instance_id, dim))
        shift = shift_rng.uniform(-SHIFT_RADIUS, SHIFT_RADIUS, size=dim)
        rotation_seed = _hash_seed("rotation", function_id, instance_id, dim)
        rotation = rotation_matrix(rotation_seed, dim) if func.rotated else np.eye(dim)

    shift.setflags(write=False)
    rotation.setflags(write=False)
    return ProblemInstance(
        function_id=func.function_id,
        instance_id=int(instance_id),
        dim=int(dim),
        shift=shift,
        rotation_seed=rotation_seed,
        rotation=rotation,
        lower=LOWER_BOUND,
        upper=UPPER_BOUND,
    )


def evaluate_batch(inst: ProblemInstance, X) -> np.ndarray:
    """Evaluate an n x d matrix of points.

    Raises:
        ContractError: If the column count differs from inst.dim
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X.reshape(1, -1)
    if X.ndim != 2 or X.shape[1] != inst.dim:
        raise ContractError(f"Expected points of dimension {inst.dim}, got shape {X.shape}")
    z = (X - inst.shift) @ inst.rotation.T
    return _FORMULAS[inst.function_id](z)


def evaluate(inst: ProblemInstance, x) -> float:
    """f(R(x - shift)) for one point."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size != inst.dim:
        raise ContractError(f"Expected a point of dimension {inst.dim}, got shape {x.shape}")
    return float(evaluate_batch(inst, x.reshape(1, -1))[0])


def optimum_value(inst: ProblemInstance) -> float:
    """Global minimum value; every catalog formula attains 0 at its shift."""
    get_function(inst.function_id)
    return 0.0


def uniform_sample(inst: ProblemInstance, budget_multiplier: int, seed: int) -> DesignSet:
    """Draw budget_multiplier * dim points uniformly over the box and evaluate them."""
    if budget_multiplier < 1:
        raise ContractError(f"budget_multiplier must be positive, got {budget_multiplier}")
    n = int(budget_multiplier) * inst.dim
    rng = np.random.default_rng(seed)
    points = rng.uniform(inst.lower, inst.upper, size=(n, inst.dim))
    fitness = evaluate_batch(inst, points)
    return DesignSet(
        points=points,
        fitness=fitness,
        problem_id=inst.function_id,
        instance_id=inst.instance_id,
        seed=int(seed),
    )


def build_suite(
    function_ids: Optional[Iterable[int]] = None,
    instance_ids: Sequence[int] = (1, 2, 3, 4, 5),
    dim: int = 5,
) -> List[ProblemInstance]:
    """Instances for every (function, instance) pair, ordered by (function_id, instance_id)."""
    fids = sorted(set(function_ids)) if function_ids is not None else sorted(_CATALOG)
    iids = sorted(set(int(i) for i in instance_ids))
    suite = [instantiate(fid, iid, dim) for fid in fids for iid in iids]
    logger.info(f"Built suite: {len(fids)} functions x {len(iids)} instances, dim={dim}")
    return suite


def design_set_table(design_sets: Sequence[DesignSet]) -> pd.DataFrame:
    """Long table with columns problem_id, instance_id, dim, seed, x1..xd, fitness."""
    if not design_sets:
        raise ContractError("No design sets to tabulate")
    dims = {ds.dim for ds in design_sets}
    if len(dims) != 1:
        raise ContractError(f"Design sets mix dimensions: {sorted(dims)}")
    d = dims.pop()
    frames = []
    for ds in design_sets:
        frame = pd.DataFrame(ds.points, columns=[f"x{i + 1}" for i in range(d)])
        frame.insert(0, "seed", ds.seed)
        frame.insert(0, "dim", d)
        frame.insert(0, "instance_id", ds.instance_id)
        frame.insert(0, "problem_id", ds.problem_id)
        frame["fitness"] = ds.fitness
        frames.append(frame)
    return pd.concat(frames, ignore_index=True)
