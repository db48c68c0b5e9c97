"""Exploratory landscape analysis features.

Five groups computed from one DesignSet, emitted in this order:
disp (16), ela_meta (9), ela_level (21), ic (5), nbc (5).
Every value is finite; degenerate inputs either map to a documented
constant or raise DegenerateInputError naming the group.
"""
import logging
import math
import time
import warnings
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform
from sklearn.discriminant_analysis import (
    LinearDiscriminantAnalysis,
    QuadraticDiscriminantAnalysis,
)
from sklearn.linear_model import LinearRegression
from sklearn.model_selection import StratifiedKFold
from sklearn.preprocessing import PolynomialFeatures
from sklearn.tree import DecisionTreeClassifier

from src.errors import DataError
from src.models.benchmark import DesignSet, ProblemInstance
from src.models.feature_vector import FeatureConfig, FeatureTable, FeatureVector
from src.services import problem_suite


logger = logging.getLogger(__name__)

GROUP_ORDER = ("disp", "ela_meta", "ela_level", "ic", "nbc")
IC_SETTLING_THRESHOLD = 0.05
LEVEL_CLASSIFIERS = ("lda", "qda", "tree")
LEVEL_PAIRS = (("lda", "qda"), ("lda", "tree"), ("qda", "tree"))
MIN_LEVEL_CLASS_SIZE = 3


class DegenerateInputError(DataError):
    """Raised when a design set cannot support a feature group."""

    def __init__(self, group: str, message: str):
        self.group = group
        super().__init__(f"[{group}] {message}")


def _quantile_tag(q: float) -> str:
    return f"{int(round(q * 100)):02d}"


def feature_names(cfg: Optional[FeatureConfig] = None) -> List[str]:
    """Canonical feature names in emission order."""
    return [name for name, _ in _catalog(cfg or FeatureConfig())]


def feature_groups(cfg: Optional[FeatureConfig] = None) -> Dict[str, str]:
    """Canonical name -> group tag."""
    return dict(_catalog(cfg or FeatureConfig()))


def _catalog(cfg: FeatureConfig) -> List[Tuple[str, str]]:
    entries = []
    for stat in ("ratio_mean", "ratio_median", "diff_mean", "diff_median"):
        for q in cfg.disp_quantiles:
            entries.append((f"disp.{stat}_{_quantile_tag(q)}", "disp"))
    for name in (
        "lin_simple.adj_r2",
        "lin_simple.intercept",
        "lin_simple.coef.min",
        "lin_simple.coef.max",
        "lin_simple.coef.max_by_min",
        "lin_w_interact.adj_r2",
        "quad_simple.adj_r2",
        "quad_simple.cond",
        "quad_w_interact.adj_r2",
    ):
        entries.append((f"ela_meta.{name}", "ela_meta"))
    for q in cfg.level_quantiles:
        for clf in LEVEL_CLASSIFIERS:
            entries.append((f"ela_level.mmce_{clf}_{_quantile_tag(q)}", "ela_level"))
    for q in cfg.level_quantiles:
        for a, b in LEVEL_PAIRS:
            entries.append((f"ela_level.{a}_{b}_{_quantile_tag(q)}", "ela_level"))
    for q in cfg.level_quantiles:
        entries.append((f"ela_level.mmce_mean_{_quantile_tag(q)}", "ela_level"))
    for name in ("h_max", "eps_s", "eps_max", "eps_ratio", "m0"):
        entries.append((f"ic.{name}", "ic"))
    for name in (
        "nn_nb.sd_ratio",
        "nn_nb.mean_ratio",
        "nn_nb.cor",
        "dist_ratio.coeff_var",
        "nb_fitness.cor",
    ):
        entries.append((f"nbc.{name}", "nbc"))
    return entries


def _safe_corr(a: np.ndarray, b: np.ndarray) -> float:
    """Pearson correlation; 0 when either side is constant."""
    if np.ptp(a) == 0.0 or np.ptp(b) == 0.0:
        return 0.0
    return float(np.clip(np.corrcoef(a, b)[0, 1], -1.0, 1.0))


def _subset_size(q: float, n: int) -> int:
    # Rounding guards ceil against 0.4 * 5 = 2.0000000000000004 style noise
    return int(math.ceil(round(q * n, 9)))


def _best_order(fitness: np.ndarray) -> np.ndarray:
    """Indices sorted by (fitness, original index)."""
    return np.argsort(fitness, kind="stable")


def disp_group(ds: DesignSet, quantiles: Sequence[float]) -> np.ndarray:
    """Dispersion of the best ceil(q n) points against the whole sample."""
    order = _best_order(ds.fitness)
    all_dist = pdist(ds.points)
    if all_dist.size == 0 or np.mean(all_dist) == 0.0:
        raise DegenerateInputError("disp", "all sample points coincide")
    all_mean = float(np.mean(all_dist))
    all_median = float(np.median(all_dist))

    ratio_mean, ratio_median, diff_mean, diff_median = [], [], [], []
    for q in quantiles:
        k = _subset_size(q, ds.n)
        if k < 2:
            raise DegenerateInputError(
                "disp", f"quantile {q} selects {k} of {ds.n} points, need at least 2"
            )
        sub = pdist(ds.points[order[:k]])
        sub_mean = float(np.mean(sub))
        sub_median = float(np.median(sub))
        ratio_mean.append(sub_mean / all_mean)
        ratio_median.append(sub_median / all_median if all_median > 0.0 else 0.0)
        diff_mean.append(sub_mean - all_mean)
        diff_median.append(sub_median - all_median)
    return np.array(ratio_mean + ratio_median + diff_mean + diff_median)


def _adjusted_r2(design: np.ndarray, y: np.ndarray, model_name: str) -> Tuple[float, LinearRegression]:
    n, p = design.shape
    if n - p - 1 <= 0:
        raise DegenerateInputError(
            "ela_meta", f"{model_name} needs more than {p + 1} points, got {n}"
        )
    with_intercept = np.hstack([np.ones((n, 1)), design])
    if np.linalg.matrix_rank(with_intercept) < p + 1:
        raise DegenerateInputError("ela_meta", f"{model_name} design matrix is singular")
    model = LinearRegression().fit(design, y)
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    if ss_tot == 0.0:
        return 0.0, model
    ss_res = float(np.sum((y - model.predict(design)) ** 2))
    r2 = 1.0 - ss_res / ss_tot
    return 1.0 - (1.0 - r2) * (n - 1) / (n - p - 1), model


def _abs_ratio(numer: float, denom: float, what: str) -> float:
    if denom == 0.0:
        if numer == 0.0:
            return 1.0
        raise DegenerateInputError("ela_meta", f"{what}: zero denominator")
    return numer / denom


def ela_meta_group(ds: DesignSet) -> np.ndarray:
    """Linear and quadratic regression meta-model statistics."""
    X, y = ds.points, ds.fitness
    d = ds.dim
    if ds.n <= d + 2:
        raise DegenerateInputError("ela_meta", f"need more than {d + 2} points, got {ds.n}")

    lin_r2, lin = _adjusted_r2(X, y, "linear model")
    coef = np.abs(lin.coef_)
    coef_min, coef_max = float(np.min(coef)), float(np.max(coef))

    if d > 1:
        interact = PolynomialFeatures(degree=2, interaction_only=True, include_bias=False).fit_transform(X)
        lin_int_r2, _ = _adjusted_r2(interact, y, "linear model with interactions")
    else:
        lin_int_r2 = lin_r2

    quad_r2, quad = _adjusted_r2(np.hstack([X, X ** 2]), y, "quadratic model")
    quad_coef = np.abs(quad.coef_[d:])
    quad_cond = _abs_ratio(float(np.max(quad_coef)), float(np.min(quad_coef)), "quadratic condition")

    full = PolynomialFeatures(degree=2, include_bias=False).fit_transform(X)
    quad_int_r2, _ = _adjusted_r2(full, y, "quadratic model with interactions")

    return np.array([
        lin_r2,
        float(lin.intercept_),
        coef_min,
        coef_max,
        _abs_ratio(coef_max, coef_min, "linear coefficient ratio"),
        lin_int_r2,
        quad_r2,
        quad_cond,
        quad_int_r2,
    ])


def _level_classifier(name: str, cfg: FeatureConfig, seed: int):
    if name == "lda":
        return LinearDiscriminantAnalysis()
    if name == "qda":
        return QuadraticDiscriminantAnalysis(reg_param=cfg.qda_reg_param)
    return DecisionTreeClassifier(max_depth=2, random_state=seed)


def _mmce_ratio(a: float, b: float, n: int) -> float:
    if a == b:
        return 1.0
    return a / max(b, 1.0 / (2.0 * n))


def ela_level_group(
    ds: DesignSet,
    level_quantiles: Sequence[float],
    seed: int,
    cfg: Optional[FeatureConfig] = None,
) -> np.ndarray:
    """Cross-validated misclassification of fitness level sets."""
    cfg = cfg or FeatureConfig()
    X, n = ds.points, ds.n
    mmce_block, ratio_block, mean_block = [], [], []
    for q in level_quantiles:
        labels = (ds.fitness <= np.quantile(ds.fitness, q)).astype(int)
        counts = np.bincount(labels, minlength=2)
        if counts.min() < MIN_LEVEL_CLASS_SIZE:
            raise DegenerateInputError(
                "ela_level",
                f"quantile {q} split has label counts {counts.tolist()}, "
                f"need {MIN_LEVEL_CLASS_SIZE} per label",
            )
        folds = StratifiedKFold(n_splits=min(5, int(counts.min())), shuffle=True, random_state=seed)
        errors = {}
        for name in LEVEL_CLASSIFIERS:
            wrong = 0
            for train_idx, test_idx in folds.split(X, labels):
                clf = _level_classifier(name, cfg, seed)
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    clf.fit(X[train_idx], labels[train_idx])
                    pred = clf.predict(X[test_idx])
                wrong += int(np.sum(pred != labels[test_idx]))
            errors[name] = wrong / n
        mmce_block.extend(errors[name] for name in LEVEL_CLASSIFIERS)
        ratio_block.extend(_mmce_ratio(errors[a], errors[b], n) for a, b in LEVEL_PAIRS)
        mean_block.append(float(np.mean([errors[name] for name in LEVEL_CLASSIFIERS])))
    return np.array(mmce_block + ratio_block + mean_block)


def nearest_neighbor_tour(points: np.ndarray, seed: int) -> np.ndarray:
    """Greedy nearest-neighbor tour from a seeded start; ties go to the smaller index."""
    n = points.shape[0]
    dist = cdist(points, points)
    visited = np.zeros(n, dtype=bool)
    tour = np.empty(n, dtype=int)
    current = int(np.random.default_rng(seed).integers(n))
    for step in range(n):
        tour[step] = current
        visited[current] = True
        if step == n - 1:
            break
        row = np.where(visited, np.inf, dist[current])
        current = int(np.argmin(row))
    return tour


def _symbols(diffs: np.ndarray, eps: float) -> np.ndarray:
    return np.where(diffs > eps, 1, np.where(diffs < -eps, -1, 0))


def _block_entropy(symbols: np.ndarray) -> float:
    """Base-6 entropy over consecutive pairs of unequal symbols."""
    if symbols.size < 2:
        return 0.0
    first, second = symbols[:-1], symbols[1:]
    total = first.size
    h = 0.0
    for a in (-1, 0, 1):
        for b in (-1, 0, 1):
            if a == b:
                continue
            count = int(np.sum((first == a) & (second == b)))
            if count:
                p = count / total
                h -= p * math.log(p, 6)
    return h


def _partial_information(symbols: np.ndarray) -> float:
    nonzero = symbols[symbols != 0]
    if nonzero.size == 0:
        return 0.0
    changes = 1 + int(np.sum(nonzero[1:] != nonzero[:-1]))
    return changes / symbols.size


def ic_group(ds: DesignSet, epsilons: Sequence[float], seed: int) -> np.ndarray:
    """Information content of the fitness sequence along a nearest-neighbor tour."""
    if ds.n < 3:
        raise DegenerateInputError("ic", f"need at least 3 points, got {ds.n}")
    tour = nearest_neighbor_tour(ds.points, seed)
    diffs = np.diff(ds.fitness[tour])
    eps = np.asarray(epsilons, dtype=float)
    entropy = np.array([_block_entropy(_symbols(diffs, e)) for e in eps])
    partial = np.array([_partial_information(_symbols(diffs, e)) for e in eps])

    h_max = float(np.max(entropy))
    eps_max = float(eps[int(np.argmax(entropy))])
    settled = np.flatnonzero(entropy < IC_SETTLING_THRESHOLD)
    eps_s = float(eps[settled[0]]) if settled.size else float(eps[-1])
    m0 = float(_partial_information(_symbols(diffs, 0.0)))
    halved = np.flatnonzero(partial <= m0 / 2.0)
    eps_ratio = float(eps[halved[0]]) if halved.size else float(eps[-1])
    return np.array([h_max, eps_s, eps_max, eps_ratio, m0])


def nearest_better_distances(points: np.ndarray, fitness: np.ndarray) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Nearest-neighbor distance, nearest-better distance and nearest-better index per point.

    "Better" follows the (fitness, index) order. The best point's
    nearest-better distance is the maximum pairwise distance and its
    nearest-better index is -1.
    """
    n = points.shape[0]
    dist = squareform(pdist(points))
    off_diag = dist + np.diag(np.full(n, np.inf))
    dn = np.min(off_diag, axis=1)

    order = _best_order(fitness)
    rank = np.empty(n, dtype=int)
    rank[order] = np.arange(n)
    dnb = np.empty(n)
    nb = np.full(n, -1, dtype=int)
    for i in range(n):
        better = np.flatnonzero(rank < rank[i])
        if better.size == 0:
            dnb[i] = float(np.max(dist))
            continue
        # argmin returns the first minimum, so ties go to the smallest index
        j = better[int(np.argmin(dist[i, better]))]
        dnb[i] = dist[i, j]
        nb[i] = j
    return dn, dnb, nb


def nbc_group(ds: DesignSet) -> np.ndarray:
    """Nearest-better clustering statistics."""
    if ds.n < 3:
        raise DegenerateInputError("nbc", f"need at least 3 points, got {ds.n}")
    dn, dnb, nb = nearest_better_distances(ds.points, ds.fitness)
    sd_dnb = float(np.std(dnb, ddof=1))
    if sd_dnb == 0.0 or np.any(dnb == 0.0):
        raise DegenerateInputError("nbc", "coincident points give zero nearest-better distances")
    ratio = dn / dnb
    indegree = np.bincount(nb[nb >= 0], minlength=ds.n).astype(float)
    ratio_mean = float(np.mean(ratio))
    return np.array([
        float(np.std(dn, ddof=1)) / sd_dnb,
        float(np.mean(dn)) / float(np.mean(dnb)),
        _safe_corr(dn, dnb),
        float(np.std(ratio, ddof=1)) / ratio_mean,
        _safe_corr(ds.fitness, indegree),
    ])


def compute_features(ds: DesignSet, cfg: Optional[FeatureConfig] = None) -> FeatureVector:
    """The 56-entry feature vector of one design set.

    Raises:
        DegenerateInputError: If a group cannot be computed on this sample
    """
    cfg = cfg or FeatureConfig()
    values = np.concatenate([
        disp_group(ds, cfg.disp_quantiles),
        ela_meta_group(ds),
        ela_level_group(ds, cfg.level_quantiles, cfg.seed, cfg),
        ic_group(ds, cfg.ic_epsilons, cfg.seed),
        nbc_group(ds),
    ])
    catalog = _catalog(cfg)
    if not np.all(np.isfinite(values)):
        bad = [name for (name, _), v in zip(catalog, values) if not np.isfinite(v)]
        raise DegenerateInputError(feature_groups(cfg)[bad[0]], f"non-finite features: {bad}")
    return FeatureVector(
        problem_id=ds.problem_id,
        instance_id=ds.instance_id,
        names=tuple(name for name, _ in catalog),
        values=values,
        groups=tuple(group for _, group in catalog),
    )


def sample_seed(cfg: FeatureConfig, inst: ProblemInstance) -> int:
    """Seed of the uniform sample drawn for one instance."""
    return cfg.seed + 1000 * inst.function_id + inst.instance_id


def compute_suite_features(
    instances: Sequence[ProblemInstance],
    cfg: Optional[FeatureConfig] = None,
    processor=None,
    logger_service=None,
) -> FeatureTable:
    """Sample and featurize every instance; rows ordered by (problem_id, instance_id).

    Args:
        instances: Problem instances
        cfg: Feature configuration
        processor: ParallelProcessor for per-instance work (inline when None)
        logger_service: Logger service for stage events
    """
    cfg = cfg or FeatureConfig()
    ordered = sorted(instances, key=lambda inst: inst.key)
    start = time.time()
    if logger_service:
        logger_service.log_stage_start(
            "features",
            f"Computing features for {len(ordered)} instances (multiplier {cfg.budget_multiplier})",
        )

    def featurize(inst: ProblemInstance) -> FeatureVector:
        ds = problem_suite.uniform_sample(inst, cfg.budget_multiplier, sample_seed(cfg, inst))
        return compute_features(ds, cfg)

    if processor is not None:
        vectors = processor.map_ordered(featurize, ordered, label="feature vectors")
    else:
        vectors = [featurize(inst) for inst in ordered]

    table = FeatureTable.from_vectors(vectors)
    if logger_service:
        logger_service.log_stage_complete(
            "features", f"Computed {len(table)} feature vectors", time.time() - start, len(table)
        )
    return table
