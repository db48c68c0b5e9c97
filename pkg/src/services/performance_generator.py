"""Fixed-budget performance data from simple built-in optimizers."""
import logging
import time
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from src.errors import ContractError
from src.models.benchmark import ProblemInstance
from src.models.performance_record import PerformanceRecord
from src.services.problem_suite import evaluate_batch, optimum_value


logger = logging.getLogger(__name__)

RANDOM_SEARCH = "random-search"
ONE_PLUS_ONE_ES = "(1+1)-ES"

# Success and failure factors balance at a 1/5 success rate
ES_SUCCESS_FACTOR = float(np.exp(1.0 / 3.0))
ES_FAILURE_FACTOR = float(np.exp(-1.0 / 12.0))
ES_MIN_SIGMA = 1e-12

_ALIASES = {
    "random-search": RANDOM_SEARCH,
    "random_search": RANDOM_SEARCH,
    "rs": RANDOM_SEARCH,
    "(1+1)-es": ONE_PLUS_ONE_ES,
    "1+1-es": ONE_PLUS_ONE_ES,
    "one-plus-one-es": ONE_PLUS_ONE_ES,
}


def normalize_optimizer(name: str) -> str:
    try:
        return _ALIASES[(name or "").strip().lower()]
    except KeyError:
        raise ContractError(f"Unknown optimizer {name!r}; expected random-search or (1+1)-ES")


def random_search_trace(inst: ProblemInstance, budget: int, rng: np.random.Generator) -> np.ndarray:
    """Fitness of `budget` uniform samples, in evaluation order."""
    points = rng.uniform(inst.lower, inst.upper, size=(budget, inst.dim))
    return evaluate_batch(inst, points)


def one_plus_one_es_trace(inst: ProblemInstance, budget: int, rng: np.random.Generator) -> np.ndarray:
    """Fitness of every evaluation of an elitist (1+1)-ES with the 1/5 success rule.

    The parent starts uniformly in the box with step size a quarter of the
    box width; offspring are clipped to the bounds.
    """
    lower, upper = inst.bounds
    sigma = (inst.upper - inst.lower) / 4.0
    parent = rng.uniform(lower, upper)
    parent_f = float(evaluate_batch(inst, parent.reshape(1, -1))[0])
    trace = np.empty(budget)
    trace[0] = parent_f
    for t in range(1, budget):
        child = np.clip(parent + sigma * rng.standard_normal(inst.dim), lower, upper)
        child_f = float(evaluate_batch(inst, child.reshape(1, -1))[0])
        trace[t] = child_f
        if child_f <= parent_f:
            parent, parent_f = child, child_f
            sigma *= ES_SUCCESS_FACTOR
        else:
            sigma = max(sigma * ES_FAILURE_FACTOR, ES_MIN_SIGMA)
    return trace


_TRACES: Dict[str, Callable[[ProblemInstance, int, np.random.Generator], np.ndarray]] = {
    RANDOM_SEARCH: random_search_trace,
    ONE_PLUS_ONE_ES: one_plus_one_es_trace,
}


def precision_at_budgets(trace: np.ndarray, optimum: float, budgets: Sequence[int]) -> List[float]:
    """Best-so-far fitness minus the optimum after each budget (floored at 0)."""
    best_so_far = np.minimum.accumulate(np.asarray(trace, dtype=float))
    return [max(0.0, float(best_so_far[b - 1]) - optimum) for b in budgets]


def run_seed(seed: int, inst: ProblemInstance) -> np.random.Generator:
    """Independent stream per (seed, function, instance)."""
    return np.random.default_rng([int(seed), inst.function_id, inst.instance_id])


def generate_performance(
    instances: Sequence[ProblemInstance],
    optimizer: str,
    budgets: Sequence[int],
    seed: int,
    algorithm_id: Optional[str] = None,
    processor=None,
    logger_service=None,
) -> List[PerformanceRecord]:
    """Run the optimizer once per instance up to the largest budget.

    Args:
        instances: Problem instances
        optimizer: random-search or (1+1)-ES
        budgets: Checkpoints (evaluations) recorded for every run
        seed: Run seed
        algorithm_id: Name written to the records (defaults to the optimizer)
        processor: ParallelProcessor over instances

    Returns:
        Records ordered by (problem_id, instance_id, budget)

    Raises:
        ContractError: Empty or nonpositive budgets
    """
    name = normalize_optimizer(optimizer)
    budgets = sorted(set(int(b) for b in budgets))
    if not budgets:
        raise ContractError("At least one budget is required")
    if budgets[0] <= 0:
        raise ContractError(f"Budgets must be positive, got {budgets}")
    algorithm = algorithm_id or name
    trace_fn = _TRACES[name]
    start = time.time()
    if logger_service:
        logger_service.log_stage_start(
            "generate", f"Running {name} on {len(instances)} instances up to {budgets[-1]} evaluations"
        )

    def run_one(inst: ProblemInstance) -> List[PerformanceRecord]:
        trace = trace_fn(inst, budgets[-1], run_seed(seed, inst))
        precisions = precision_at_budgets(trace, optimum_value(inst), budgets)
        return [
            PerformanceRecord(
                algorithm_id=algorithm,
                problem_id=inst.function_id,
                instance_id=inst.instance_id,
                budget=b,
                target_precision=p,
            )
            for b, p in zip(budgets, precisions)
        ]

    if processor is not None:
        per_instance = processor.map_ordered(run_one, list(instances), label="optimizer runs")
    else:
        per_instance = [run_one(inst) for inst in instances]
    records = sorted((r for rs in per_instance for r in rs), key=lambda r: r.key)

    if logger_service:
        logger_service.log_stage_complete(
            "generate", f"Generated {len(records)} performance records", time.time() - start, len(records)
        )
    return records
