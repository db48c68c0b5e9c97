"""Thread-pool execution of independent pipeline tasks."""
import logging
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, List, Optional, Sequence, TypeVar


logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class ParallelProcessor:
    """Runs independent tasks on a thread pool, results in input order."""

    def __init__(self, max_workers: int = 4, logger_service=None, operation_type: str = "parallel"):
        """Initialize processor.

        Args:
            max_workers: Thread pool size; 1 runs tasks inline
            logger_service: Logger service for status updates
            operation_type: Stage tag used in log entries
        """
        self.max_workers = max(1, int(max_workers))
        self.logger_service = logger_service
        self.operation_type = operation_type

    def map_ordered(self, fn: Callable[[T], R], items: Sequence[T], label: str = "tasks") -> List[R]:
        """Apply fn to every item and return results in input order.

        Every task runs to completion; if any failed, the first failure in
        input order is re-raised after a warning summarising the error count.

        Args:
            fn: Task function
            items: Task inputs
            label: Human readable name of the batch

        Returns:
            List of results aligned with items
        """
        items = list(items)
        start_time = time.time()
        results: List[Optional[R]] = [None] * len(items)
        errors: List[Optional[BaseException]] = [None] * len(items)

        if self.max_workers == 1 or len(items) <= 1:
            for i, item in enumerate(items):
                try:
                    results[i] = fn(item)
                except Exception as e:
                    errors[i] = e
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                futures = {executor.submit(fn, item): i for i, item in enumerate(items)}
                for future in as_completed(futures):
                    i = futures[future]
                    try:
                        results[i] = future.result()
                    except Exception as e:
                        errors[i] = e

        failed = [e for e in errors if e is not None]
        if failed:
            msg = f"{len(failed)}/{len(items)} {label} failed: {failed[0]}"
            logger.warning(msg)
            if self.logger_service:
                self.logger_service.log("WARNING", msg, operation_type=self.operation_type)
            raise failed[0]

        logger.debug(
            f"{len(items)} {label} finished in {time.time() - start_time:.2f}s "
            f"({self.max_workers} workers)"
        )
        return results
