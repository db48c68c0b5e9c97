"""Logger Service for structured pipeline logging."""
import json
import logging
import threading
import traceback
from datetime import datetime
from typing import Optional, List
from dataclasses import dataclass, field


logger = logging.getLogger(__name__)


@dataclass
class LogEntry:
    """A single log entry."""
    timestamp: datetime
    level: str
    message: str
    operation_type: Optional[str] = None
    problem_id: Optional[int] = None
    fold: Optional[int] = None
    duration: Optional[float] = None
    status: Optional[str] = None
    records_count: Optional[int] = None
    error_message: Optional[str] = None
    context: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        """Convert to dictionary for JSON serialization."""
        return {
            "timestamp": self.timestamp.isoformat(),
            "level": self.level,
            "message": self.message,
            "operation_type": self.operation_type,
            "problem_id": self.problem_id,
            "fold": self.fold,
            "duration": self.duration,
            "status": self.status,
            "records_count": self.records_count,
            "error_message": self.error_message,
            "context": self.context,
        }


class LoggerService:
    """Service for structured logging with an optional JSON-lines sink."""

    def __init__(self, sink_path: Optional[str] = None, max_entries: int = 1000):
        """Initialize logger service.

        Args:
            sink_path: File every entry is appended to as one JSON line
            max_entries: Maximum number of log entries to keep in memory
        """
        self.sink_path = sink_path
        self.max_entries = max_entries
        self._entries: List[LogEntry] = []
        self._lock = threading.Lock()

    def log(
        self,
        level: str,
        message: str,
        operation_type: Optional[str] = None,
        problem_id: Optional[int] = None,
        fold: Optional[int] = None,
        duration: Optional[float] = None,
        status: Optional[str] = None,
        records_count: Optional[int] = None,
        error_message: Optional[str] = None,
        context: Optional[dict] = None
    ) -> LogEntry:
        """Record an entry, forward it to the stdlib logger and the sink.

        Args:
            level: Log level (INFO, WARNING, ERROR, DEBUG)
            message: Log message
            operation_type: Stage (features, train, predict, evaluate, report, generate, io)
            problem_id: Problem being processed
            fold: Evaluation fold
            duration: Duration in seconds
            status: Status (success, failed, in_progress)
            records_count: Number of records processed
            error_message: Error message if applicable
            context: Additional context information

        Returns:
            Created LogEntry
        """
        entry = LogEntry(
            timestamp=datetime.now(),
            level=level.upper(),
            message=message,
            operation_type=operation_type,
            problem_id=problem_id,
            fold=fold,
            duration=duration,
            status=status,
            records_count=records_count,
            error_message=error_message,
            context=context or {},
        )

        with self._lock:
            self._entries.append(entry)
            if len(self._entries) > self.max_entries:
                self._entries = self._entries[-self.max_entries:]

        log_func = getattr(logger, level.lower(), logger.info)
        log_func(f"[{operation_type or 'SYSTEM'}] {message}")

        self._emit_log(entry)

        return entry

    def _emit_log(self, entry: LogEntry) -> None:
        """Append the entry to the JSON-lines sink."""
        if self.sink_path:
            try:
                line = json.dumps(entry.to_dict(), default=str)
                with self._lock:
                    with open(self.sink_path, "a", encoding="utf-8") as fh:
                        fh.write(line + "\n")
            except OSError as e:
                logger.warning(f"Failed to write log sink: {e}")

    def log_stage_start(self, operation_type: str, message: str, **kwargs) -> LogEntry:
        """Log the start of a pipeline stage."""
        return self.log(
            level="INFO",
            message=message,
            operation_type=operation_type,
            status="in_progress",
            **kwargs,
        )

    def log_stage_complete(
        self,
        operation_type: str,
        message: str,
        duration: float,
        records_count: Optional[int] = None,
        **kwargs
    ) -> LogEntry:
        """Log stage completion with duration and record count.

        Args:
            operation_type: Stage name
            message: Summary message
            duration: Elapsed seconds
            records_count: Rows, instances or models produced

        Returns:
            Created LogEntry
        """
        return self.log(
            level="INFO",
            message=f"{message} | {duration:.2f}s",
            operation_type=operation_type,
            duration=round(duration, 3),
            status="success",
            records_count=records_count,
            **kwargs,
        )

    def log_fold_complete(self, fold: int, n_test: int, duration: float, accuracy: float) -> LogEntry:
        """Log the end of one evaluation fold."""
        return self.log(
            level="INFO",
            message=f"Fold {fold} done: {n_test} test rows | accuracy {accuracy:.3f} | {duration:.2f}s",
            operation_type="evaluate",
            fold=fold,
            duration=round(duration, 3),
            status="success",
            records_count=n_test,
            context={"accuracy": accuracy},
        )

    def log_error(
        self,
        message: str,
        error: Optional[Exception] = None,
        operation_type: Optional[str] = None,
        context: Optional[dict] = None
    ) -> LogEntry:
        """Log error with stack trace.

        Args:
            message: Error message
            error: Exception object
            operation_type: Stage name
            context: Additional context

        Returns:
            Created LogEntry
        """
        ctx = dict(context or {})
        if error is not None:
            ctx["stack_trace"] = "".join(
                traceback.format_exception(type(error), error, error.__traceback__)
            )
        return self.log(
            level="ERROR",
            message=message,
            operation_type=operation_type,
            status="failed",
            error_message=str(error) if error is not None else None,
            context=ctx,
        )

    def get_recent_logs(self, limit: int = 100) -> List[LogEntry]:
        """Get recent log entries."""
        with self._lock:
            return list(self._entries[-limit:])

    def get_logs_as_dicts(self, limit: int = 100) -> List[dict]:
        """Get recent logs as dictionaries."""
        return [entry.to_dict() for entry in self.get_recent_logs(limit)]

    def clear_logs(self) -> None:
        """Clear all log entries from memory."""
        with self._lock:
            self._entries.clear()
