# Services Package
from src.services.logger_service import LoggerService
from src.services.parallel_processor import ParallelProcessor

__all__ = [
    'LoggerService',
    'ParallelProcessor',
]
