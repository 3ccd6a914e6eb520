"""
Shared logging utilities.
"""

import logging
import os
import sys
from typing import Any, Dict, Optional

import structlog


def setup_logging(
    log_level: str = "WARNING",
    log_file: Optional[str] = None,
    component_name: str = "interferometer",
) -> None:
    """Setup structured logging for the application.

    Console output goes to stderr; stdout carries result tables.
    """

    # Ensure log directory exists
    if log_file:
        log_dir = os.path.dirname(log_file)
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)

    level = getattr(logging, log_level.upper(), logging.WARNING)

    # Configure structlog
    structlog.configure(
        processors=[
            structlog.stdlib.filter_by_level,
            structlog.stdlib.add_logger_name,
            structlog.stdlib.add_log_level,
            structlog.stdlib.PositionalArgumentsFormatter(),
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.processors.StackInfoRenderer(),
            structlog.processors.format_exc_info,
            structlog.processors.UnicodeDecoder(),
            structlog.processors.JSONRenderer(),
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        logger_factory=structlog.stdlib.LoggerFactory(),
        cache_logger_on_first_use=True,
    )

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setLevel(level)
    console_formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")
    console_handler.setFormatter(console_formatter)

    # Add file handler if specified
    handlers = [console_handler]
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setLevel(level)
        file_handler.setFormatter(console_formatter)
        handlers.append(file_handler)

    # Configure root logger
    root_logger = logging.getLogger()
    root_logger.handlers = handlers
    root_logger.setLevel(level)

    logger = structlog.get_logger(component_name)
    logger.debug("Logging initialized",
                 component=component_name,
                 log_level=log_level,
                 log_file=log_file)


def get_logger(name: Optional[str] = None) -> structlog.BoundLogger:
    """Get a structured logger instance."""
    return structlog.get_logger(name)


def log_solver_run(
    logger: structlog.BoundLogger,
    method: str,
    params: Dict[str, Any],
    success: bool,
    duration_ms: float,
    **kwargs: Any,
) -> None:
    """Log one backend evaluation with standard fields."""
    logger.info(
        "Solver run",
        method=method,
        params=params,
        success=success,
        duration_ms=round(duration_ms, 3),
        **kwargs,
    )


def log_sweep_point(
    logger: structlog.BoundLogger,
    command: str,
    index: int,
    total: int,
    status: str,
    error: Optional[str] = None,
    **kwargs: Any,
) -> None:
    """Log progress of a parameter sweep."""
    logger.debug(
        "Sweep point",
        command=command,
        index=index,
        total=total,
        status=status,
        error=error,
        **kwargs,
    )
