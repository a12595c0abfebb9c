import logging
import json
import structlog
from typing import Any
import sys

from app.utils.apnum import with_digits


def setup_logging(log_level: str = "WARNING"):
    # Convert string level to logging constant
    numeric_level = getattr(logging, str(log_level).upper())

    logging.getLogger().setLevel(numeric_level)

    structlog.configure(
        processors=[
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.stdlib.add_log_level,
            structlog.processors.JSONRenderer()
        ],
        wrapper_class=structlog.stdlib.BoundLogger,
        context_class=dict,
        logger_factory=structlog.stdlib.LoggerFactory(),
    )

    # stdout carries command output (tables, JSON, CSV); logs go to stderr
    logging.basicConfig(
        format="%(message)s",
        level=numeric_level,
        handlers=[
            logging.StreamHandler(sys.stderr)
        ],
        force=True
    )


def log_sequence_entry(entry: Any, logger: Any):
    """Log one Hankel-sequence entry (D, root) in a structured format"""
    try:
        root = entry.root
        ctx = with_digits(root.digits_used)
        message = {
            "event": "sequence_entry",
            "D": entry.D,
            "re": ctx.render(root.energy.real),
            "im": ctx.render(root.energy.imag),
            "iterations": root.iterations,
            "converged": root.converged,
            "status": root.status,
            "multiplicity": root.multiplicity,
            "digits": root.digits_used,
        }

        logger.info(json.dumps(message))

    except Exception as e:
        logger.error(f"Error formatting sequence entry: {str(e)}", exc_info=True)
