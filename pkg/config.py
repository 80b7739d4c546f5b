"""Shared configuration for the adaptive linear-optics toolkit, read from environment variables."""

import logging
import os
import sys

SEED = int(os.environ.get("OPTICS_SEED", "1234"))
THREADS = int(os.environ.get("OPTICS_THREADS", "1"))
UNITARITY_TOL = float(os.environ.get("OPTICS_UNITARITY_TOL", "1e-10"))
MAX_TABLE_SIZE = int(os.environ.get("OPTICS_MAX_TABLE_SIZE", "1000000"))
ATTEMPT_BUDGET = int(os.environ.get("OPTICS_ATTEMPT_BUDGET", "1000000"))
SHOT_BATCH = int(os.environ.get("OPTICS_SHOT_BATCH", "65536"))
SVM_MAX_ITER = int(os.environ.get("SVM_MAX_ITER", "100000"))
SVM_KKT_TOL = float(os.environ.get("SVM_KKT_TOL", "1e-4"))

# ---------------------------------------------------------------------------
# Logging configuration
# ---------------------------------------------------------------------------
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO").upper()

_LOG_FORMAT = "%(asctime)s [%(levelname)s] %(name)s: %(message)s"
_LOG_DATEFMT = "%Y-%m-%d %H:%M:%S"


def setup_logging(level=None):
    """Configure logging for the entire application.

    Call once at startup (CLI entry point). Records go to stderr only so
    that stdout stays reserved for JSON results.
    """
    root = logging.getLogger()

    # Only add stderr handler once
    has_stream = any(
        isinstance(h, logging.StreamHandler)
        and getattr(h, "stream", None) is sys.stderr
        for h in root.handlers
    )
    if not has_stream:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(logging.Formatter(_LOG_FORMAT, datefmt=_LOG_DATEFMT))
        root.addHandler(handler)

    level_name = (level or LOG_LEVEL).upper()
    root.setLevel(getattr(logging, level_name, logging.INFO))

