# core/settings.py
import logging
import os
from typing import Optional

from dotenv import load_dotenv

# Load environment variables from .env
load_dotenv()

# Worker cap for grid / CV fan-out
LATENTLABEL_THREADS = max(1, int(os.getenv("LATENTLABEL_THREADS", str(os.cpu_count() or 1))))
LOG_LEVEL = os.getenv("LATENTLABEL_LOG_LEVEL", "INFO").upper()

# Celery (eager in-process execution when no broker is configured)
BROKER_URL = os.getenv("LATENTLABEL_BROKER_URL")
RESULT_BACKEND = os.getenv("LATENTLABEL_RESULT_BACKEND", BROKER_URL)

_configured = False


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Install one stream handler on the root logger (idempotent)."""
    global _configured
    if _configured:
        return
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    _configured = True


def worker_count(requested: Optional[int] = None) -> int:
    """Number of workers to use, capped by LATENTLABEL_THREADS."""
    if requested is None:
        return LATENTLABEL_THREADS
    return max(1, min(int(requested), LATENTLABEL_THREADS))
