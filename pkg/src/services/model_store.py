"""Model and trace persistence as JSON documents."""
import json
import logging
from pathlib import Path
from typing import Any, Dict

from pydantic import ValidationError

from core.errors import DimensionMismatch, EmptyInput, InvalidConfig
from core.models import ModelState
from app.optim import FitTrace

logger = logging.getLogger(__name__)


def write_json(path: Path, document: Dict[str, Any]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(document, indent=2) + "\n")
    return path


def read_json(path: Path) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise EmptyInput(f"{path}: file not found")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as e:
        raise InvalidConfig(f"{path}: invalid JSON at line {e.lineno}: {e.msg}")


def save_model(path: Path, state: ModelState) -> Path:
    written = write_json(path, state.to_document())
    logger.info(f"✅ Model saved to {written}")
    return written


def load_model(path: Path) -> ModelState:
    doc = read_json(path)
    try:
        return ModelState.from_document(doc)
    except KeyError as e:
        raise DimensionMismatch("model", detail=f"{path}: missing field {e.args[0]!r}")
    except (ValueError, TypeError, ValidationError) as e:
        raise DimensionMismatch("model", detail=f"{path}: {str(e).splitlines()[0]}")


def save_trace(path: Path, trace: FitTrace) -> Path:
    return write_json(path, trace.to_document())
