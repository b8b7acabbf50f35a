import json
import logging
import os
import tempfile
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd

from .config import FD_STEP, REPORT_SCHEMA_VERSION
from .errors import ReportError

logger = logging.getLogger(__name__)

REPORT_KEYS = ("schema_version", "command", "body", "meta")
REQUIRED_BODY_KEYS = {
    "spectrum": ("spectrum",),
    "check": ("potential", "conditions", "bounds"),
    "solve": ("functional", "geometry", "minimax", "certificates"),
    "deform": ("landscape", "runs", "descent"),
    "oracle": ("potential", "catalog"),
}


# centered finite-difference gradient of a scalar function of a vector
def central_difference_gradient(func: Callable[[np.ndarray], float], x: np.ndarray,
                                step: float = FD_STEP) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        shift = np.zeros_like(x)
        shift[i] = step
        grad[i] = (func(x + shift) - func(x - shift)) / (2.0 * step)
    return grad


# |a - b| / max(1, |b|), elementwise max
def relative_error(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b) / np.maximum(1.0, np.abs(b))))


# uniform samples from the euclidean ball of the given radius in R^dim
def random_ball_samples(dim: int, count: int, radius: float, rng: np.random.Generator) -> np.ndarray:
    directions = rng.standard_normal((count, dim))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    radii = radius * rng.random(count) ** (1.0 / dim)
    return directions * radii[:, None]


# make numpy scalars, arrays and enums json-serializable
def to_jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, float) and not np.isfinite(obj):
        return None if np.isnan(obj) else ("inf" if obj > 0 else "-inf")
    return obj


def build_envelope(command: str, body: Dict[str, Any], meta: Optional[Dict[str, Any]] = None) -> Dict[str, Any]:
    meta = dict(meta or {})
    meta.setdefault("generated_at", datetime.now(timezone.utc).isoformat())
    return {
        "schema_version": REPORT_SCHEMA_VERSION,
        "command": command,
        "body": to_jsonable(body),
        "meta": to_jsonable(meta),
    }


# structural check of a report envelope; returns a list of problems
def validate_report(report: Dict[str, Any]) -> List[str]:
    problems = []
    for key in REPORT_KEYS:
        if key not in report:
            problems.append(f"missing key '{key}'")
    if "schema_version" in report and report["schema_version"] != REPORT_SCHEMA_VERSION:
        problems.append(f"unknown schema_version {report['schema_version']!r}")
    command = report.get("command")
    if "command" in report and command not in REQUIRED_BODY_KEYS:
        problems.append(f"unknown command {command!r}")
    body = report.get("body")
    if "body" in report and not isinstance(body, dict):
        problems.append("body must be an object")
    elif isinstance(body, dict) and command in REQUIRED_BODY_KEYS:
        for key in REQUIRED_BODY_KEYS[command]:
            if key not in body:
                problems.append(f"body of '{command}' is missing '{key}'")
    if "meta" in report and not isinstance(report["meta"], dict):
        problems.append("meta must be an object")
    return problems


# write text via a temp file in the same directory, then rename over the target
def atomic_write_text(path: Path, text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def body_json(body: Dict[str, Any]) -> str:
    return json.dumps(to_jsonable(body), indent=2, sort_keys=True)


def write_json_report(path: Path, report: Dict[str, Any]) -> Path:
    problems = validate_report(report)
    if problems:
        raise ReportError(f"refusing to write malformed report: {problems}")
    path = atomic_write_text(path, json.dumps(report, indent=2, sort_keys=True) + "\n")
    logger.info("wrote report %s", path)
    return path


def write_csv(path: Path, frame: pd.DataFrame) -> Path:
    path = atomic_write_text(path, frame.to_csv(index=False))
    logger.info("wrote %d rows to %s", len(frame), path)
    return path


def load_json_report(path: Path) -> Dict[str, Any]:
    with open(path, "r", encoding="utf-8") as f:
        try:
            return json.load(f)
        except json.JSONDecodeError as exc:
            raise ReportError(f"{path} is not valid JSON: {exc}") from exc


# independent integer seeds for named components, derived from one root seed
def component_seeds(seed: int, names: Sequence[str]) -> Dict[str, int]:
    children = np.random.SeedSequence(seed).spawn(len(names))
    return {name: int(child.generate_state(1, dtype=np.uint32)[0]) for name, child in zip(names, children)}
