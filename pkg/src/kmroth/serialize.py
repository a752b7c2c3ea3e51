"""Canonical JSON and digests: byte-identical output for identical inputs."""

from __future__ import annotations

import hashlib
import json
from fractions import Fraction

import numpy as np

SCHEMA_VERSION = 1


def jsonable(obj):
    """Recursively convert numpy scalars/arrays and fractions to JSON types."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    return obj


def canonical_dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=2) + "\n"


def digest(obj) -> str:
    return hashlib.sha256(
        json.dumps(jsonable(obj), sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()
