"""Utility helpers for ou-sector."""

from __future__ import annotations

import hashlib
import json
import re
from typing import Any

_NUMBER = r"[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?"


def parse_p_list(input_str: str) -> list[float]:
    """Parse a comma- or space-separated list of exponents such as "1.5, 2, 4"."""
    parts = [s for s in re.split(r"[,\s]+", input_str.strip()) if s]
    if not parts:
        raise ValueError(f"Invalid p list: {input_str!r}")
    values = []
    for part in parts:
        if not re.fullmatch(_NUMBER, part):
            raise ValueError(f"Invalid p value: {part!r}")
        p = float(part)
        if not p > 1.0:
            raise ValueError(f"p must exceed 1, got {part}")
        values.append(p)
    return values


def derive_seed(seed: int, *tags: Any) -> int:
    """Deterministic 63-bit child seed from a base seed and a label path."""
    text = ":".join([str(seed), *map(str, tags)])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1


def canonical_json(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), default=str)


def config_digest(data: Any) -> str:
    """Short content hash of a config dump."""
    return hashlib.sha256(canonical_json(data).encode()).hexdigest()[:16]
