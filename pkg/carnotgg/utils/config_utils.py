"""Coercers for parsed configuration payloads.

Each helper either returns a clean value or raises ConfigError naming the
offending field path.
"""

from __future__ import annotations

import math
from typing import Any, Dict, List, Optional

from ..errors import ConfigError


def ensure_float(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"expected a number, got {value!r}", path=path)
    number = float(value)
    if not math.isfinite(number):
        raise ConfigError(f"expected a finite number, got {value!r}", path=path)
    return number


def ensure_positive(value: Any, path: str) -> float:
    number = ensure_float(value, path)
    if number <= 0.0:
        raise ConfigError(f"must be positive, got {number}", path=path)
    return number


def ensure_int(value: Any, path: str, minimum: Optional[int] = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"expected an integer, got {value!r}", path=path)
    if minimum is not None and value < minimum:
        raise ConfigError(f"must be >= {minimum}, got {value}", path=path)
    return int(value)


def ensure_float_list(value: Any, length: Optional[int], path: str) -> List[float]:
    """Return a list of floats, optionally of a fixed length."""
    if not isinstance(value, (list, tuple)):
        raise ConfigError(f"expected a list of numbers, got {value!r}", path=path)
    numbers = [ensure_float(item, f"{path}[{index}]") for index, item in enumerate(value)]
    if length is not None and len(numbers) != length:
        raise ConfigError(f"expected {length} entries, got {len(numbers)}", path=path)
    return numbers


def ensure_ladder(value: Any, path: str) -> List[float]:
    """Strictly decreasing list of positive numbers (an eps ladder)."""
    ladder = ensure_float_list(value, None, path)
    if not ladder:
        raise ConfigError("ladder must not be empty", path=path)
    for index, eps in enumerate(ladder):
        if eps <= 0.0:
            raise ConfigError(f"entries must be positive, got {eps}", path=f"{path}[{index}]")
        if index and eps >= ladder[index - 1]:
            raise ConfigError(f"ladder must be strictly decreasing ({ladder[index - 1]} then {eps})", path=f"{path}[{index}]")
    return ladder


def ensure_string_list(value: Any, path: str) -> List[str]:
    if not isinstance(value, list):
        raise ConfigError(f"expected a list of names, got {value!r}", path=path)
    results: List[str] = []
    for index, item in enumerate(value):
        if not isinstance(item, str) or not item.strip():
            raise ConfigError(f"expected a non-empty string, got {item!r}", path=f"{path}[{index}]")
        results.append(item.strip())
    return results


def ensure_mapping(value: Any, path: str) -> Dict[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"expected a mapping, got {type(value).__name__}", path=path)
    for key in value:
        if not isinstance(key, str):
            raise ConfigError(f"keys must be strings, got {key!r}", path=path)
    return dict(value)
