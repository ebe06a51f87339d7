"""Runtime caps, read from the environment with overridable defaults."""

from __future__ import annotations

import os
import threading
from contextlib import contextmanager
from functools import lru_cache
from typing import Iterator

DEPTH_CAP_ENV = "CONWAY_DEPTH_CAP"
TERM_CAP_ENV = "CONWAY_TERM_CAP"

DEFAULT_DEPTH_CAP = 8
DEFAULT_TERM_CAP = 4000

_local = threading.local()


def _env_int(name: str, default: int) -> int:
    return _parse_int(name, os.environ.get(name), default)


@lru_cache(maxsize=64)
def _parse_int(name: str, raw: str | None, default: int) -> int:
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError as exc:
        raise ValueError(f"{name} must be a positive integer, got {raw!r}") from exc
    if value <= 0:
        raise ValueError(f"{name} must be a positive integer, got {raw!r}")
    return value


def depth_cap() -> int:
    """Maximum nesting depth of exponents in a normal form."""
    override = getattr(_local, "depth_cap", None)
    return override if override is not None else _env_int(DEPTH_CAP_ENV, DEFAULT_DEPTH_CAP)


def term_cap() -> int:
    """Maximum number of candidate terms or series powers a lazy step may use."""
    override = getattr(_local, "term_cap", None)
    return override if override is not None else _env_int(TERM_CAP_ENV, DEFAULT_TERM_CAP)


@contextmanager
def caps(*, depth: int | None = None, terms: int | None = None) -> Iterator[None]:
    """Temporarily override the caps for the current thread."""
    old = (getattr(_local, "depth_cap", None), getattr(_local, "term_cap", None))
    if depth is not None:
        _local.depth_cap = depth
    if terms is not None:
        _local.term_cap = terms
    try:
        yield
    finally:
        _local.depth_cap, _local.term_cap = old
