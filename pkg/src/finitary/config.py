"""Size caps shared by the search routines.

``GS_MAX_SIZE`` in the environment overrides the universe-size cap;
``size_cap`` raises it for a block of code.
"""

import os
from contextlib import contextmanager
from contextvars import ContextVar
from dataclasses import dataclass, replace


class SizeLimitError(ValueError):
    """A configured size cap was exceeded."""


@dataclass(frozen=True)
class Limits:
    max_universe: int = 24
    max_arity: int = 12
    max_subgroup_search: int = 48


_override: ContextVar[dict] = ContextVar("finitary_limits", default={})


def limits() -> Limits:
    out = Limits()
    raw = os.environ.get("GS_MAX_SIZE")
    if raw:
        out = replace(out, max_universe=int(raw))
    extra = _override.get()
    if extra:
        out = replace(out, **extra)
    return out


@contextmanager
def size_cap(**caps: int):
    """Temporarily replace caps, e.g. ``with size_cap(max_universe=81):``."""
    token = _override.set({**_override.get(), **caps})
    try:
        yield
    finally:
        _override.reset(token)


def check_size(what: str, value: int, cap: int) -> None:
    if value > cap:
        raise SizeLimitError(f"{what} {value} exceeds cap {cap}")
