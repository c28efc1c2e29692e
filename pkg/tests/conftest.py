import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from finitary.structure import Pt, SortedUniverse  # noqa: E402


def cycle(n: int, directed: bool = True) -> SortedUniverse:
    names = [chr(ord("a") + i) for i in range(n)]
    edges = [(names[i], names[(i + 1) % n]) for i in range(n)]
    if not directed:
        edges += [(b, a) for a, b in edges]
    return SortedUniverse.build({"V": names}, {"E": (["V", "V"], edges)})


def free(n: int) -> SortedUniverse:
    return SortedUniverse.build({"V": [chr(ord("a") + i) for i in range(n)]})


def V(e: str) -> Pt:
    return Pt("V", e)


@pytest.fixture
def c3():
    return cycle(3)


@pytest.fixture
def square():
    return cycle(4, directed=False)
