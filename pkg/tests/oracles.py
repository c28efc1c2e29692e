"""Brute-force references, kept independent of the package algorithms."""

import itertools

from finitary.perm import Perm
from finitary.structure import SortedUniverse


def brute_automorphisms(s: SortedUniverse) -> list[Perm]:
    """Every sort-preserving permutation that preserves relations and constants."""
    pts = s.points
    idx = s.index
    by_sort = {}
    for i, p in enumerate(pts):
        by_sort.setdefault(p.sort, []).append(i)
    blocks = list(by_sort.values())
    rels = [{tuple(idx[p] for p in t) for t in s.point_tuples(name)} for name in s.relations]
    consts = [idx[p] for p in s.constants.values()]
    out = []
    for choice in itertools.product(*(itertools.permutations(b) for b in blocks)):
        img = [0] * len(pts)
        for b, c in zip(blocks, choice):
            for x, y in zip(b, c):
                img[x] = y
        if any(img[c] != c for c in consts):
            continue
        if all({tuple(img[x] for x in t) for t in r} == r for r in rels):
            out.append(Perm(img))
    return out


def closure(elems) -> frozenset:
    elems = list(elems)
    n = elems[0].degree
    seen = {Perm.identity(n)}
    frontier = list(seen)
    while frontier:
        nxt = []
        for g in frontier:
            for h in elems:
                k = g * h
                if k not in seen:
                    seen.add(k)
                    nxt.append(k)
        frontier = nxt
    return frozenset(seen)


def brute_subgroups(elems) -> set[frozenset]:
    """Subgroups generated by at most two elements (enough for the groups used here)."""
    elems = list(elems)
    return {closure([a, b]) for a in elems for b in elems}


def fixed_points(perms, n: int) -> set[int]:
    return {x for x in range(n) if all(g.img[x] == x for g in perms)}


def brute_orbit_partition(perms, n: int, k: int) -> set[frozenset]:
    """Orbits on k-tuples by applying every group element."""
    out = set()
    for t in itertools.product(range(n), repeat=k):
        out.add(frozenset(tuple(g.img[x] for x in t) for g in perms))
    return out
