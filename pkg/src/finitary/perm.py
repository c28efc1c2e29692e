"""Permutation groups on finite point sets.

Points are indexed ``0..n-1``; a group may additionally carry a tuple of
point labels (for structures these are ``Pt(sort, elem)`` pairs in canonical
order).  Products compose right to left: ``(p * q)(x) == p(q(x))``.

Orders and membership come from a deterministic Schreier-Sims stabilizer
chain whose base follows the canonical point order.
"""

from __future__ import annotations

import itertools
import math
from collections import deque
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .config import check_size, limits


class NotHomomorphism(ValueError):
    pass


class Perm:
    __slots__ = ("img", "_hash")

    def __init__(self, img: Iterable[int]):
        self.img = img if type(img) is tuple else tuple(img)
        self._hash = hash(self.img)

    @classmethod
    def identity(cls, n: int) -> "Perm":
        return cls(range(n))

    @classmethod
    def from_cycles(cls, n: int, cycles: Iterable[Sequence[int]]) -> "Perm":
        img = list(range(n))
        for cyc in cycles:
            for a, b in zip(cyc, list(cyc[1:]) + [cyc[0]]):
                img[a] = b
        if sorted(img) != list(range(n)):
            raise ValueError("cycles overlap")
        return cls(img)

    @property
    def degree(self) -> int:
        return len(self.img)

    def __call__(self, x: int) -> int:
        return self.img[x]

    def __mul__(self, other: "Perm") -> "Perm":
        return Perm(tuple(map(self.img.__getitem__, other.img)))

    def __invert__(self) -> "Perm":
        inv = [0] * len(self.img)
        for i, x in enumerate(self.img):
            inv[x] = i
        return Perm(inv)

    def __pow__(self, k: int) -> "Perm":
        base = self if k >= 0 else ~self
        out = Perm.identity(len(self.img))
        for _ in range(abs(k)):
            out = base * out
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Perm) and self.img == other.img

    def __lt__(self, other: "Perm") -> bool:
        return self.img < other.img

    def __hash__(self) -> int:
        return self._hash

    def is_identity(self) -> bool:
        return all(i == x for i, x in enumerate(self.img))

    def order(self) -> int:
        n = 1
        seen = set()
        for i in range(len(self.img)):
            if i in seen:
                continue
            j, length = i, 0
            while j not in seen:
                seen.add(j)
                j = self.img[j]
                length += 1
            n = math.lcm(n, length)
        return n

    def cycles(self) -> list[tuple[int, ...]]:
        seen, out = set(), []
        for i in range(len(self.img)):
            if i in seen or self.img[i] == i:
                continue
            cyc = [i]
            seen.add(i)
            j = self.img[i]
            while j != i:
                cyc.append(j)
                seen.add(j)
                j = self.img[j]
            out.append(tuple(cyc))
        return out

    def __repr__(self) -> str:
        cyc = self.cycles()
        return "Perm(" + ("".join("(" + " ".join(map(str, c)) + ")" for c in cyc) or "()") + ")"


def _sort_of(label):
    return getattr(label, "sort", None)


class PermGroup:
    """A permutation group given by generators, with a stabilizer chain."""

    def __init__(self, gens: Iterable[Perm], degree: int, points: Sequence | None = None,
                 base_prefix: Sequence[int] = ()):
        self.degree = degree
        self.points = tuple(points) if points is not None else tuple(range(degree))
        if len(self.points) != degree:
            raise ValueError("point labels do not match degree")
        uniq = []
        for g in gens:
            if g.degree != degree:
                raise ValueError("generator degree mismatch")
            if not g.is_identity() and g not in uniq:
                uniq.append(g)
        self.gens: tuple[Perm, ...] = tuple(uniq)
        self._schreier_sims(list(base_prefix))

    # -- construction -------------------------------------------------
    def _orbit_transversal(self, b: int, gens: list[Perm]) -> dict[int, Perm]:
        trans = {b: Perm.identity(self.degree)}
        queue = deque([b])
        while queue:
            x = queue.popleft()
            for s in gens:
                y = s.img[x]
                if y not in trans:
                    trans[y] = s * trans[x]
                    queue.append(y)
        return trans

    def _level_gens(self, strong: list[Perm], base: list[int], i: int) -> list[Perm]:
        prefix = base[:i]
        return [s for s in strong if all(s.img[b] == b for b in prefix)]

    def _sift(self, g: Perm, start: int) -> tuple[Perm, int]:
        for lvl in range(start, len(self.base)):
            x = g.img[self.base[lvl]]
            t = self.transversals[lvl]
            if x not in t:
                return g, lvl
            g = ~t[x] * g
        return g, len(self.base)

    def _first_moved(self, g: Perm) -> int:
        for i, x in enumerate(g.img):
            if x != i:
                return i
        raise ValueError("identity has no moved point")

    def _schreier_sims(self, base: list[int]) -> None:
        strong = list(self.gens)
        for s in strong:
            if all(s.img[b] == b for b in base):
                base.append(self._first_moved(s))
        self.base = base
        self.transversals = [self._orbit_transversal(b, self._level_gens(strong, base, i))
                             for i, b in enumerate(base)]
        i = len(base) - 1
        while i >= 0:
            restarted = False
            gens_i = self._level_gens(strong, base, i)
            for u in list(self.transversals[i].values()):
                for s in gens_i:
                    su = s * u
                    schreier = ~self.transversals[i][su.img[base[i]]] * su
                    h, j = self._sift(schreier, i + 1)
                    if not h.is_identity():
                        if j == len(base):
                            base.append(self._first_moved(h))
                            self.transversals.append({})
                        strong.append(h)
                        for lvl in range(i + 1, j + 1):
                            self.transversals[lvl] = self._orbit_transversal(
                                base[lvl], self._level_gens(strong, base, lvl))
                        i = j
                        restarted = True
                        break
                if restarted:
                    break
            if not restarted:
                i -= 1
        self.strong_gens = tuple(strong)

    # -- queries -------------------------------------------------------
    def identity(self) -> Perm:
        return Perm.identity(self.degree)

    @cached_property
    def order(self) -> int:
        return math.prod(len(t) for t in self.transversals)

    def basic_orbit_lengths(self) -> list[int]:
        return [len(t) for t in self.transversals]

    def __contains__(self, g: Perm) -> bool:
        if g.degree != self.degree:
            return False
        h, lvl = self._sift(g, 0)
        return lvl == len(self.base) and h.is_identity()

    def __len__(self) -> int:
        return self.order

    @cached_property
    def _elements(self) -> tuple[Perm, ...]:
        out = []
        for choice in itertools.product(*(list(t.values()) for t in self.transversals)):
            g = self.identity()
            for u in choice:
                g = g * u
            out.append(g)
        return tuple(sorted(out))

    def elements(self) -> tuple[Perm, ...]:
        """All elements, sorted by image tuple."""
        return self._elements

    def orbit(self, x: int) -> list[int]:
        return sorted(self._orbit_transversal(x, list(self.gens)))

    def orbits(self) -> list[list[int]]:
        seen, out = set(), []
        for x in range(self.degree):
            if x not in seen:
                orb = self.orbit(x)
                seen.update(orb)
                out.append(orb)
        return out

    def is_subgroup_of(self, other: "PermGroup") -> bool:
        return all(g in other for g in self.gens)

    def same_group(self, other: "PermGroup") -> bool:
        return (self.degree == other.degree and self.order == other.order
                and self.is_subgroup_of(other))

    def is_abelian(self) -> bool:
        return all(a * b == b * a for a in self.gens for b in self.gens)

    def small_generators(self) -> list[Perm]:
        """A short generating set, chosen greedily by decreasing element order."""
        elems = sorted(self.elements(), key=lambda g: (-g.order(), g.img))
        chosen: list[Perm] = []
        current = PermGroup([], self.degree, self.points)
        for g in elems:
            if current.order == self.order:
                break
            if g not in current:
                chosen.append(g)
                current = PermGroup(chosen, self.degree, self.points)
        return chosen

    def __repr__(self) -> str:
        return f"PermGroup(order={self.order}, degree={self.degree})"


def group_from_generators(gens: Iterable[Perm], degree: int | None = None,
                          points: Sequence | None = None) -> PermGroup:
    """Build a group, checking that generators preserve point sorts."""
    gens = list(gens)
    if degree is None:
        if points is not None:
            degree = len(points)
        elif gens:
            degree = gens[0].degree
        else:
            degree = 0
    if points is not None:
        for g in gens:
            if g.degree != len(points):
                raise ValueError("generator degree mismatch")
            for i, x in enumerate(g.img):
                if _sort_of(points[i]) != _sort_of(points[x]):
                    raise ValueError(f"generator moves {points[i]} across sorts")
    return PermGroup(gens, degree, points)


def pointwise_stabilizer(G: PermGroup, A: Iterable[int]) -> PermGroup:
    A = sorted(set(A))
    for a in A:
        if not 0 <= a < G.degree:
            raise ValueError(f"unknown point {a}")
    if not A:
        return G
    H = PermGroup(G.gens, G.degree, G.points, base_prefix=A)
    fixing = [s for s in H.strong_gens if all(s.img[a] == a for a in A)]
    return PermGroup(fixing, G.degree, G.points)


def closure(gens: Sequence[Perm], degree: int) -> frozenset[Perm]:
    e = Perm.identity(degree)
    seen = {e}
    queue = deque([e])
    while queue:
        x = queue.popleft()
        for s in gens:
            y = s * x
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return frozenset(seen)


def all_subgroups(G: PermGroup, max_order: int | None = None,
                  bound: int | None = None) -> list[PermGroup]:
    """Every subgroup of ``G`` (of order at most ``max_order``), by cyclic extension."""
    bound = limits().max_subgroup_search if bound is None else bound
    check_size("group order", G.order, bound)
    elems = G.elements()
    found: dict[frozenset, list[Perm]] = {frozenset([G.identity()]): []}
    queue = deque(found)
    while queue:
        key = queue.popleft()
        gens = found[key]
        for g in elems:
            if g in key:
                continue
            new = closure(gens + [g], G.degree)
            if new not in found:
                found[new] = gens + [g]
                queue.append(new)
    out = [PermGroup(gens, G.degree, G.points) for key, gens in found.items()
           if max_order is None or len(key) <= max_order]
    return sorted(out, key=lambda H: (H.order, H.elements()))


def is_normal(G: PermGroup, H: PermGroup) -> bool:
    if not H.is_subgroup_of(G):
        raise ValueError("H is not a subgroup of G")
    return all(g * h * ~g in H for g in G.gens for h in H.gens)


class GroupHom:
    """A homomorphism fixed by generator images, verified exhaustively on build."""

    def __init__(self, domain: PermGroup, codomain: PermGroup, images: Sequence[Perm],
                 gens: Sequence[Perm] | None = None):
        self.domain = domain
        self.codomain = codomain
        self.gens = tuple(domain.gens if gens is None else gens)
        self.images = tuple(images)
        if len(self.gens) != len(self.images):
            raise ValueError("need one image per generator")
        for im in self.images:
            if im not in codomain:
                raise NotHomomorphism("generator image outside codomain")
        self.table = self._build_table()

    def _build_table(self) -> dict[Perm, Perm]:
        e = self.domain.identity()
        table = {e: self.codomain.identity()}
        queue = deque([e])
        while queue:
            x = queue.popleft()
            fx = table[x]
            for s, fs in zip(self.gens, self.images):
                y = s * x
                fy = fs * fx
                old = table.get(y)
                if old is None:
                    table[y] = fy
                    queue.append(y)
                elif old != fy:
                    raise NotHomomorphism("generator images violate a relation")
        if len(table) != self.domain.order:
            raise NotHomomorphism("generators do not generate the domain")
        return table

    def __call__(self, g: Perm) -> Perm:
        return self.table[g]

    def image(self) -> PermGroup:
        return PermGroup(self.images, self.codomain.degree, self.codomain.points)

    def kernel(self) -> PermGroup:
        e = self.codomain.identity()
        return PermGroup([g for g, v in self.table.items() if v == e],
                         self.domain.degree, self.domain.points)

    def is_surjective(self) -> bool:
        return self.image().order == self.codomain.order

    def is_injective(self) -> bool:
        return self.kernel().order == 1

    def compose(self, first: "GroupHom") -> "GroupHom":
        """``self`` after ``first``."""
        return GroupHom(first.domain, self.codomain, [self(first(s)) for s in first.gens],
                        gens=first.gens)

    def same_map(self, other: "GroupHom") -> bool:
        return all(self(s) == other(s) for s in self.domain.gens + other.gens)

    def __repr__(self) -> str:
        return f"GroupHom({self.domain.order} -> {self.codomain.order})"


def kernel(phi: GroupHom) -> PermGroup:
    return phi.kernel()


def image(phi: GroupHom) -> PermGroup:
    return phi.image()


def identity_hom(G: PermGroup) -> GroupHom:
    return GroupHom(G, G, G.gens)


def find_sections(phi: GroupHom) -> list[GroupHom]:
    """All homomorphisms ``s`` with ``phi(s(q)) == q``, by exhaustive search."""
    if not phi.is_surjective():
        raise ValueError("phi is not surjective")
    Q = phi.codomain
    qgens = Q.small_generators()
    fibres: dict[Perm, list[Perm]] = {}
    for x, q in phi.table.items():
        fibres.setdefault(q, []).append(x)
    # a section is injective, so element orders must match
    candidates = [sorted(x for x in fibres[q] if x.order() == q.order()) for q in qgens]
    out, seen = [], set()
    for choice in itertools.product(*candidates):
        try:
            s = GroupHom(Q, phi.domain, choice, gens=qgens)
        except NotHomomorphism:
            continue
        key = tuple(s(q) for q in Q.elements())
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


def iso_groups(G: PermGroup, H: PermGroup) -> GroupHom | None:
    """An isomorphism ``G -> H`` or ``None``, by generator-image search."""
    if G.order != H.order:
        return None
    if G.order == 1:
        return GroupHom(G, H, [], gens=[])
    ggens = G.small_generators()
    by_order: dict[int, list[Perm]] = {}
    for h in H.elements():
        by_order.setdefault(h.order(), []).append(h)
    if sorted(g.order() for g in G.elements()) != sorted(h.order() for h in H.elements()):
        return None
    candidates = [by_order.get(g.order(), []) for g in ggens]
    for choice in itertools.product(*candidates):
        try:
            f = GroupHom(G, H, choice, gens=ggens)
        except NotHomomorphism:
            continue
        if f.is_injective():
            return f
    return None


def regular_representation(G: PermGroup, prefix: str = "g") -> PermGroup:
    """Left-translation action of ``G`` on its own (sorted) element list."""
    elems = G.elements()
    index = {g: i for i, g in enumerate(elems)}
    width = len(str(len(elems) - 1))
    labels = tuple(f"{prefix}{i:0{width}d}" for i in range(len(elems)))

    def left(s: Perm) -> Perm:
        return Perm(index[s * g] for g in elems)

    return PermGroup([left(s) for s in G.gens], len(elems), labels)


def tuple_orbits(gens: Sequence[Perm], n: int, k: int) -> np.ndarray:
    """Orbit labels of the group generated by ``gens`` acting on ``range(n)**k``.

    Tuples are encoded base ``n`` (first coordinate most significant); labels
    are renumbered in order of first appearance, so two groups give equal
    arrays exactly when their orbit partitions agree.
    """
    size = n ** k
    if size == 0:
        return np.zeros(0, dtype=np.int64)
    codes = np.arange(size, dtype=np.int64)
    digits = np.empty((size, k), dtype=np.int64)
    rest = codes.copy()
    for j in range(k - 1, -1, -1):
        digits[:, j] = rest % n
        rest //= n
    rows, cols = [codes], [codes]
    weights = n ** np.arange(k - 1, -1, -1, dtype=np.int64)
    for g in gens:
        img = np.asarray(g.img, dtype=np.int64)
        rows.append(codes)
        cols.append(img[digits] @ weights)
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    graph = coo_matrix((np.ones(len(r), dtype=np.int8), (r, c)), shape=(size, size))
    _, labels = connected_components(graph, directed=True, connection="weak")
    _, first = np.unique(labels, return_index=True)
    remap = np.empty(labels.max() + 1, dtype=np.int64)
    remap[labels[np.sort(first)]] = np.arange(len(first))
    return remap[labels]
