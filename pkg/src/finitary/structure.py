"""Finite multi-sorted relational structures and finite fragments of M^Eq.

A point is a ``Pt(sort, elem)`` pair of strings.  Definable sets are the
automorphism-invariant ones; only finite structures are handled, where that
identification is exact.  Imaginary sorts are built on demand: a
``QuotientSort`` is a set ``D`` of terms (points or nested tuples of points)
modulo an equivalence, and each class becomes a new point
``Pt(qname, "c<i>")`` of an ``EqFragment``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

from .perm import Perm, PermGroup, pointwise_stabilizer


class Pt(NamedTuple):
    sort: str
    elem: str

    def __str__(self) -> str:
        return f"{self.sort}:{self.elem}"


class StructureError(ValueError):
    pass


class NotEquivalenceError(StructureError):
    pass


class NotInvariantError(StructureError):
    def __init__(self, part: str, msg: str):
        super().__init__(msg)
        self.part = part


@dataclass(frozen=True)
class Relation:
    signature: tuple[str, ...]
    tuples: frozenset[tuple[str, ...]]

    @property
    def arity(self) -> int:
        return len(self.signature)


@dataclass(frozen=True)
class SortedUniverse:
    sorts: Mapping[str, tuple[str, ...]]
    relations: Mapping[str, Relation] = field(default_factory=dict)
    constants: Mapping[str, Pt] = field(default_factory=dict)

    @classmethod
    def build(cls, sorts: Mapping[str, Iterable[str]],
              relations: Mapping[str, tuple[Sequence[str], Iterable[Sequence[str]]]] | None = None,
              constants: Mapping[str, tuple[str, str]] | None = None) -> "SortedUniverse":
        """Convenience constructor: ``relations={name: (signature, tuples)}``."""
        s = {}
        for name, elems in sorted(sorts.items()):
            elems = list(map(str, elems))
            if len(set(elems)) != len(elems):
                raise StructureError(f"sort {name} lists an element twice")
            s[name] = tuple(sorted(elems))
        rels = {}
        for name, (sig, tuples) in sorted((relations or {}).items()):
            rels[name] = Relation(tuple(sig), frozenset(tuple(map(str, t)) for t in tuples))
        consts = {name: Pt(*c) for name, c in sorted((constants or {}).items())}
        return cls(s, rels, consts)

    @cached_property
    def points(self) -> tuple[Pt, ...]:
        return tuple(Pt(s, e) for s in sorted(self.sorts) for e in self.sorts[s])

    @cached_property
    def index(self) -> dict[Pt, int]:
        return {p: i for i, p in enumerate(self.points)}

    @property
    def size(self) -> int:
        return len(self.points)

    def point_tuples(self, name: str) -> list[tuple[Pt, ...]]:
        rel = self.relations[name]
        return [tuple(Pt(s, e) for s, e in zip(rel.signature, t)) for t in sorted(rel.tuples)]

    def index_tuples(self, name: str) -> list[tuple[int, ...]]:
        idx = self.index
        return [tuple(idx[p] for p in t) for t in self.point_tuples(name)]

    @cached_property
    def tuple_sets(self) -> dict[str, frozenset[tuple[int, ...]]]:
        return {name: frozenset(self.index_tuples(name)) for name in self.relations}

    def is_automorphism(self, perm: Perm) -> bool:
        return automorphism_failures(self, perm) == []

    def relabel(self, mapping: Mapping[Pt, Pt]) -> "SortedUniverse":
        """Rename elements along a sort-preserving bijection."""
        sorts: dict[str, list[str]] = {s: [] for s in self.sorts}
        for p in self.points:
            q = mapping[p]
            if q.sort != p.sort:
                raise StructureError("relabeling must preserve sorts")
            sorts[q.sort].append(q.elem)
        rels = {}
        for name, rel in self.relations.items():
            rels[name] = (rel.signature, [tuple(mapping[p].elem for p in t)
                                          for t in self.point_tuples(name)])
        consts = {c: tuple(mapping[p]) for c, p in self.constants.items()}
        return SortedUniverse.build(sorts, rels, consts)

    def reduct(self, relation_names: Iterable[str], sorts: Iterable[str] | None = None,
               keep_constants: bool = True) -> "SortedUniverse":
        names = set(relation_names)
        keep = set(self.sorts) if sorts is None else set(sorts)
        rels = {n: r for n, r in self.relations.items()
                if n in names and set(r.signature) <= keep}
        consts = {c: p for c, p in self.constants.items() if keep_constants and p.sort in keep}
        return SortedUniverse({s: e for s, e in self.sorts.items() if s in keep}, rels, consts)


def automorphism_failures(structure: SortedUniverse, perm: Perm) -> list[str]:
    """Names of relations/constants a point permutation fails to preserve."""
    pts, idx = structure.points, structure.index
    bad = []
    for i, j in enumerate(perm.img):
        if pts[i].sort != pts[j].sort:
            return ["<sorts>"]
    for name in structure.relations:
        tuples = structure.tuple_sets[name]
        img = perm.img.__getitem__
        if any(tuple(map(img, t)) not in tuples for t in tuples):
            bad.append(name)
    for c, p in structure.constants.items():
        if perm.img[idx[p]] != idx[p]:
            bad.append(c)
    return bad


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate(structure: SortedUniverse) -> ValidationReport:
    report = ValidationReport()
    if not structure.sorts:
        report.warnings.append("structure has no sorts")
    for s, elems in structure.sorts.items():
        if len(set(elems)) != len(elems):
            report.violations.append(f"sort {s}: duplicate element identifiers")
        if not elems:
            report.warnings.append(f"sort {s} is empty")
    members = {s: set(e) for s, e in structure.sorts.items()}
    for name, rel in structure.relations.items():
        for s in rel.signature:
            if s not in structure.sorts:
                report.violations.append(f"relation {name}: unknown sort {s}")
        for t in sorted(rel.tuples):
            if len(t) != rel.arity:
                report.violations.append(f"relation {name}: tuple {t} has wrong arity")
                continue
            for s, e in zip(rel.signature, t):
                if s in members and e not in members[s]:
                    report.violations.append(f"relation {name}: tuple {t} references missing {s}:{e}")
    for c, p in structure.constants.items():
        if p.sort not in structure.sorts or p.elem not in structure.sorts[p.sort]:
            report.violations.append(f"constant {c}: {p} does not exist")
    return report


def require_valid(structure: SortedUniverse) -> None:
    report = validate(structure)
    if not report.ok:
        raise StructureError("; ".join(report.violations))
    for w in report.warnings:
        warnings.warn(w, stacklevel=3)


# -- terms -------------------------------------------------------------

def is_point(term) -> bool:
    return isinstance(term, Pt)


def act(f: Callable[[Pt], Pt], term):
    """Apply a point map to every leaf of a term."""
    if isinstance(term, Pt):
        return f(term)
    return tuple(act(f, t) for t in term)


def term_key(term):
    if isinstance(term, Pt):
        return (0, term)
    return (1, len(term), tuple(term_key(t) for t in term))


def leaves(term) -> Iterable[Pt]:
    if isinstance(term, Pt):
        yield term
    else:
        for t in term:
            yield from leaves(t)


def point_map(points: Sequence[Pt], perm: Perm) -> Callable[[Pt], Pt]:
    index = {p: i for i, p in enumerate(points)}
    return lambda p: points[perm.img[index[p]]]


# -- definability ------------------------------------------------------

def _aut_group(structure: SortedUniverse) -> PermGroup:
    from .autcalc import aut
    return aut(structure).group


def is_definable(structure: SortedUniverse, candidate: Iterable, over: Iterable[Pt] = ()) -> bool:
    """True iff ``candidate`` is fixed setwise by every automorphism fixing ``over``."""
    cand = frozenset(candidate)
    known = set(structure.points)
    for t in cand:
        if isinstance(t, Pt):
            t = (t,)
        if not isinstance(t, tuple) or not all(isinstance(x, Pt) and x in known for x in t):
            raise StructureError(f"malformed candidate tuple {t!r}")
    lengths = {1 if isinstance(t, Pt) else len(t) for t in cand}
    if len(lengths) > 1:
        raise StructureError("candidate tuples have mixed lengths")
    over = [structure.index[p] for p in over]
    G = pointwise_stabilizer(_aut_group(structure), over)
    for g in G.gens:
        f = point_map(structure.points, g)
        if {act(f, t) for t in cand} != cand:
            return False
    return True


@dataclass(frozen=True)
class QuotientSort:
    name: str
    domain: frozenset
    classes: tuple[frozenset, ...]

    @classmethod
    def from_pairs(cls, name: str, domain: Iterable, pairs: Iterable[tuple]) -> "QuotientSort":
        D = frozenset(domain)
        E = set(pairs)
        for d in D:
            if (d, d) not in E:
                raise NotEquivalenceError(f"not reflexive at {d!r}")
        for a, b in E:
            if a not in D or b not in D:
                raise NotEquivalenceError("pair outside the domain")
            if (b, a) not in E:
                raise NotEquivalenceError("not symmetric")
        blocks: dict = {}
        for d in D:
            blocks[d] = frozenset(b for a, b in E if a == d)
        for d, blk in blocks.items():
            for x in blk:
                if blocks[x] != blk:
                    raise NotEquivalenceError("not transitive")
        return cls._canonical(name, D, set(blocks.values()))

    @classmethod
    def from_blocks(cls, name: str, blocks: Iterable[Iterable]) -> "QuotientSort":
        blocks = [frozenset(b) for b in blocks]
        D = frozenset().union(*blocks) if blocks else frozenset()
        if sum(len(b) for b in blocks) != len(D) or any(not b for b in blocks):
            raise NotEquivalenceError("blocks do not partition the domain")
        return cls._canonical(name, D, blocks)

    @classmethod
    def _canonical(cls, name, D, blocks) -> "QuotientSort":
        ordered = sorted(blocks, key=lambda b: min(map(term_key, b)))
        return cls(name, D, tuple(ordered))

    @cached_property
    def class_index(self) -> dict:
        return {t: i for i, blk in enumerate(self.classes) for t in blk}

    @property
    def width(self) -> int:
        return len(str(max(len(self.classes) - 1, 0)))

    def class_point(self, i: int) -> Pt:
        return Pt(self.name, f"c{i:0{self.width}d}")

    def class_points(self) -> list[Pt]:
        return [self.class_point(i) for i in range(len(self.classes))]

    def point_of(self, term) -> Pt:
        return self.class_point(self.class_index[term])

    def representative(self, i: int):
        return min(self.classes[i], key=term_key)

    def pairs(self) -> set[tuple]:
        return {(a, b) for blk in self.classes for a in blk for b in blk}


@dataclass(frozen=True)
class EqFragment:
    base: SortedUniverse
    imaginaries: tuple[QuotientSort, ...] = ()
    named: frozenset = frozenset()

    def __post_init__(self):
        names = [q.name for q in self.imaginaries]
        if len(set(names)) != len(names) or set(names) & set(self.base.sorts):
            raise StructureError("imaginary sort names must be fresh")
        known = set(self.points)
        for p in self.named:
            if p not in known:
                raise StructureError(f"named point {p} does not exist")

    @cached_property
    def points(self) -> tuple[Pt, ...]:
        pts = list(self.base.points)
        for q in self.imaginaries:
            pts.extend(q.class_points())
        return tuple(pts)

    @cached_property
    def index(self) -> dict[Pt, int]:
        return {p: i for i, p in enumerate(self.points)}

    def quotient(self, name: str) -> QuotientSort:
        for q in self.imaginaries:
            if q.name == name:
                return q
        raise KeyError(name)

    def extend(self, perm: Perm) -> Perm:
        """Extend a permutation of the base points to every imaginary class."""
        n = self.base.size
        if perm.degree == len(self.points):
            return perm
        f = point_map(self.base.points, perm)
        img = list(perm.img)
        offset = n
        for q in self.imaginaries:
            for i in range(len(q.classes)):
                j = q.class_index[act(f, q.representative(i))]
                img.append(offset + j)
            offset += len(q.classes)
        return Perm(img)

    def restrict_to_base(self, perm: Perm) -> Perm:
        return Perm(perm.img[: self.base.size])

    @cached_property
    def base_group(self) -> PermGroup:
        return _aut_group(self.base)

    @cached_property
    def full_group(self) -> PermGroup:
        """Aut(M) acting on base points and imaginary classes."""
        return PermGroup([self.extend(g) for g in self.base_group.gens], len(self.points),
                         self.points)

    @cached_property
    def group(self) -> PermGroup:
        """Aut(M/A) for the named points A."""
        return pointwise_stabilizer(self.full_group, [self.index[p] for p in self.named])

    def base_gens(self) -> list[Perm]:
        return [self.restrict_to_base(g) for g in self.group.gens]

    def with_named(self, points: Iterable[Pt]) -> "EqFragment":
        return EqFragment(self.base, self.imaginaries, self.named | frozenset(points))

    def merge(self, other: "EqFragment") -> "EqFragment":
        if other.base is not self.base and other.base != self.base:
            raise StructureError("fragments over different structures")
        mine = {q.name: q for q in self.imaginaries}
        extra = []
        for q in other.imaginaries:
            if q.name in mine:
                if mine[q.name] != q:
                    raise StructureError(f"clashing imaginary sort {q.name}")
            else:
                extra.append(q)
        return EqFragment(self.base, self.imaginaries + tuple(extra), self.named | other.named)


def fragment(structure: SortedUniverse | EqFragment) -> EqFragment:
    if isinstance(structure, EqFragment):
        return structure
    return EqFragment(structure)


def dcl(structure: SortedUniverse | EqFragment, over: Iterable[Pt] = ()) -> frozenset[Pt]:
    """Points of the fragment fixed by the pointwise stabilizer of ``over``."""
    frag = fragment(structure)
    try:
        idx = [frag.index[p] for p in over]
    except KeyError as exc:
        raise StructureError(f"unknown point {exc.args[0]}") from None
    H = pointwise_stabilizer(frag.group, idx)
    return frozenset(p for i, p in enumerate(frag.points) if all(g.img[i] == i for g in H.gens))


def add_quotient(structure: SortedUniverse | EqFragment, name: str, D: Iterable,
                 E: Iterable[tuple] | QuotientSort) -> EqFragment:
    """Append the quotient ``D/E`` after checking both are invariant."""
    frag = fragment(structure)
    q = E if isinstance(E, QuotientSort) else QuotientSort.from_pairs(name, D, E)
    if isinstance(E, QuotientSort) and frozenset(D) != q.domain:
        raise StructureError("domain does not match the supplied quotient")
    known = set(frag.base.points)
    for t in q.domain:
        if not all(p in known for p in leaves(t)):
            raise StructureError(f"term {t!r} uses unknown points")
    for g in frag.base_gens():
        f = point_map(frag.base.points, g)
        if {act(f, t) for t in q.domain} != q.domain:
            raise NotInvariantError("domain", f"D is not invariant under {g}")
        moved = {frozenset(act(f, t) for t in blk) for blk in q.classes}
        if moved != set(q.classes):
            raise NotInvariantError("relation", f"E is not invariant under {g}")
    return EqFragment(frag.base, frag.imaginaries + (q,), frag.named)


def identity_quotient(structure: SortedUniverse, name: str, sorts: Iterable[str] | None = None) -> QuotientSort:
    """``D`` = points of the given sorts as 1-tuples, ``E`` = equality."""
    keep = set(structure.sorts) if sorts is None else set(sorts)
    return QuotientSort.from_blocks(name, [[(p,)] for p in structure.points if p.sort in keep])
