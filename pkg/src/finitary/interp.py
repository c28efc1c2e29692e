"""Interpretations: bijections from a structure onto a quotient sort of another.

An interpretation ``g: N -> M`` is stored as a map from the points of ``N``
to the class points of one quotient sort of an ``EqFragment`` over ``M``.
Quotient classes hold terms, i.e. points or nested tuples of points.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

import numpy as np

from .autcalc import InterpretationError, aut, restriction_hom
from .perm import Perm, PermGroup, tuple_orbits
from .structure import (EqFragment, Pt, QuotientSort, SortedUniverse, StructureError, act,
                        add_quotient, dcl, fragment, identity_quotient, leaves, point_map, term_key)

__all__ = [
    "Interpretation", "Classification", "InterpretationError", "interpretation",
    "identity_interpretation", "validate_premorphism", "classify", "equivalent",
    "invert", "compose", "transport",
]

# largest tuple space enumerated explicitly when comparing orbit partitions
_EXPLICIT_TUPLES = 200_000
# largest domain produced when composing interpretations
_COMPOSE_CAP = 100_000


@dataclass(frozen=True)
class Interpretation:
    source: SortedUniverse
    target: EqFragment
    qname: str
    map: Mapping[Pt, Pt]
    premorphism_ok: bool | None = None
    failures: tuple[str, ...] = ()

    @property
    def quotient(self) -> QuotientSort:
        return self.target.quotient(self.qname)

    def image_indices(self) -> list[int]:
        """Fragment indices of g(a) for the source points in order."""
        return [self.target.index[self.map[a]] for a in self.source.points]

    def term(self, a: Pt):
        q = self.quotient
        return q.representative(q.class_points().index(self.map[a]))


def interpretation(source: SortedUniverse, target: SortedUniverse | EqFragment, qname: str,
                   mapping: Mapping[Pt, object]) -> Interpretation:
    """Build an interpretation; map values may be class points or member terms."""
    frag = fragment(target)
    try:
        q = frag.quotient(qname)
    except KeyError:
        raise InterpretationError(f"target has no quotient sort {qname!r}") from None
    classes = set(q.class_points())
    resolved = {}
    for a in source.points:
        if a not in mapping:
            raise InterpretationError(f"map is not total: {a} missing")
        v = mapping[a]
        if not (isinstance(v, Pt) and v in classes):
            try:
                v = q.point_of(v)
            except KeyError:
                raise InterpretationError(f"{v!r} is not in the domain of {qname}") from None
        resolved[a] = v
    extra = set(mapping) - set(source.points)
    if extra:
        raise InterpretationError(f"map mentions unknown points {sorted(extra)}")
    if len(set(resolved.values())) != len(resolved):
        raise InterpretationError("map is not injective")
    if set(resolved.values()) != classes:
        raise InterpretationError("map is not onto the quotient sort")
    return Interpretation(source, frag, qname, resolved)


def identity_interpretation(N: SortedUniverse, qname: str = "Id") -> Interpretation:
    """``N`` onto its own identity quotient (points as 1-tuples)."""
    q = identity_quotient(N, qname)
    frag = EqFragment(N, (q,))
    return interpretation(N, frag, qname, {p: (p,) for p in N.points})


def validate_premorphism(g: Interpretation) -> Interpretation:
    """Check every transported relation and constant is Aut(M/A)-invariant."""
    frag = g.target
    gens = frag.group.gens
    index = g.source.index
    img = g.image_indices()
    failures = []
    for name, rel in sorted(g.source.relations.items()):
        moved = {tuple(img[index[p]] for p in t) for t in
                 (tuple(Pt(s, e) for s, e in zip(rel.signature, tup)) for tup in rel.tuples)}
        for s in gens:
            if {tuple(s.img[x] for x in t) for t in moved} != moved:
                failures.append(f"relation {name} not invariant under {s}")
                break
    for c, p in sorted(g.source.constants.items()):
        x = img[index[p]]
        if any(s.img[x] != x for s in gens):
            failures.append(f"constant {c} not fixed")
    return replace(g, premorphism_ok=not failures, failures=tuple(failures))


def _require_premorphism(g: Interpretation) -> Interpretation:
    if g.premorphism_ok is None:
        g = validate_premorphism(g)
    if not g.premorphism_ok:
        raise InterpretationError("not a pre-morphism: " + "; ".join(g.failures))
    return g


@dataclass(frozen=True)
class Classification:
    embedding: bool
    surjection: bool
    verified_up_to: int
    restricted_order: int
    aut_source_order: int
    missing_from_dcl: tuple[Pt, ...] = ()

    @property
    def isomorphism(self) -> bool:
        return self.embedding and self.surjection


def classify(g: Interpretation, max_k: int | None = None) -> Classification:
    """Embedding by orbit partitions on tuples of the image, surjection by dcl.

    A ``max_k`` below ``|N|`` limits the comparison to tuples of that length;
    the result then records ``verified_up_to = max_k``.
    """
    g = _require_premorphism(g)
    rho = restriction_hom(g)
    AN = rho.codomain
    R = rho.image()
    n = g.source.size
    top = n if max_k is None else min(n, max_k)
    embedding = True
    for k in range(1, top + 1):
        if k == n:
            # R is a subgroup of Aut(N); on n-tuples of distinct points the
            # partitions agree exactly when the orders do
            embedding = embedding and R.order == AN.order
            break
        if n ** k > _EXPLICIT_TUPLES:
            if top == n:
                embedding = R.order == AN.order
                break
            raise InterpretationError(f"tuple space {n}^{k} too large for explicit orbits")
        if not np.array_equal(tuple_orbits(R.gens, n, k), tuple_orbits(AN.gens, n, k)):
            embedding = False
            break
    frag = g.target
    closed = dcl(frag, [g.map[a] for a in g.source.points])
    missing = tuple(p for p in frag.base.points if p not in closed)
    return Classification(embedding, not missing, top, R.order, AN.order, missing)


def transport(g: Interpretation, perm: Perm) -> Perm:
    """The permutation of N induced by an automorphism of the target base."""
    s = g.target.extend(perm)
    back = {v: k for k, v in g.map.items()}
    img = []
    for a in g.source.points:
        b = g.target.points[s.img[g.target.index[g.map[a]]]]
        if b not in back:
            raise InterpretationError(f"automorphism moves g(N) off itself at {a}")
        img.append(g.source.index[back[b]])
    return Perm(img)


@dataclass(frozen=True)
class Equivalence:
    bijection: dict[Pt, Pt]
    source_twist: Perm


def equivalent(g1: Interpretation, g2: Interpretation,
               max_candidates: int = 40320) -> Equivalence | None:
    """An Aut(M/A)-invariant bijection ``h: g1(N) -> g2(N)`` with ``h g1 = g2 rho``.

    ``rho`` ranges over Aut(N), identity first.  Returns ``None`` when none exists.
    """
    if g1.source != g2.source:
        raise InterpretationError("source structures differ")
    if g1.target.base != g2.target.base:
        raise InterpretationError("interpretations land in different structures")
    g2 = _avoid_clashes(g2, g1.target)
    frag = g1.target.merge(g2.target).with_named(g1.target.named | g2.target.named)
    N = g1.source
    AN = aut(N, max_size=N.size).group
    if AN.order > max_candidates:
        raise InterpretationError(f"|Aut(N)| = {AN.order} exceeds candidate cap")
    gens = frag.group.gens
    x1 = [frag.index[g1.map[a]] for a in N.points]
    x2 = [frag.index[g2.map[a]] for a in N.points]
    image1 = set(x1)
    for s in gens:
        if {s.img[x] for x in x1} != image1:
            return None
    elems = sorted(AN.elements(), key=lambda r: (not r.is_identity(), r))
    for rho in elems:
        h = {x1[i]: x2[rho.img[i]] for i in range(N.size)}
        if all(s.img[h[x]] == h[s.img[x]] for s in gens for x in x1):
            pts = frag.points
            return Equivalence({pts[a]: pts[b] for a, b in h.items()}, rho)
    return None


def _avoid_clashes(g: Interpretation, other: EqFragment) -> Interpretation:
    """Rename g's imaginary sorts that share a name but not content with ``other``."""
    theirs = {q.name: q for q in other.imaginaries}
    taken = set(theirs) | {q.name for q in g.target.imaginaries} | set(g.target.base.sorts)
    renames = {}
    for q in g.target.imaginaries:
        if q.name in theirs and theirs[q.name] != q:
            new, k = q.name, 0
            while new in taken:
                k += 1
                new = f"{q.name}_{k}"
            taken.add(new)
            renames[q.name] = new
    if not renames:
        return g
    rename_pt = lambda p: Pt(renames.get(p.sort, p.sort), p.elem)
    imgs = tuple(replace(q, name=renames.get(q.name, q.name)) for q in g.target.imaginaries)
    frag = EqFragment(g.target.base, imgs, frozenset(rename_pt(p) for p in g.target.named))
    return replace(g, target=frag, qname=renames.get(g.qname, g.qname),
                   map={a: rename_pt(v) for a, v in g.map.items()})


def _orbit_witness_domain(g: Interpretation):
    """Aut(M/A) acting on the orbit of the tuple g(N).

    Returns the orbit tuples (fragment indices) and, for each, the acting
    permutation of the base points of M realising it.
    """
    frag = g.target
    u = tuple(frag.index[g.map[a]] for a in g.source.points)
    G = frag.group
    seen = {u: Perm.identity(len(frag.points))}
    todo = [u]
    while todo:
        t = todo.pop()
        for s in G.gens:
            v = tuple(s.img[x] for x in t)
            if v not in seen:
                seen[v] = s * seen[t]
                todo.append(v)
    return seen


def invert(g: Interpretation) -> Interpretation:
    """An interpretation of M (with its named points) in N inverting ``g``.

    Each Aut(M/A)-orbit O_i of M gets a witness function on the orbit S of
    the tuple g(N), sending sigma(g(N)) to sigma(m_i).  The domains are made
    disjoint by nesting each tuple i+1 times, and the quotient identifies
    terms with the same witness value.
    """
    cl = classify(g)
    if not cl.isomorphism:
        raise InterpretationError("invert needs an isomorphism")
    frag = g.target
    M = frag.base
    N = g.source
    if any(p not in M.index for p in frag.named):
        raise InterpretationError("named imaginaries are not supported by invert")
    back = {frag.index[v]: k for k, v in g.map.items()}
    orbit = _orbit_witness_domain(g)
    base_group = frag.group
    seen, reps = set(), []
    for i, p in enumerate(M.points):
        if i in seen:
            continue
        reps.append(i)
        seen |= set(base_group.orbit(i))
    blocks: dict[int, list] = {}
    for tag, m in enumerate(reps):
        for t, s in orbit.items():
            nt = tuple(back[x] for x in t)
            term = (nt,) * (tag + 1)
            blocks.setdefault(s.img[m], []).append(term)
    for m_idx, blk in blocks.items():
        blk.sort(key=term_key)
    qname = _fresh("Inv", N)
    q = QuotientSort.from_blocks(qname, [blocks[i] for i in range(M.size)])
    target = add_quotient(N, qname, q.domain, q)
    source = M
    if frag.named:
        consts = dict(M.constants)
        for p in sorted(frag.named):
            consts[f"named_{p.sort}_{p.elem}"] = p
        source = SortedUniverse(M.sorts, M.relations, consts)
    h = interpretation(source, target, qname, {M.points[i]: blocks[i][0] for i in range(M.size)})
    return validate_premorphism(h)


def _fresh(stem: str, N: SortedUniverse, taken: Iterable[str] = ()) -> str:
    used = set(N.sorts) | set(taken)
    name, k = stem, 0
    while name in used:
        k += 1
        name = f"{stem}{k}"
    return name


def _substitutions(term, options):
    if isinstance(term, Pt):
        return options[term]
    parts = [_substitutions(t, options) for t in term]
    return [tuple(c) for c in itertools.product(*parts)]


def compose(f: Interpretation, g: Interpretation) -> Interpretation:
    """``f o g: N -> K`` for ``g: N -> M`` and ``f: M -> K``.

    Leaves of g's terms are replaced by every member of their f-class; two
    substituted terms are identified when the underlying M-terms are.
    """
    M = g.target.base
    if f.source.sorts != M.sorts or f.source.relations != M.relations:
        raise InterpretationError("f does not start where g lands")
    fq = f.quotient
    members = {}
    for a in M.points:
        members[a] = list(fq.classes[fq.class_points().index(f.map[a])])
    gq = g.quotient
    new_blocks = []
    total = 0
    for blk in gq.classes:
        out = []
        for t in blk:
            subs = _substitutions(t, members)
            total += len(subs)
            if total > _COMPOSE_CAP:
                raise InterpretationError("composite quotient too large")
            out.extend(subs)
        new_blocks.append(sorted(set(out), key=term_key))
    qname = _fresh(f"{g.qname}_{f.qname}", f.target.base, [q.name for q in f.target.imaginaries])
    q = QuotientSort.from_blocks(qname, new_blocks)
    named = set(f.target.named)
    for p in g.target.named:
        if p not in f.map:
            raise InterpretationError("cannot transport named imaginaries")
        named.add(f.map[p])
    target = add_quotient(EqFragment(f.target.base, f.target.imaginaries, frozenset(named)),
                          qname, q.domain, q)
    mapping = {}
    for a in g.source.points:
        i = gq.class_points().index(g.map[a])
        mapping[a] = new_blocks[i][0]
    return validate_premorphism(interpretation(g.source, target, qname, mapping))
