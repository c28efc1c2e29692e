"""Subgroups versus imaginaries, restriction exact sequences, and sections.

A subgroup H of Aut(M) is realised as the stabilizer of one imaginary: the
class of M's enumeration tuple in the partition of its Aut(M)-orbit into
H-cosets.  Restriction to a 0-definable quotient sort gives an exact
sequence; a section of that restriction yields named parameters A over
which N interprets M isomorphically.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .autcalc import aut
from .interp import Classification, Interpretation, classify, interpretation, validate_premorphism
from .perm import GroupHom, Perm, PermGroup, group_from_generators, is_normal, pointwise_stabilizer
from .structure import (EqFragment, Pt, QuotientSort, SortedUniverse, StructureError,
                        act, add_quotient, dcl, fragment)

__all__ = [
    "CosetImaginary", "coset_imaginary", "normal_iff_zero_definable", "ExactSequence",
    "exact_sequence", "induced_structure", "SectionWitness", "section_to_interpretation",
    "SectionError",
]


class SectionError(ValueError):
    pass


def _fresh(frag: EqFragment, stem: str) -> str:
    used = set(frag.base.sorts) | {q.name for q in frag.imaginaries}
    name, k = stem, 0
    while name in used:
        k += 1
        name = f"{stem}{k}"
    return name


def _as_base_group(frag: EqFragment, H: PermGroup) -> PermGroup:
    n = frag.base.size
    if H.degree == n:
        return H
    if H.degree == len(frag.points):
        return PermGroup([frag.restrict_to_base(h) for h in H.gens], n, frag.base.points)
    raise StructureError("subgroup acts on the wrong number of points")


@dataclass(frozen=True)
class CosetImaginary:
    fragment: EqFragment
    subgroup: PermGroup
    quotient: QuotientSort
    anchor: Pt

    def anchor_stabilizer(self) -> PermGroup:
        """Aut(M/anchor) restricted to the base points."""
        frag = self.fragment
        S = pointwise_stabilizer(frag.group, [frag.index[self.anchor]])
        return PermGroup([frag.restrict_to_base(g) for g in S.gens], frag.base.size,
                         frag.base.points)


def coset_imaginary(M: SortedUniverse | EqFragment, H: PermGroup,
                    name: str | None = None) -> CosetImaginary:
    """H-coset classes on the Aut(M/A)-orbit of the enumeration tuple."""
    frag = fragment(M)
    G = PermGroup(frag.base_gens(), frag.base.size, frag.base.points)
    H = _as_base_group(frag, H)
    if not H.is_subgroup_of(G):
        raise StructureError("H is not a subgroup of the automorphism group")
    pts = frag.base.points
    term = lambda g: tuple(pts[x] for x in g.img)
    helems = H.elements()
    seen: set = set()
    blocks = []
    anchor_block = None
    for s in G.elements():
        if s in seen:
            continue
        coset = [s * h for h in helems]
        seen.update(coset)
        blk = sorted(term(c) for c in coset)
        blocks.append(blk)
        if s.is_identity():
            anchor_block = blk
    qname = name or _fresh(frag, "Coset")
    q = QuotientSort.from_blocks(qname, blocks)
    new = add_quotient(frag, qname, q.domain, q)
    anchor = q.point_of(anchor_block[0])
    ci = CosetImaginary(new, H, new.quotient(qname), anchor)
    if not ci.anchor_stabilizer().same_group(H):
        raise AssertionError("anchor stabilizer differs from H")
    return ci


def normal_iff_zero_definable(ci: CosetImaginary) -> tuple[bool, bool]:
    """(H normal in Aut(M/A), H is the pointwise stabilizer of the set formed
    by the orbit of the anchor, which is definable over A).  These always agree."""
    frag = ci.fragment
    G = PermGroup(frag.base_gens(), frag.base.size, frag.base.points)
    normal = is_normal(G, ci.subgroup)
    orbit = frag.group.orbit(frag.index[ci.anchor])
    S = pointwise_stabilizer(frag.group, orbit)
    S = PermGroup([frag.restrict_to_base(g) for g in S.gens], frag.base.size, frag.base.points)
    return normal, S.same_group(ci.subgroup)


def induced_structure(frag: EqFragment, qname: str) -> SortedUniverse:
    """The quotient sort as a standalone structure.

    Its one relation is the Aut(M)-orbit of the enumeration tuple of the
    classes, so its automorphisms are exactly the restrictions from M.
    """
    q = frag.quotient(qname)
    cls = q.class_points()
    idx = [frag.index[p] for p in cls]
    G = frag.full_group
    seen = {tuple(idx)}
    todo = [tuple(idx)]
    while todo:
        t = todo.pop()
        for s in G.gens:
            u = tuple(s.img[x] for x in t)
            if u not in seen:
                seen.add(u)
                todo.append(u)
    names = [p.elem for p in cls]
    pos = {frag.index[p]: p.elem for p in cls}
    tuples = sorted(tuple(pos[x] for x in t) for t in seen)
    return SortedUniverse.build({qname: names}, {"orbit": ([qname] * len(names), tuples)})


@dataclass
class ExactSequence:
    fragment: EqFragment
    qname: str
    kernel: PermGroup
    group: PermGroup
    quotient_group: PermGroup
    restriction: GroupHom
    induced: SortedUniverse
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def exact(self) -> bool:
        return all(self.checks.values())


def exact_sequence(M: SortedUniverse | EqFragment, qname: str) -> ExactSequence:
    """1 -> Aut(M/N) -> Aut(M) -> Aut(N) -> 1 for a 0-definable quotient sort N."""
    frag = fragment(M)
    q = frag.quotient(qname)
    G = frag.full_group
    for s in G.gens:
        f = lambda p, s=s: frag.base.points[s.img[frag.base.index[p]]]
        if {act(f, t) for t in q.domain} != q.domain:
            raise StructureError(f"sort {qname} is not 0-definable")
        if {frozenset(act(f, t) for t in b) for b in q.classes} != set(q.classes):
            raise StructureError(f"sort {qname} is not 0-definable")
    cls = [frag.index[p] for p in q.class_points()]
    kernel = pointwise_stabilizer(G, cls)
    N = induced_structure(frag, qname)
    AN = aut(N, max_size=N.size).group
    images = []
    for s in G.gens:
        images.append(Perm([N.index[Pt(qname, frag.points[s.img[c]].elem)] for c in cls]))
    rho = GroupHom(G, AN, images)
    checks = {
        "kernel_is_ker_restriction": rho.kernel().same_group(kernel),
        "restriction_surjective": rho.is_surjective(),
        "orders_multiply": kernel.order * AN.order == G.order,
    }
    return ExactSequence(frag, qname, kernel, G, AN, rho, N, checks)


@dataclass
class SectionWitness:
    section: GroupHom
    fixed_set: frozenset
    interpretation: Interpretation
    bracket: frozenset
    coset: CosetImaginary
    classification: Classification
    checks: dict[str, bool]
    fragment_choice: str

    @property
    def ok(self) -> bool:
        return all(self.checks.values())


def section_to_interpretation(seq: ExactSequence, section: GroupHom) -> SectionWitness:
    """Parameters A = Fix(section image) over which N interprets M isomorphically."""
    rho = seq.restriction
    if not section.domain.same_group(seq.quotient_group):
        raise SectionError("section must start at Aut(N)")
    for q in section.domain.gens:
        if rho(section(q)) != q:
            raise SectionError("not a section of the restriction map")
    frag = seq.fragment
    img = section.image()
    ci = coset_imaginary(frag, img)
    F2 = ci.fragment
    ext = [F2.extend(frag.restrict_to_base(h)) for h in img.gens]
    fixed = frozenset(p for i, p in enumerate(F2.points) if all(h.img[i] == i for h in ext))
    target = F2.with_named(fixed)
    N = seq.induced
    i = interpretation(N, target, seq.qname, {p: Pt(seq.qname, p.elem) for p in N.points})
    i = validate_premorphism(i)
    cl = classify(i)
    iN = [i.map[p] for p in N.points]
    closed = dcl(F2, list(fixed) + iN)
    dcl_N = dcl(N)
    checks = {
        "section": True,
        "premorphism": bool(i.premorphism_ok),
        "base_in_dcl": all(p in closed for p in F2.base.points),
        "bracket_meets_image_in_dcl_N": {p for p in fixed if p in set(iN)}
        == {i.map[p] for p in dcl_N},
        "isomorphism": cl.isomorphism,
    }
    if not all(checks.values()):
        raise AssertionError(f"section witness failed: {checks}")
    choice = (f"A = Fix of the section image in the fragment extended by {ci.quotient.name}; "
              f"{len(fixed)} fixed points")
    return SectionWitness(section, fixed, i, fixed, ci, cl, checks, choice)
