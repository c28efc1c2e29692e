import pytest
from hypothesis import given, settings, strategies as st

from conftest import V, cycle, free
from oracles import brute_automorphisms, fixed_points
from finitary.instances import FiniteField
from finitary.structure import (NotEquivalenceError, NotInvariantError, Pt, QuotientSort,
                                SortedUniverse, StructureError, add_quotient, dcl,
                                identity_quotient, is_definable, validate)


def test_validate_well_formed(c3):
    r = validate(c3)
    assert r.ok and not r.warnings


def test_validate_missing_element():
    s = SortedUniverse.build({"V": ["a", "b"]}, {"E": (["V", "V"], [("a", "z")])})
    r = validate(s)
    assert not r.ok
    assert any("missing V:z" in v for v in r.violations)


def test_validate_empty_structure_warns():
    r = validate(SortedUniverse.build({}))
    assert r.ok
    assert r.warnings == ["structure has no sorts"]


def test_validate_unknown_sort_and_constant():
    s = SortedUniverse.build({"V": ["a"]}, {"E": (["W"], [("a",)])}, {"c": ("V", "q")})
    r = validate(s)
    assert any("unknown sort W" in v for v in r.violations)
    assert any("constant c" in v for v in r.violations)


def test_is_definable_examples(c3):
    pts = [V("a"), V("b"), V("c")]
    assert is_definable(c3, pts)
    assert not is_definable(c3, [V("a")])
    assert is_definable(c3, [V("a")], over=[V("a")])


def test_is_definable_matches_brute_force(c3):
    auts = brute_automorphisms(c3)
    assert len(auts) == 3
    for cand in ([V("a")], [V("a"), V("b")], [(V("a"), V("b"))], [(V("a"), V("c"))]):
        norm = {(t,) if isinstance(t, Pt) else t for t in cand}
        invariant = all({tuple(c3.points[g.img[c3.index[p]]] for p in t) for t in norm} == norm
                        for g in auts)
        assert is_definable(c3, cand) == invariant


def test_is_definable_rejects_malformed(c3):
    with pytest.raises(StructureError):
        is_definable(c3, [Pt("V", "zz")])
    with pytest.raises(StructureError):
        is_definable(c3, [V("a"), (V("a"), V("b"))])


def test_dcl_examples(c3):
    assert dcl(c3) == frozenset()
    assert dcl(c3, [V("a")]) == {V("a"), V("b"), V("c")}


def test_dcl_field_gf4_is_prime_field():
    F = FiniteField(2, 2)
    M = F.structure()
    assert {p.elem for p in dcl(M)} == {F.name(0), F.name(1)}
    auts = brute_automorphisms(M)
    assert {M.points[x].elem for x in fixed_points(auts, M.size)} == {F.name(0), F.name(1)}


def test_dcl_unknown_point(c3):
    with pytest.raises(StructureError):
        dcl(c3, [Pt("V", "q")])


def test_add_quotient_opposite_pairs(square):
    pairs = [(a, b) for blk in (["a", "c"], ["b", "d"]) for a in blk for b in blk]
    frag = add_quotient(square, "Opp", square.points, [(V(a), V(b)) for a, b in pairs])
    q = frag.quotient("Opp")
    assert len(q.classes) == 2
    assert q.classes[0] == {V("a"), V("c")}
    # the full group of the fragment acts on both classes
    assert frag.full_group.order == 8


def test_add_quotient_identity_is_copy(c3):
    q = identity_quotient(c3, "Id")
    frag = add_quotient(c3, "Id", q.domain, q)
    assert len(frag.quotient("Id").classes) == c3.size
    assert dcl(frag) == frozenset()


def test_add_quotient_not_invariant(c3):
    with pytest.raises(NotInvariantError) as e:
        add_quotient(c3, "Bad", c3.points, QuotientSort.from_blocks("Bad", [[V("a"), V("b")], [V("c")]]))
    assert e.value.part == "relation"
    with pytest.raises(NotInvariantError) as e:
        add_quotient(c3, "Bad", [V("a")], [(V("a"), V("a"))])
    assert e.value.part == "domain"


def test_add_quotient_not_equivalence(c3):
    with pytest.raises(NotEquivalenceError):
        add_quotient(c3, "Bad", c3.points, [(V("a"), V("a"))])
    with pytest.raises(NotEquivalenceError):
        QuotientSort.from_pairs("Q", [V("a"), V("b")],
                                [(V("a"), V("a")), (V("b"), V("b")), (V("a"), V("b"))])


def test_relations_preserved_by_every_generator():
    for s in (cycle(5), cycle(4, directed=False), free(3)):
        from finitary.autcalc import aut
        for g in aut(s).group.gens:
            assert s.is_automorphism(g)


_pts = [V(x) for x in "abcd"]


@settings(max_examples=30, deadline=None)
@given(st.sets(st.sampled_from(_pts)), st.sets(st.sampled_from(_pts)), st.sets(st.sampled_from(_pts)))
def test_definable_monotone_and_dcl_idempotent(cand, over, extra):
    s = cycle(4, directed=False)
    if is_definable(s, cand, over):
        assert is_definable(s, cand, over | extra)
    d = dcl(s, over)
    assert d >= set(over) | dcl(s)
    assert dcl(s, d) == d
