import pytest

from conftest import V, cycle, free
from oracles import brute_automorphisms, brute_subgroups, closure
from finitary.autcalc import aut
from finitary.galois import (SectionError, coset_imaginary, exact_sequence, induced_structure,
                             normal_iff_zero_definable, section_to_interpretation)
from finitary.instances import exact_pairs, galois_corpus, nonsplit_pair
from finitary.perm import GroupHom, Perm, PermGroup, all_subgroups, find_sections
from finitary.structure import NotInvariantError, QuotientSort, StructureError, add_quotient


def _elements(G):
    return frozenset(G.elements())


@pytest.mark.parametrize("name", ["square", "cycle3", "free3", "two_pairs", "path3"])
def test_subgroups_match_brute_force(name):
    M = galois_corpus()[name]
    G = aut(M).group
    assert {_elements(H) for H in all_subgroups(G)} == brute_subgroups(brute_automorphisms(M))


@pytest.mark.parametrize("name", sorted(galois_corpus()))
def test_anchor_stabilizer_is_subgroup(name):
    M = galois_corpus()[name]
    G = aut(M).group
    for H in all_subgroups(G):
        ci = coset_imaginary(M, H)
        # brute force: elements of Aut(M) whose extension fixes the anchor
        frag = ci.fragment
        a = frag.index[ci.anchor]
        fixing = {g for g in G.elements() if frag.extend(g).img[a] == a}
        assert fixing == set(H.elements())


@pytest.mark.parametrize("name", sorted(galois_corpus()))
def test_normality_correspondence(name):
    M = galois_corpus()[name]
    G = aut(M).group
    elems = list(G.elements())
    for H in all_subgroups(G):
        he = set(H.elements())
        brute_normal = all(g * h * ~g in he for g in elems for h in he)
        normal, fixes = normal_iff_zero_definable(coset_imaginary(M, H))
        assert normal == fixes == brute_normal


def test_coset_count_is_index(square):
    G = aut(square).group
    for H in all_subgroups(G):
        ci = coset_imaginary(square, H)
        assert len(ci.quotient.classes) == G.order // H.order


def test_coset_rejects_non_subgroup(c3):
    with pytest.raises(StructureError):
        coset_imaginary(c3, PermGroup([Perm([1, 0, 2])], 3))


def test_induced_structure_automorphisms():
    for name, frag, qname in exact_pairs():
        N = induced_structure(frag, qname)
        seq = exact_sequence(frag, qname)
        restricted = {seq.restriction(g) for g in seq.group.elements()}
        assert restricted == set(brute_automorphisms(N)), name


def test_exact_sequences_against_brute_force():
    for name, frag, qname in exact_pairs():
        seq = exact_sequence(frag, qname)
        assert seq.exact, name
        cls = [frag.index[p] for p in frag.quotient(qname).class_points()]
        ker = {g for g in seq.group.elements() if all(g.img[c] == c for c in cls)}
        assert ker == set(seq.kernel.elements()), name


def test_not_invariant_quotient_rejected(square):
    q = QuotientSort.from_blocks("AB", [[V("a"), V("b")], [V("c"), V("d")]])
    with pytest.raises(NotInvariantError):
        add_quotient(square, "AB", square.points, q)


def _brute_complement_exists(seq) -> bool:
    K = set(seq.kernel.elements())
    q = seq.quotient_group.order
    subs = brute_subgroups(list(seq.group.elements()))
    return any(len(S) == q and S & K == {Perm.identity(seq.group.degree)} for S in subs)


def test_sections_exist_iff_complement():
    for name, frag, qname in exact_pairs() + [("nonsplit",) + nonsplit_pair()]:
        seq = exact_sequence(frag, qname)
        assert bool(find_sections(seq.restriction)) == _brute_complement_exists(seq), name


def test_nonsplit_has_no_section():
    seq = exact_sequence(*nonsplit_pair())
    assert seq.exact
    assert find_sections(seq.restriction) == []
    assert seq.kernel.order == 2 and seq.quotient_group.order == 2


def test_section_witnesses():
    split = 0
    for name, frag, qname in exact_pairs():
        seq = exact_sequence(frag, qname)
        sections = find_sections(seq.restriction)
        for s in sections:
            w = section_to_interpretation(seq, s)
            assert w.ok and w.classification.isomorphism, name
            # the named parameters are fixed by the section image
            F = w.coset.fragment
            for h in s.image().gens:
                e = F.extend(frag.restrict_to_base(h))
                assert all(e.img[F.index[p]] == F.index[p] for p in w.fixed_set)
        split += bool(sections)
    assert split >= 3


def test_section_rejects_non_section():
    sq = cycle(4, directed=False)
    q = QuotientSort.from_blocks("Opp", [[V("a"), V("c")], [V("b"), V("d")]])
    seq = exact_sequence(add_quotient(sq, "Opp", sq.points, q), "Opp")
    Q = seq.quotient_group
    G = seq.group
    bad = [g for g in G.elements() if not g.is_identity() and seq.restriction(g).is_identity()][0]
    images = [bad for _ in Q.gens]
    try:
        fake = GroupHom(Q, G, images)
    except ValueError:
        return
    with pytest.raises(SectionError):
        section_to_interpretation(seq, fake)


def test_free_points_subgroup_lattice():
    # Aut of 3 free points is S3 with six subgroups; only 1, A3 and S3 are normal
    M = free(3)
    flags = sorted((H.order, normal_iff_zero_definable(coset_imaginary(M, H))[0])
                   for H in all_subgroups(aut(M).group))
    assert flags == [(1, True), (2, False), (2, False), (2, False), (3, True), (6, True)]
    assert len(closure([Perm([1, 0, 2]), Perm([1, 2, 0])])) == 6
