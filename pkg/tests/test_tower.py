import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_automorphisms
from finitary.instances import cyclic_tower, mixed_tower
from finitary.perm import GroupHom, Perm, PermGroup, iso_groups
from finitary.tower import (Cover, CoverTower, GroupChain, TowerError, amalgamate_syntactic,
                            cyclic_chain, factor_cover, fiber_structure, gauge_table, limit_group,
                            pi1_et, section_demo, sharp_subgroup, tower_laws)

TOWERS = {
    "cyclic(2,1)": lambda: cyclic_tower(2, 1),
    "cyclic(2,2)": lambda: cyclic_tower(2, 2),
    "cyclic(2,3)": lambda: cyclic_tower(2, 3),
    "cyclic(3,2)": lambda: cyclic_tower(3, 2),
    "mixed": mixed_tower,
    "twisted": lambda: mixed_tower(twisted=True),
}


def _brute_compatible(T, forward):
    out = []
    for choice in itertools.product(*(T.fiber(a) for a in T.nodes)):
        t = dict(zip(T.nodes, choice))
        if all(t[b] == forward(a, b, t[a]) for a, b in T.pairs):
            out.append(t)
    return out


def test_chain_composites():
    ch = cyclic_chain(2, 3)
    assert [G.order for G in ch.groups] == [1, 2, 4, 8]
    g = ch.groups[3].gens[0]
    assert ch.epis[(3, 1)](g) == ch.epis[(2, 1)](ch.epis[(3, 2)](g))


def test_chain_rejects_non_surjective_step():
    one = PermGroup([], 1)
    z2 = PermGroup([Perm([1, 0])], 2)
    z4 = PermGroup([Perm([1, 2, 3, 0])], 4)
    with pytest.raises(TowerError):
        GroupChain.from_steps([one, z2, z4], [GroupHom(z2, one, [Perm([0])]),
                                              GroupHom(z4, z2, [Perm([0, 1])])])


def test_chain_needs_trivial_base():
    z2 = PermGroup([Perm([1, 0])], 2)
    with pytest.raises(TowerError):
        GroupChain.from_steps([z2], [])


@pytest.mark.parametrize("covers, message", [
    ([Cover("a", ("r",), 5)], "not in the chain"),
    ([Cover("a", ("r",), 0), Cover("a", ("s",), 0)], "unique"),
    ([Cover("a", ("r", "r"), 0)], "distinct"),
])
def test_tower_rejects_bad_covers(covers, message):
    with pytest.raises(TowerError, match=message):
        CoverTower(cyclic_chain(2, 1), covers, PermGroup([], 1))


def test_tower_rejects_intransitive_gk():
    gk = PermGroup([Perm([1, 0])], 2)
    with pytest.raises(TowerError, match="transitive"):
        CoverTower(cyclic_chain(2, 1), [Cover("a", ("x", "y"), 0, (Perm([0, 1]),))], gk)


def test_tower_rejects_non_closed_table():
    # twisting L3 -> L2 alone leaves L3 -> L2 -> L1 disagreeing with L3 -> L1
    T = cyclic_tower(2, 3)
    table = dict(T.table)
    table[(("L3", "r"), ("L2", "r"))] = T.group(("L2", "r")).gens[0]
    with pytest.raises(TowerError, match="closure"):
        CoverTower(T.chain, list(T.covers.values()), T.gk, table)


def test_tower_rejects_bad_identity_entry():
    T = cyclic_tower(2, 1)
    table = dict(T.table)
    table[(("L1", "r"), ("L1", "r"))] = T.group(("L1", "r")).gens[0]
    with pytest.raises(TowerError, match="identity"):
        CoverTower(T.chain, list(T.covers.values()), T.gk, table)


@pytest.mark.parametrize("name", sorted(TOWERS))
def test_compatible_tuples_against_brute_force(name):
    T = TOWERS[name]()
    key = lambda t: tuple(t[a] for a in T.nodes)
    fiber = lambda a, b, y: T.table[(a, b)] * T.epi(a, b)(y)
    deck = lambda a, b, d: T.table[(a, b)] * T.epi(a, b)(d) * ~T.table[(a, b)]
    assert sorted(map(key, T.fiber_tuples())) == sorted(map(key, _brute_compatible(T, fiber)))
    assert sorted(map(key, T.deck_tuples())) == sorted(map(key, _brute_compatible(T, deck)))


@pytest.mark.parametrize("name", sorted(TOWERS))
def test_tower_laws_hold(name):
    laws = tower_laws(TOWERS[name]())
    assert all(laws.values()), laws


@pytest.mark.parametrize("d", range(1, 6))
def test_limit_of_cyclic_tower(d):
    L = limit_group(cyclic_tower(2, d))
    assert L.order == 2 ** d and L.group.is_abelian()
    top = ("L%d" % d, "r")
    assert L.projections[top].is_injective()


def test_deck_difference_brute_force():
    T = mixed_tower()
    for a, b in T.pairs:
        ms = T.intermediate_morphisms(a, b)
        for m1 in ms:
            for m2 in ms:
                g = T.deck_difference(m1, m2)
                hits = [h for h in T.fiber(b) if all(h * m1(y) == m2(y) for y in T.fiber(a))]
                assert hits == [g]


def test_deck_difference_requires_same_endpoints():
    T = mixed_tower()
    (a, b), (c, d) = [p for p in T.pairs if p[0] != p[1]][:2]
    with pytest.raises(TowerError):
        T.deck_difference(T.distinguished(a, b), T.distinguished(c, d))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2 ** 16))
def test_gauge_tables_are_closed(seed):
    T = mixed_tower()
    rng = random.Random(seed)
    gauge = {a: rng.choice(T.fiber(a)) for a in T.nodes}
    T2 = CoverTower(T.chain, list(T.covers.values()), T.gk, gauge_table(T, gauge))
    assert T2.closure_violation() is None
    assert limit_group(T2).order == limit_group(T).order


@pytest.mark.parametrize("name", ["cyclic(2,2)", "mixed", "twisted"])
def test_fiber_structure_and_pi1(name):
    T = TOWERS[name]()
    fs = fiber_structure(T)
    assert all(fs.checks.values()), fs.checks
    P = pi1_et(fs)
    assert P.order == len(brute_automorphisms(fs.forget))
    assert iso_groups(P, limit_group(T).group) is not None


def test_fiber_sorts_distinct_per_node():
    fs = fiber_structure(mixed_tower())
    assert len(fs.forget.sorts) == len(mixed_tower().nodes)


def test_sharp_against_brute_force():
    for twisted, index in [(False, 1), (True, 2)]:
        T = mixed_tower(twisted)
        keep = [s for s in T.gk.elements()
                if all(T.table[(T.act_on_zero(s, a), T.act_on_zero(s, b))] == T.table[(a, b)]
                       for a, b in T.pairs)]
        r = sharp_subgroup(T)
        assert set(r.group.elements()) == set(keep)
        assert r.index == index and r.is_k == (index == 1)
        assert (r.obstruction is None) == r.is_k


def test_section_demo_untwisted():
    d = section_demo(mixed_tower())
    assert d.section is not None and all(d.checks.values())
    gk = mixed_tower().gk
    assert all(d.restriction(d.section(s)) == s for s in gk.elements())


def test_section_demo_twisted():
    d = section_demo(mixed_tower(twisted=True))
    assert d.section is None and "no section" in d.message
    assert d.restriction.is_surjective()


def test_factor_cover():
    f = factor_cover(mixed_tower(), "m")
    assert all(f.checks.values()) and f.degrees == (2, 3)
    assert f.syntactic.geometric == 0 and f.geometric.geometric == 1


def test_amalgamate_syntactic():
    T = mixed_tower()
    c = amalgamate_syntactic(T.gk, T.covers["k2"], T.covers["1"])
    assert len(c.zeros) == 2 and c.constant_field.order == 1
    with pytest.raises(TowerError):
        amalgamate_syntactic(T.gk, T.covers["k2"], T.covers["m"])


def test_size_cap_on_cyclic_tower():
    with pytest.raises(Exception, match="cap"):
        cyclic_tower(2, 9)
