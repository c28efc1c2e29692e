"""Finite truncations of a tower of Galois covers over a base point.

The base is collapsed to one point ``x``; the fiber of the cover with label
``mu`` and zero ``alpha`` is the deck group G_mu of its chain level, acted on
by deck transformations from the left.  A morphism between node ``a`` and
node ``b`` is ``y -> c * pi(y)`` with ``pi`` the chain epimorphism and ``c``
a deck element of the target, so all morphisms between two nodes form one
deck coset.  The distinguished table picks one twist ``c`` per pair.

The base Galois group Gk permutes the zeros of each label and acts on
fibers by moving the zero while keeping the group label.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Mapping, Sequence

import numpy as np

from .autcalc import aut, group_to_structure
from .perm import (GroupHom, NotHomomorphism, Perm, PermGroup, identity_hom, is_normal,
                   iso_groups, regular_representation)
from .structure import Pt, SortedUniverse

__all__ = [
    "TowerError", "GroupChain", "Cover", "Morphism", "CoverTower", "TruncatedLimit",
    "FiberStructure", "SharpResult", "SectionDemo", "Factorization",
    "cyclic_chain", "limit_group", "fiber_structure", "pi1_et", "sharp_subgroup",
    "section_demo", "factor_cover", "amalgamate_syntactic", "gauge_table", "tower_laws",
    "node_name",
]

Node = tuple[str, str]

# cap on compatible tuples enumerated for the limit group and the torsor
_MAX_TUPLES = 50_000


class TowerError(ValueError):
    pass


def _cyclic(n: int) -> PermGroup:
    return PermGroup([Perm([(i + 1) % n for i in range(n)])] if n > 1 else [], n)


def node_name(a: Node) -> str:
    return f"{a[0]}:{a[1]}"


def _ident(s: str) -> str:
    # injective: every character outside [A-Za-z0-9], underscore included, becomes _hex_
    return re.sub(r"[^A-Za-z0-9]", lambda m: f"_{ord(m.group()):x}_", s)


@dataclass(frozen=True)
class GroupChain:
    """Groups G_0 = 1, G_1, ... with epimorphisms G_i -> G_j for i >= j."""
    groups: tuple[PermGroup, ...]
    epis: Mapping[tuple[int, int], GroupHom]

    @classmethod
    def from_steps(cls, groups: Sequence[PermGroup], steps: Sequence[GroupHom]) -> "GroupChain":
        """``steps[i]`` maps level ``i+1`` onto level ``i``; composites are filled in."""
        groups = tuple(groups)
        if len(steps) != len(groups) - 1:
            raise TowerError("need one epimorphism per consecutive pair of levels")
        epis = {}
        for i, G in enumerate(groups):
            epis[(i, i)] = identity_hom(G)
        for i in range(1, len(groups)):
            step = steps[i - 1]
            if not step.is_surjective():
                raise TowerError(f"step {i} -> {i - 1} is not surjective")
            for j in range(i - 1, -1, -1):
                epis[(i, j)] = epis[(i - 1, j)].compose(step)
        chain = cls(groups, epis)
        chain.check()
        return chain

    def check(self) -> None:
        if not self.groups or self.groups[0].order != 1:
            raise TowerError("level 0 of the chain must be the trivial group")
        n = len(self.groups)
        for i in range(n):
            e = self.epis.get((i, i))
            if e is None or any(e(g) != g for g in self.groups[i].gens):
                raise TowerError(f"epi ({i},{i}) is not the identity")
        for i in range(n):
            for j in range(i + 1):
                if (i, j) not in self.epis:
                    raise TowerError(f"missing epi ({i},{j})")
                if not self.epis[(i, j)].is_surjective():
                    raise TowerError(f"epi ({i},{j}) is not surjective")
                for k in range(j + 1):
                    lhs = self.epis[(j, k)].compose(self.epis[(i, j)])
                    if not lhs.same_map(self.epis[(i, k)]):
                        raise TowerError(f"epis ({i},{j}), ({j},{k}) do not compose to ({i},{k})")

    def __len__(self) -> int:
        return len(self.groups)


def cyclic_chain(p: int, depth: int) -> GroupChain:
    """1 <- Z/p <- Z/p^2 <- ... <- Z/p^depth with reduction maps."""
    groups = [_cyclic(p ** i) for i in range(depth + 1)]
    steps = []
    for i in range(1, depth + 1):
        m = p ** (i - 1)
        steps.append(GroupHom(groups[i], groups[i - 1], [Perm([(x + 1) % m for x in range(m)])]))
    return GroupChain.from_steps(groups, steps)


@dataclass(frozen=True)
class Cover:
    label: str
    zeros: tuple[str, ...]
    geometric: int
    gk_action: tuple[Perm, ...] = ()
    constant_field: PermGroup | None = None


@dataclass(frozen=True)
class Morphism:
    source: Node
    target: Node
    twist: Perm
    epi: GroupHom

    def __call__(self, y: Perm) -> Perm:
        return self.twist * self.epi(y)


class CoverTower:
    """A validated tower; ``table`` maps (a, b) to the distinguished twist."""

    def __init__(self, chain: GroupChain, covers: Sequence[Cover], gk: PermGroup,
                 distinguished: str | Mapping[tuple[Node, Node], Perm] = "auto"):
        self.chain = chain
        self.gk = gk
        self._cayley: dict = {}
        self._pi: dict = {}
        self.covers = {c.label: c for c in covers}
        if len(self.covers) != len(covers):
            raise TowerError("cover labels must be unique")
        self.nodes: list[Node] = []
        self.zero_action: dict[str, GroupHom] = {}
        for c in covers:
            if not 0 <= c.geometric < len(chain):
                raise TowerError(f"cover {c.label}: level {c.geometric} not in the chain")
            if len(set(c.zeros)) != len(c.zeros) or not c.zeros:
                raise TowerError(f"cover {c.label}: zeros must be distinct and nonempty")
            acts = list(c.gk_action) or [Perm.identity(len(c.zeros)) for _ in gk.gens]
            if len(acts) != len(gk.gens):
                raise TowerError(f"cover {c.label}: one zero permutation per Gk generator")
            try:
                hom = GroupHom(gk, PermGroup(acts, len(c.zeros)), acts)
            except NotHomomorphism:
                raise TowerError(f"cover {c.label}: zero action is not a Gk action") from None
            if len(hom.codomain.orbit(0)) != len(c.zeros):
                raise TowerError(f"cover {c.label}: Gk is not transitive on the zeros")
            self.zero_action[c.label] = hom
            self.nodes.extend((c.label, z) for z in c.zeros)
        self.node_index = {a: i for i, a in enumerate(self.nodes)}
        for c in covers:
            if c.constant_field is not None:
                if not c.constant_field.same_group(self.stabilizer((c.label, c.zeros[0]))):
                    raise TowerError(f"cover {c.label}: constant field is not the zero stabilizer")
        self.pairs = [(a, b) for a in self.nodes for b in self.nodes if self._has_morphism(a, b)]
        pairset = set(self.pairs)
        if isinstance(distinguished, str):
            if distinguished != "auto":
                raise TowerError(f"unknown distinguished table {distinguished!r}")
            self.table = {(a, b): self.group(b).identity() for a, b in self.pairs}
        else:
            table = dict(distinguished)
            for a in self.nodes:
                if (a, a) not in table:
                    raise TowerError(f"table is missing the identity entry at {node_name(a)}")
                if not table[(a, a)].is_identity():
                    raise TowerError(f"identity entry at {node_name(a)} is not the identity")
            for key in table:
                if key not in pairset:
                    raise TowerError(f"no morphism {node_name(key[0])} -> {node_name(key[1])}")
                if table[key] not in self.group(key[1]):
                    raise TowerError(f"twist at {node_name(key[0])} -> {node_name(key[1])} "
                                     "is not a deck element")
            for key in self.pairs:
                if key not in table:
                    raise TowerError(f"table has no entry {node_name(key[0])} -> {node_name(key[1])}")
            self.table = table
        bad = self.closure_violation()
        if bad is not None:
            raise TowerError("composition closure fails at "
                             + " -> ".join(node_name(x) for x in bad))

    # basic data

    def level(self, a: Node) -> int:
        return self.covers[a[0]].geometric

    def group(self, a: Node) -> PermGroup:
        return self.chain.groups[self.level(a)]

    def epi(self, a: Node, b: Node) -> GroupHom:
        return self.chain.epis[(self.level(a), self.level(b))]

    def fiber(self, a: Node) -> tuple[Perm, ...]:
        return self.group(a).elements()

    def act_on_zero(self, sigma: Perm, a: Node) -> Node:
        c = self.covers[a[0]]
        i = c.zeros.index(a[1])
        return (a[0], c.zeros[self.zero_action[a[0]](sigma).img[i]])

    def stabilizer(self, a: Node) -> PermGroup:
        elems = [s for s in self.gk.elements() if self.act_on_zero(s, a) == a]
        return _subgroup(self.gk, elems)

    def _has_morphism(self, a: Node, b: Node) -> bool:
        return self.level(a) >= self.level(b) and self.stabilizer(a).is_subgroup_of(self.stabilizer(b))

    def closure_violation(self) -> tuple[Node, Node, Node] | None:
        """First triple (a, b, c) where the composite of distinguished maps is not distinguished."""
        for a, b in self.pairs:
            for b2, c in self.pairs:
                if b2 != b or (a, c) not in self.table:
                    continue
                composite = self.table[(b, c)] * self.epi(b, c)(self.table[(a, b)])
                if composite != self.table[(a, c)]:
                    return (a, b, c)
        return None

    def distinguished(self, a: Node, b: Node) -> Morphism:
        return Morphism(a, b, self.table[(a, b)], self.epi(a, b))

    def intermediate_morphisms(self, a: Node, b: Node) -> list[Morphism]:
        if (a, b) not in self.table:
            raise TowerError(f"no morphism {node_name(a)} -> {node_name(b)}")
        return [Morphism(a, b, c, self.epi(a, b)) for c in self.fiber(b)]

    def deck_difference(self, m1: Morphism, m2: Morphism) -> Perm:
        """The unique deck element g of the target with g * m1 = m2."""
        if m1.source != m2.source or m1.target != m2.target:
            raise TowerError("morphisms have different sources or targets")
        g = m2.twist * ~m1.twist
        if any(g * m1(y) != m2(y) for y in self.fiber(m1.source)):
            raise AssertionError("deck difference does not recompose")
        return g

    # compatible tuples

    def _solve(self, forward) -> list[dict[Node, Perm]]:
        order = sorted(self.nodes, key=lambda a: (-self.level(a), self.node_index[a]))
        out: list[dict[Node, Perm]] = []
        assign: dict[Node, Perm] = {}

        def consistent(b: Node) -> bool:
            for x in assign:
                if (x, b) in self.table and assign[b] != forward(x, b, assign[x]):
                    return False
                if (b, x) in self.table and assign[x] != forward(b, x, assign[b]):
                    return False
            return True

        def rec(i: int) -> None:
            if i == len(order):
                out.append(dict(assign))
                if len(out) > _MAX_TUPLES:
                    raise TowerError("too many compatible tuples")
                return
            b = order[i]
            options = None
            for x in assign:
                if (x, b) in self.table:
                    options = [forward(x, b, assign[x])]
                    break
            for v in options if options is not None else self.fiber(b):
                assign[b] = v
                if consistent(b):
                    rec(i + 1)
                del assign[b]

        rec(0)
        return out

    def deck_tuples(self) -> list[dict[Node, Perm]]:
        """Tuples (d_a) with d_b = c d(pi(d_a)) c^-1 for every distinguished (a, b)."""
        def fwd(a, b, d):
            c = self.table[(a, b)]
            return c * self.epi(a, b)(d) * ~c
        return self._solve(fwd)

    def fiber_tuples(self) -> list[dict[Node, Perm]]:
        """Points of the limit over x: tuples (y_a) with y_b = f_ab(y_a)."""
        return self._solve(lambda a, b, y: self.table[(a, b)] * self.epi(a, b)(y))

    def cayley(self, a: Node):
        """(elements, index, multiplication table, inverse table) of the node's deck group."""
        lvl = self.level(a)
        if lvl not in self._cayley:
            elems = self.chain.groups[lvl].elements()
            idx = {g: i for i, g in enumerate(elems)}
            mul = np.array([[idx[g * h] for h in elems] for g in elems], dtype=np.int64)
            inv = np.array([idx[~g] for g in elems], dtype=np.int64)
            self._cayley[lvl] = (elems, idx, mul, inv)
        return self._cayley[lvl]

    def pi_array(self, a: Node, b: Node) -> np.ndarray:
        """Chain epimorphism between the nodes' levels on element indices."""
        key = (self.level(a), self.level(b))
        if key not in self._pi:
            ea, _, _, _ = self.cayley(a)
            _, ib, _, _ = self.cayley(b)
            e = self.epi(a, b)
            self._pi[key] = np.array([ib[e(g)] for g in ea], dtype=np.int64)
        return self._pi[key]

    @cached_property
    def fiber_points(self) -> list[tuple[Node, Perm]]:
        return [(a, y) for a in self.nodes for y in self.fiber(a)]

    @cached_property
    def fiber_index(self) -> dict[tuple[Node, Perm], int]:
        return {p: i for i, p in enumerate(self.fiber_points)}

    def tuple_perm(self, t: Mapping[Node, Perm]) -> Perm:
        """Left multiplication by a deck tuple on the disjoint union of fibers."""
        return Perm(self.fiber_index[(a, t[a] * y)] for a, y in self.fiber_points)


def _subgroup(G: PermGroup, elems: Iterable[Perm]) -> PermGroup:
    gens: list[Perm] = []
    H = PermGroup([], G.degree, G.points)
    for g in sorted(elems):
        if g not in H:
            gens.append(g)
            H = PermGroup(gens, G.degree, G.points)
    return H


def gauge_table(tower: CoverTower, gauge: Mapping[Node, Perm]) -> dict[tuple[Node, Node], Perm]:
    """Twists c_ab = u_b pi(u_a)^-1 for deck elements u; always composition-closed."""
    u = {a: gauge.get(a, tower.group(a).identity()) for a in tower.nodes}
    return {(a, b): u[b] * ~tower.epi(a, b)(u[a]) for a, b in tower.pairs}


@dataclass
class TruncatedLimit:
    tower: CoverTower
    group: PermGroup
    tuples: dict[Perm, dict[Node, Perm]]
    projections: dict[Node, GroupHom]
    periods: dict[Node, PermGroup]
    checks: dict[str, bool] = field(default_factory=dict)

    @property
    def order(self) -> int:
        return self.group.order


def limit_group(tower: CoverTower) -> TruncatedLimit:
    """Compatible deck tuples, their projections, period subgroups and laws."""
    tuples = tower.deck_tuples()
    by_perm = {tower.tuple_perm(t): t for t in tuples}
    n = len(tower.fiber_points)
    gamma = _subgroup(PermGroup([], n), by_perm)
    if gamma.order != len(tuples):
        raise AssertionError("compatible tuples do not form a group")
    projections, periods = {}, {}
    checks = {"normal": True, "finite_index": True, "quotient_is_deck": True}
    for a in tower.nodes:
        G = tower.group(a)
        p = GroupHom(gamma, G, [by_perm[g][a] for g in gamma.gens])
        projections[a] = p
        K = p.kernel()
        periods[a] = K
        checks["normal"] &= is_normal(gamma, K)
        checks["finite_index"] &= gamma.order == K.order * G.order and p.is_surjective()
        # Γ̂ acting on the fiber at a has kernel K, so its image is Γ̂/K
        off = tower.fiber_index[(a, G.identity())]
        size = G.order
        local = PermGroup([Perm(g.img[off + i] - off for i in range(size)) for g in gamma.gens],
                          size)
        checks["quotient_is_deck"] &= (local.order * K.order == gamma.order
                                       and iso_groups(local, G) is not None)
    meet = set(gamma.elements())
    for K in periods.values():
        meet &= set(K.elements())
    checks["periods_meet_trivially"] = meet == {gamma.identity()}
    return TruncatedLimit(tower, gamma, by_perm, projections, periods, checks)


def tower_laws(tower: CoverTower) -> dict[str, bool]:
    """Closure, deck differences, the limit relation and torsor axioms, checked exhaustively."""
    laws: dict[str, bool] = {"closure": tower.closure_violation() is None}
    ok = True
    for a, b in tower.pairs:
        _, idx_b, mul_b, inv_b = tower.cayley(b)
        pi = tower.pi_array(a, b)
        images = mul_b[:, pi]                      # images[c, y] = c * pi(y)
        for c1 in range(len(idx_b)):
            # moved[g, y] = g * c1 * pi(y), compared against every c2 at once
            moved = mul_b[:, images[c1]]
            hits = (moved[:, None, :] == images[None, :, :]).all(axis=2)
            counts = hits.sum(axis=0)
            expected = mul_b[np.arange(len(idx_b)), inv_b[c1]]
            ok &= bool((counts == 1).all() and (hits.argmax(axis=0) == expected).all())
        m = tower.distinguished(a, b)
        ok &= all(tower.deck_difference(m, m2) * m.twist == m2.twist
                  for m2 in tower.intermediate_morphisms(a, b)[:4])
    laws["deck_difference_unique"] = ok
    lim = limit_group(tower)
    laws.update({f"limit_{k}": v for k, v in lim.checks.items()})
    U = tower.fiber_tuples()
    cols = {a: np.array([tower.cayley(a)[1][u[a]] for u in U], dtype=np.int64) for a in tower.nodes}
    relation = True
    for a, b in tower.pairs:
        _, idx_b, mul_b, _ = tower.cayley(b)
        c = idx_b[tower.table[(a, b)]]
        relation &= bool((mul_b[c, tower.pi_array(a, b)[cols[a]]] == cols[b]).all())
    laws["limit_relation"] = relation
    if U:
        u0 = U[0]
        moved = {tuple(t[a] * u0[a] for a in tower.nodes) for t in lim.tuples.values()}
        laws["torsor"] = len(U) == lim.order and moved == {tuple(u[a] for a in tower.nodes) for u in U}
    else:
        laws["torsor"] = False
    # the deck group acts freely and transitively on each deck sort, and
    # evaluating one deck-sort element on the limit fiber is onto the level fiber
    a2 = True
    for a in tower.nodes:
        _, idx, mul, _ = tower.cayley(a)
        n = len(idx)
        for p1 in range(n):
            a2 &= sorted(mul[:, p1].tolist()) == list(range(n))
        a2 &= set(cols[a].tolist()) == set(range(n))
    laws["deck_sort_torsor"] = a2
    # each node has a deck-sort element q with f_ab(q u_a) = u_b for all
    # distinguished maps out of it and all points u of the limit fiber
    a3 = True
    for a in tower.nodes:
        _, idx_a, mul_a, _ = tower.cayley(a)
        good = np.ones(len(idx_a), dtype=bool)
        for x, b in tower.pairs:
            if x != a:
                continue
            _, idx_b, mul_b, _ = tower.cayley(b)
            c = idx_b[tower.table[(a, b)]]
            shifted = mul_a[:, cols[a]]          # shifted[q, u] = q * u_a
            good &= (mul_b[c, tower.pi_array(a, b)[shifted]] == cols[b][None, :]).all(axis=1)
        a3 &= bool(good.any())
    laws["projection_witness"] = a3
    return laws


@dataclass
class FiberStructure:
    tower: CoverTower
    full: SortedUniverse
    forget: SortedUniverse
    ix: dict[Pt, Pt]
    base_tuple: dict[Node, Perm]
    checks: dict[str, bool]


def _fib_sort(a: Node) -> str:
    return f"fib_{_ident(a[0])}_{_ident(a[1])}"


def _deck_sort(a: Node) -> str:
    return f"deck_{_ident(a[0])}_{_ident(a[1])}"


def _elem_names(G: PermGroup, stem: str) -> dict[Perm, str]:
    elems = G.elements()
    w = len(str(len(elems) - 1))
    return {g: f"{stem}{i:0{w}d}" for i, g in enumerate(elems)}


def fiber_structure(tower: CoverTower) -> FiberStructure:
    """Fibers over x with deck actions and distinguished graphs, plus deck sorts.

    The reduct to the fiber sorts is F_x^forget; ``ix`` sends the deck-sort
    element g*p_a to g applied to the base tuple's coordinate at a.
    """
    U = tower.fiber_tuples()
    if not U:
        raise TowerError("the limit has no points over x")
    u0 = U[0]
    sorts, rels_forget, rels_deck, ix_rels = {}, {}, {}, {}
    names = {a: _elem_names(tower.group(a), "y") for a in tower.nodes}
    pnames = {a: _elem_names(tower.group(a), "p") for a in tower.nodes}
    ix: dict[Pt, Pt] = {}
    for a in tower.nodes:
        fs, ds = _fib_sort(a), _deck_sort(a)
        G = tower.group(a)
        sorts[fs] = list(names[a].values())
        sorts[ds] = list(pnames[a].values())
        for k, g in enumerate(G.gens):
            rels_forget[f"act_{fs}_{k}"] = ([fs, fs], [(names[a][y], names[a][g * y]) for y in G.elements()])
            rels_deck[f"act_{ds}_{k}"] = ([ds, ds], [(pnames[a][h], pnames[a][g * h]) for h in G.elements()])
        ix_rels[f"ix_{ds}"] = ([ds, fs], [(pnames[a][h], names[a][h * u0[a]]) for h in G.elements()])
        for h in G.elements():
            ix[Pt(ds, pnames[a][h])] = Pt(fs, names[a][h * u0[a]])
    for a, b in tower.pairs:
        if a == b:
            continue
        m = tower.distinguished(a, b)
        c = m.twist
        fa, fb = _fib_sort(a), _fib_sort(b)
        rels_forget[f"dist_{fa}_{fb}"] = ([fa, fb], [(names[a][y], names[b][m(y)]) for y in tower.fiber(a)])
        da, db = _deck_sort(a), _deck_sort(b)
        rels_deck[f"dist_{da}_{db}"] = ([da, db], [(pnames[a][h], pnames[b][c * m.epi(h) * ~c])
                                                   for h in tower.fiber(a)])
    forget_sorts = {k: v for k, v in sorts.items() if k.startswith("fib_")}
    forget = SortedUniverse.build(forget_sorts, rels_forget)
    full = SortedUniverse.build(sorts, {**rels_forget, **rels_deck, **ix_rels})
    # i_x must carry every deck-sort relation onto the matching fiber relation
    carried = True
    for name, (sig, tuples) in rels_deck.items():
        target = "act_fib" + name[len("act_deck"):] if name.startswith("act_") else \
            name.replace("deck_", "fib_")
        moved = {tuple(ix[Pt(s, e)].elem for s, e in zip(sig, t)) for t in tuples}
        carried &= moved == set(forget.relations[target].tuples)
    checks = {
        "ix_bijective": len(set(ix.values())) == len(ix) == forget.size,
        "ix_sorts": all(ix[p].sort == "fib_" + p.sort[len("deck_"):] for p in ix),
        "ix_carries_relations": carried,
        "fiber_sizes": all(len(forget.sorts[_fib_sort(a)]) == tower.group(a).order for a in tower.nodes),
    }
    return FiberStructure(tower, full, forget, ix, u0, checks)


def pi1_et(fs: FiberStructure) -> PermGroup:
    """Automorphism group of the forgetful fiber structure."""
    return aut(fs.forget, max_size=fs.forget.size).group


@dataclass
class SharpResult:
    group: PermGroup
    index: int
    obstruction: tuple[Node, Node, Perm] | None

    @property
    def is_k(self) -> bool:
        return self.index == 1

    def label(self) -> str:
        return "k" if self.is_k else f"k# of degree {self.index} over k"


def sharp_subgroup(tower: CoverTower) -> SharpResult:
    """G# = elements of Gk carrying each distinguished map to the one between the moved nodes."""
    keep = []
    obstruction = None
    for s in tower.gk.elements():
        bad = None
        for a, b in tower.pairs:
            if tower.table[(tower.act_on_zero(s, a), tower.act_on_zero(s, b))] != tower.table[(a, b)]:
                bad = (a, b, s)
                break
        if bad is None:
            keep.append(s)
        elif obstruction is None:
            obstruction = bad
    G = _subgroup(tower.gk, keep)
    return SharpResult(G, tower.gk.order // G.order, obstruction)


@dataclass
class SectionDemo:
    sharp: SharpResult
    structure: SortedUniverse
    automorphisms: PermGroup
    restriction: GroupHom
    section: GroupHom | None
    checks: dict[str, bool]
    message: str


def _full_tower_structure(tower: CoverTower):
    gk = tower.gk
    gal = group_to_structure(gk, max_arity=gk.order)
    glabels = list(gal.sorts["G"])
    gelems = gk.elements()
    sorts = {"Gal": glabels}
    rels = {"gal_orbit": (["Gal"] * len(glabels), list(gal.relations["orbit"].tuples))}
    fname = {}
    for lab, c in tower.covers.items():
        zs, fs = f"zero_{_ident(lab)}", f"fib_{_ident(lab)}"
        sorts[zs] = list(c.zeros)
        names = _elem_names(tower.chain.groups[c.geometric], "y")
        sorts[fs] = [f"{_ident(z)}.{names[y]}" for z in c.zeros for y in names]
        for z in c.zeros:
            for y in names:
                fname[((lab, z), y)] = f"{_ident(z)}.{names[y]}"
        rels[f"over_{_ident(lab)}"] = (["Gal", zs], [(glabels[i], tower.act_on_zero(s, (lab, c.zeros[0]))[1])
                                                     for i, s in enumerate(gelems)])
        rels[f"in_{_ident(lab)}"] = ([fs, zs], [(fname[((lab, z), y)], z) for z in c.zeros for y in names])
        G = tower.chain.groups[c.geometric]
        for k, g in enumerate(G.gens):
            rels[f"act_{_ident(lab)}_{k}"] = ([fs, fs], [(fname[((lab, z), y)], fname[((lab, z), g * y)])
                                                        for z in c.zeros for y in names])
    dist: dict[str, tuple] = {}
    for a, b in tower.pairs:
        if a == b:
            continue
        key = f"dist_{_ident(a[0])}_{_ident(b[0])}"
        sig = [f"fib_{_ident(a[0])}", f"fib_{_ident(b[0])}"]
        m = tower.distinguished(a, b)
        dist.setdefault(key, (sig, []))[1].extend((fname[(a, y)], fname[(b, m(y))]) for y in tower.fiber(a))
    rels.update(dist)
    M = SortedUniverse.build(sorts, rels)
    return M, glabels, gelems, fname


def section_demo(tower: CoverTower) -> SectionDemo:
    """Lift Gk to the full tower structure when G# = Gk and verify the lift is a section."""
    sharp = sharp_subgroup(tower)
    M, glabels, gelems, fname = _full_tower_structure(tower)
    A = aut(M, max_size=M.size).group
    gk = tower.gk
    gidx = {s: i for i, s in enumerate(gelems)}
    e_pt = M.index[Pt("Gal", glabels[gidx[gk.identity()]])]
    first_gal = M.index[Pt("Gal", glabels[0])]

    def to_gk(psi: Perm) -> Perm:
        return gelems[psi.img[e_pt] - first_gal]

    rho = GroupHom(A, gk, [to_gk(g) for g in A.gens])
    checks = {"restriction_surjective": rho.is_surjective()}
    if not sharp.is_k:
        a, b, s = sharp.obstruction
        msg = (f"k# != k: the element {s} of Gk moves the distinguished map "
               f"{node_name(a)} -> {node_name(b)}; no section is built")
        return SectionDemo(sharp, M, A, rho, None, checks, msg)
    lifts = []
    for s in gk.gens:
        img = []
        for p in M.points:
            if p.sort == "Gal":
                q = Pt("Gal", glabels[gidx[s * gelems[glabels.index(p.elem)]]])
            elif p.sort.startswith("zero_"):
                lab = next(l for l in tower.covers if f"zero_{_ident(l)}" == p.sort)
                q = Pt(p.sort, tower.act_on_zero(s, (lab, p.elem))[1])
            else:
                lab = next(l for l in tower.covers if f"fib_{_ident(l)}" == p.sort)
                z_id, y = p.elem.split(".", 1)
                z = next(z for z in tower.covers[lab].zeros if _ident(z) == z_id)
                z2 = tower.act_on_zero(s, (lab, z))[1]
                q = Pt(p.sort, f"{_ident(z2)}.{y}")
            img.append(M.index[q])
        lifts.append(Perm(img))
    checks["lifts_are_automorphisms"] = all(M.is_automorphism(g) and g in A for g in lifts)
    sec = GroupHom(gk, A, lifts)
    checks["is_section"] = all(rho(sec(s)) == s for s in gk.elements())
    checks["injective"] = sec.is_injective()
    if not all(checks.values()):
        raise AssertionError(f"section demo failed: {checks}")
    x_msg = "the base is a single point, so it is k-rational"
    msg = f"k# = k; section of Aut(full tower) -> Gk verified; {x_msg}"
    return SectionDemo(sharp, M, A, rho, sec, checks, msg)


@dataclass
class Factorization:
    syntactic: Cover
    geometric: Cover
    degrees: tuple[int, int]
    checks: dict[str, bool]


def factor_cover(tower: CoverTower, label: str) -> Factorization:
    """Split a cover into its constant-field layer and its geometric layer."""
    c = tower.covers[label]
    syn = Cover(f"{label}_syn", c.zeros, 0, c.gk_action, c.constant_field)
    geo = Cover(label, c.zeros, c.geometric, c.gk_action, c.constant_field)
    G = tower.chain.groups[c.geometric]
    nz = len(c.zeros)
    # Deck and Gk acting together on the fibers of this label
    points = [(z, y) for z in range(nz) for y in G.elements()]
    idx = {p: i for i, p in enumerate(points)}
    hom = tower.zero_action[label]
    deck = [Perm(idx[(z, g * y)] for z, y in points) for g in G.gens]
    galois = [Perm(idx[(hom(s).img[z], y)] for z, y in points) for s in tower.gk.gens]
    total = PermGroup(deck + galois, len(points))
    to_zeros = GroupHom(total, PermGroup([hom(s) for s in tower.gk.gens], nz),
                        [Perm([g.img[idx[(z, G.identity())]] // G.order for z in range(nz)])
                         for g in total.gens])
    K = to_zeros.kernel()
    checks = {
        "syntactic_deck_trivial": tower.chain.groups[0].order == 1,
        "same_constant_field": syn.zeros == geo.zeros and syn.gk_action == geo.gk_action,
        "geometric_kernel_is_deck": K.order == G.order and iso_groups(K, G) is not None,
        "recomposes": Cover(label, syn.zeros, geo.geometric, syn.gk_action, syn.constant_field) == c,
        "degrees_multiply": nz * G.order == len(points),
    }
    return Factorization(syn, geo, (nz, G.order), checks)


def amalgamate_syntactic(gk: PermGroup, a: Cover, b: Cover, label: str | None = None) -> Cover:
    """A constant-field cover through which both a and b factor."""
    if a.geometric != 0 or b.geometric != 0:
        raise TowerError("amalgamation needs pure syntactic covers")
    ha = GroupHom(gk, PermGroup(list(a.gk_action), len(a.zeros)), list(a.gk_action))
    hb = GroupHom(gk, PermGroup(list(b.gk_action), len(b.zeros)), list(b.gk_action))
    start = (0, 0)
    orbit = [start]
    seen = {start}
    for t in orbit:
        for s in gk.gens:
            u = (ha(s).img[t[0]], hb(s).img[t[1]])
            if u not in seen:
                seen.add(u)
                orbit.append(u)
    orbit.sort()
    if a.zeros == b.zeros and a.gk_action == b.gk_action:
        orbit = [(i, i) for i in range(len(a.zeros))]
    pos = {t: i for i, t in enumerate(orbit)}
    def name(i: int, j: int) -> str:
        if a.zeros == b.zeros or len(b.zeros) == 1:
            return a.zeros[i]
        if len(a.zeros) == 1:
            return b.zeros[j]
        return f"{a.zeros[i]}*{b.zeros[j]}"

    names = tuple(name(i, j) for i, j in orbit)
    action = tuple(Perm(pos[(ha(s).img[i], hb(s).img[j])] for i, j in orbit) for s in gk.gens)
    stab = _subgroup(gk, [s for s in gk.elements() if ha(s).img[orbit[0][0]] == orbit[0][0]
                          and hb(s).img[orbit[0][1]] == orbit[0][1]])
    return Cover(label or f"{a.label}*{b.label}", names, 0, action, stab)
