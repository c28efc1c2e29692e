"""Concrete inputs: finite fields, cyclic and mixed towers, a group catalog,
and small structure corpora used by the acceptance suite."""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .autcalc import aut
from .config import SizeLimitError, check_size
from .perm import GroupHom, Perm, PermGroup, group_from_generators, iso_groups, regular_representation
from .structure import Pt, QuotientSort, SortedUniverse, add_quotient, dcl, identity_quotient
from .tower import Cover, CoverTower, GroupChain, TowerError, cyclic_chain, gauge_table

__all__ = [
    "FiniteField", "irreducible_moduli", "galois_orbit_structure", "frobenius_group",
    "primitive_image_count", "cyclic_tower", "mixed_tower", "deck_field_correspondence",
    "group_catalog", "random_structure", "galois_corpus", "exact_pairs", "nonsplit_pair",
]

FIELD_CAP = 729


def _is_prime(p: int) -> bool:
    return p >= 2 and all(p % d for d in range(2, int(p ** 0.5) + 1))


def _polymod(a: list[int], f: list[int], p: int) -> list[int]:
    """Remainder of ``a`` by monic ``f`` (coefficient lists, lowest degree first)."""
    a = a[:]
    df = len(f) - 1
    while len(a) - 1 >= df and any(a):
        if a[-1] == 0:
            a.pop()
            continue
        c, shift = a[-1], len(a) - 1 - df
        for i, fi in enumerate(f):
            a[shift + i] = (a[shift + i] - c * fi) % p
        a.pop()
    return a


def _irreducible(f: list[int], p: int) -> bool:
    m = len(f) - 1
    for d in range(1, m // 2 + 1):
        for tail in itertools.product(range(p), repeat=d):
            g = list(tail) + [1]
            if not any(_polymod(f, g, p)):
                return False
    return True


def irreducible_moduli(p: int, m: int):
    """Monic irreducible polynomials of degree m in lexicographic coefficient order.

    Coefficients are listed lowest degree first; the leading 1 is included.
    """
    for tail in itertools.product(range(p), repeat=m):
        f = list(tail) + [1]
        if m == 1 or (f[0] != 0 and _irreducible(f, p)):
            yield tuple(f)


class FiniteField:
    """GF(p^m) as integer codes: code = sum c_i p^i for the coefficient of x^i."""

    def __init__(self, p: int, m: int, modulus: tuple[int, ...] | None = None):
        if not _is_prime(p):
            raise ValueError(f"{p} is not prime")
        if m < 1:
            raise ValueError("degree must be positive")
        check_size("field size", p ** m, FIELD_CAP)
        if modulus is None:
            modulus = next(irreducible_moduli(p, m))
        modulus = tuple(modulus)
        if len(modulus) != m + 1 or modulus[-1] != 1:
            raise ValueError("modulus must be monic of degree m")
        if m > 1 and (modulus[0] == 0 or not _irreducible(list(modulus), p)):
            raise ValueError(f"modulus {modulus} is reducible")
        self.p, self.m, self.modulus = p, m, modulus
        self.q = p ** m

    def digits(self, a: int) -> list[int]:
        return [(a // self.p ** i) % self.p for i in range(self.m)]

    def code(self, coeffs) -> int:
        return sum(int(c) * self.p ** i for i, c in enumerate(coeffs))

    def name(self, a: int) -> str:
        return "".join(str(d) for d in reversed(self.digits(a)))

    @cached_property
    def add(self) -> np.ndarray:
        d = np.array([self.digits(a) for a in range(self.q)], dtype=np.int64)
        s = (d[:, None, :] + d[None, :, :]) % self.p
        w = self.p ** np.arange(self.m)
        return (s * w).sum(axis=2)

    @cached_property
    def mul(self) -> np.ndarray:
        out = np.zeros((self.q, self.q), dtype=np.int64)
        f = list(self.modulus)
        digs = [self.digits(a) for a in range(self.q)]
        for a in range(self.q):
            for b in range(a, self.q):
                prod = [0] * (2 * self.m - 1)
                for i, x in enumerate(digs[a]):
                    if x:
                        for j, y in enumerate(digs[b]):
                            prod[i + j] = (prod[i + j] + x * y) % self.p
                r = _polymod(prod, f, self.p) if self.m > 1 else [prod[0] % self.p]
                out[a, b] = out[b, a] = self.code(r + [0] * (self.m - len(r)))
        return out

    def power(self, a: int, k: int) -> int:
        r, base = 1, a
        while k:
            if k & 1:
                r = int(self.mul[r, base])
            base = int(self.mul[base, base])
            k >>= 1
        return r

    def frobenius(self, k: int = 1) -> Perm:
        return Perm(self.power(a, self.p ** k) for a in range(self.q))

    def primitive_element(self) -> int:
        for g in range(1, self.q):
            x, order = g, 1
            while x != 1:
                x = int(self.mul[x, g])
                order += 1
            if order == self.q - 1:
                return g
        raise AssertionError("no primitive element")

    def orbits(self) -> list[list[int]]:
        F = self.frobenius()
        seen, out = set(), []
        for a in range(self.q):
            if a in seen:
                continue
            orb = [a]
            x = F(a)
            while x != a:
                orb.append(x)
                x = F(x)
            seen.update(orb)
            out.append(sorted(orb))
        return out

    def structure(self, with_orbits: bool = True) -> SortedUniverse:
        """Ring relations on GF(p^m), prime-field constants, and the Frobenius-orbit relation."""
        names = [self.name(a) for a in range(self.q)]
        A, M = self.add, self.mul
        rels = {
            "add": (["F"] * 3, [(names[a], names[b], names[int(A[a, b])])
                                for a in range(self.q) for b in range(self.q)]),
            "mul": (["F"] * 3, [(names[a], names[b], names[int(M[a, b])])
                                for a in range(self.q) for b in range(self.q)]),
        }
        if with_orbits:
            # same Frobenius orbit; named independently of the modulus
            rels["conj"] = (["F"] * 2, [(names[a], names[b]) for orb in self.orbits()
                                        for a in orb for b in orb])
        consts = {f"c{i}": ("F", names[i]) for i in range(self.p)}
        return SortedUniverse.build({"F": names}, rels, consts)


def galois_orbit_structure(p: int, m: int, modulus: tuple[int, ...] | None = None) -> SortedUniverse:
    return FiniteField(p, m, modulus).structure()


def frobenius_group(F: FiniteField) -> PermGroup:
    return PermGroup([F.frobenius()], F.q)


def primitive_image_count(F: FiniteField) -> int:
    """Number of field automorphisms, by trying every image of a primitive element.

    An automorphism fixing the prime field is determined by where it sends a
    multiplicative generator g; the candidate h works iff g^i -> h^i
    respects addition.
    """
    if F.q == 2:
        return 1
    g = F.primitive_element()
    logs = {}
    x = 1
    for i in range(F.q - 1):
        logs[i] = x
        x = int(F.mul[x, g])
    count = 0
    for h in range(1, F.q):
        img = [0] * F.q
        y = 1
        ok = True
        seen = set()
        for i in range(F.q - 1):
            img[logs[i]] = y
            seen.add(y)
            y = int(F.mul[y, h])
        if len(seen) != F.q - 1:
            continue
        img = np.array(img)
        if np.array_equal(img[F.add], F.add[img[:, None], img[None, :]]):
            count += 1
    return count


def cyclic_tower(p: int, depth: int) -> CoverTower:
    """1 <- Z/p <- ... <- Z/p^depth, one zero per level, trivial Gk."""
    if depth > 8:
        raise SizeLimitError(f"depth {depth} exceeds cap 8")
    check_size("top fiber", p ** depth, 256)
    chain = cyclic_chain(p, depth)
    covers = [Cover(f"L{i}", ("r",), i) for i in range(depth + 1)]
    return CoverTower(chain, covers, PermGroup([], 1))


def mixed_tower(twisted: bool = False) -> CoverTower:
    """Gk = Z/2 over the chain 1 <- Z/3.

    Labels: the base, a quadratic constant-field cover ``k2`` whose two zeros
    Gk swaps, a geometric Z/3 cover ``c3`` over k, and ``m`` combining both.
    With ``twisted`` the table is gauge-changed at ``m:+`` so Gk no longer
    preserves it.
    """
    gk = PermGroup([Perm([1, 0])], 2)
    one = PermGroup([], 1)
    z3 = PermGroup([Perm([1, 2, 0])], 3)
    chain = GroupChain.from_steps([one, z3], [GroupHom(z3, one, [Perm([0])])])
    swap, fix = (Perm([1, 0]),), (Perm([0]),)
    covers = [Cover("1", ("r",), 0, fix), Cover("k2", ("+", "-"), 0, swap),
              Cover("c3", ("r",), 1, fix), Cover("m", ("+", "-"), 1, swap)]
    tower = CoverTower(chain, covers, gk)
    if twisted:
        tower = CoverTower(chain, covers, gk, gauge_table(tower, {("m", "+"): Perm([1, 2, 0])}))
    return tower


@dataclass
class TorsorCorrespondence:
    bijection: dict[Perm, int]
    deck_to_galois: GroupHom
    generator: int
    equivariant: bool


def deck_field_correspondence(F: FiniteField, tower: CoverTower, node) -> TorsorCorrespondence:
    """Match the deck torsor at ``node`` with the Frobenius orbit of a degree-m generator."""
    G = tower.group(node)
    gal = frobenius_group(F)
    phi = iso_groups(G, gal)
    if phi is None:
        raise TowerError(f"deck group of order {G.order} is not Gal(GF({F.q})/GF({F.p}))")
    b = F.primitive_element()
    fib = tower.fiber(node)
    bij = {h: phi(h)(b) for h in fib}
    equivariant = len(set(bij.values())) == len(fib)
    orbit = {F.frobenius(k)(b) for k in range(F.m)}
    equivariant &= set(bij.values()) == orbit
    for g in fib:
        for h in fib:
            equivariant &= bij[g * h] == phi(g)(bij[h])
    if not equivariant:
        raise AssertionError("deck torsor and conjugates do not correspond")
    return TorsorCorrespondence(bij, phi, b, equivariant)


def _dihedral(n: int) -> PermGroup:
    r = Perm([(i + 1) % n for i in range(n)])
    s = Perm([(-i) % n for i in range(n)])
    return PermGroup([r, s], n)


def _quaternion() -> PermGroup:
    # units 1,i,j,k with sign: index = 4*sign + unit
    table = {(0, 0): (0, 0), (0, 1): (0, 1), (0, 2): (0, 2), (0, 3): (0, 3),
             (1, 0): (0, 1), (1, 1): (1, 0), (1, 2): (0, 3), (1, 3): (1, 2),
             (2, 0): (0, 2), (2, 1): (1, 3), (2, 2): (1, 0), (2, 3): (0, 1),
             (3, 0): (0, 3), (3, 1): (0, 2), (3, 2): (1, 1), (3, 3): (1, 0)}

    def left(u: int) -> Perm:
        img = []
        for x in range(8):
            sx, ux = divmod(x, 4)
            s, v = table[(u, ux)]
            img.append(4 * ((s + sx) % 2) + v)
        return Perm(img)

    return PermGroup([left(1), left(2)], 8)


def group_catalog() -> dict[str, PermGroup]:
    """Named small groups, each as a regular permutation group."""
    raw: dict[str, PermGroup] = {}
    for n in range(1, 17):
        raw[f"C{n}"] = PermGroup([Perm([(i + 1) % n for i in range(n)])] if n > 1 else [], n)
    for n in range(3, 9):
        raw[f"D{2 * n}"] = _dihedral(n)
    raw["S3"] = PermGroup([Perm([1, 0, 2]), Perm([1, 2, 0])], 3)
    raw["S4"] = PermGroup([Perm([1, 0, 2, 3]), Perm([1, 2, 3, 0])], 4)
    raw["A4"] = PermGroup([Perm([1, 2, 0, 3]), Perm([0, 2, 3, 1])], 4)
    raw["Q8"] = _quaternion()
    raw["C2xC2"] = PermGroup([Perm([1, 0, 3, 2]), Perm([2, 3, 0, 1])], 4)
    return {k: regular_representation(G) for k, G in raw.items()}


def random_structure(rng: random.Random, max_size: int = 6, max_relations: int = 3,
                     max_arity: int = 3) -> SortedUniverse:
    n = rng.randint(1, max_size)
    names = [f"e{i}" for i in range(n)]
    rels = {}
    for r in range(rng.randint(0, max_relations)):
        k = rng.randint(1, max_arity)
        space = list(itertools.product(names, repeat=k))
        count = rng.randint(0, min(len(space), 2 * n))
        rels[f"R{r}"] = (["X"] * k, rng.sample(space, count))
    return SortedUniverse.build({"X": names}, rels)


def _graph(names, edges, directed=False) -> SortedUniverse:
    tuples = [tuple(e) for e in edges]
    if not directed:
        tuples += [(b, a) for a, b in edges]
    return SortedUniverse.build({"X": list(names)}, {"E": (["X", "X"], tuples)})


def galois_corpus() -> dict[str, SortedUniverse]:
    """Ten small structures with automorphism groups of order at most 24."""
    from .autcalc import group_to_structure
    cat = group_catalog()
    return {
        "free3": SortedUniverse.build({"X": ["a", "b", "c"]}, {}),
        "cycle3": _graph("abc", ["ab", "bc", "ca"], directed=True),
        "square": _graph("abcd", ["ab", "bc", "cd", "da"]),
        "dsquare": _graph("abcd", ["ab", "bc", "cd", "da"], directed=True),
        "free4": SortedUniverse.build({"X": ["a", "b", "c", "d"]}, {}),
        "path3": _graph("abc", ["ab", "bc"]),
        "rigid": SortedUniverse.build({"X": ["a", "b", "c"]}, {"L": (["X", "X"], [("a", "b"), ("a", "c"), ("b", "c")])}),
        "two_pairs": SortedUniverse.build({"X": ["a", "b"], "Y": ["u", "v"]}, {}),
        "regular_S3": group_to_structure(cat["S3"]),
        "cycle5": _graph("abcde", ["ab", "bc", "cd", "de", "ea"], directed=True),
    }


def _P(e: str) -> Pt:
    return Pt("X", e)


def exact_pairs():
    """Five (fragment, sort name) pairs with a 0-definable quotient, plus which split."""
    from .galois import coset_imaginary
    out = []
    sq = _graph("abcd", ["ab", "bc", "cd", "da"])
    q = QuotientSort.from_blocks("Opp", [[_P("a"), _P("c")], [_P("b"), _P("d")]])
    out.append(("square/opposite", add_quotient(sq, "Opp", sq.points, q), "Opp"))
    free3 = SortedUniverse.build({"X": ["a", "b", "c"]}, {})
    A3 = PermGroup([Perm([1, 2, 0])], 3)
    out.append(("free3/sign", coset_imaginary(free3, A3, "Sign").fragment, "Sign"))
    free4 = SortedUniverse.build({"X": ["a", "b", "c", "d"]}, {})
    V4 = PermGroup([Perm([1, 0, 3, 2]), Perm([2, 3, 0, 1])], 4)
    out.append(("free4/klein", coset_imaginary(free4, V4, "Klein").fragment, "Klein"))
    c3 = _graph("abc", ["ab", "bc", "ca"], directed=True)
    ident = identity_quotient(c3, "Id")
    out.append(("cycle3/identity", add_quotient(c3, "Id", ident.domain, ident), "Id"))
    one = QuotientSort.from_blocks("Pt", [list(sq.points)])
    out.append(("square/point", add_quotient(sq, "Pt", sq.points, one), "Pt"))
    return out


def nonsplit_pair():
    """Directed 4-cycle onto its opposite-pair quotient: Z/4 onto Z/2."""
    dsq = _graph("abcd", ["ab", "bc", "cd", "da"], directed=True)
    q = QuotientSort.from_blocks("Opp", [[_P("a"), _P("c")], [_P("b"), _P("d")]])
    return add_quotient(dsq, "Opp", dsq.points, q), "Opp"
