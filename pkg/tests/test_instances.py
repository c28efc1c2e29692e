import itertools
import random

import numpy as np
import pytest

from oracles import brute_automorphisms
from finitary.autcalc import aut, iso_structures
from finitary.config import SizeLimitError
from finitary.instances import (FiniteField, cyclic_tower, deck_field_correspondence,
                                frobenius_group, galois_corpus, galois_orbit_structure,
                                group_catalog, irreducible_moduli, primitive_image_count,
                                random_structure)
from finitary.perm import iso_groups
from finitary.structure import dcl
from finitary.tower import TowerError


def _mobius(n: int) -> int:
    out, k = 1, 2
    while k * k <= n:
        if n % k == 0:
            n //= k
            if n % k == 0:
                return 0
            out = -out
        k += 1
    return -out if n > 1 else out


@pytest.mark.parametrize("p, m", [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (5, 2)])
def test_irreducible_count_matches_gauss(p, m):
    expected = sum(_mobius(d) * p ** (m // d) for d in range(1, m + 1) if m % d == 0) // m
    assert len(list(irreducible_moduli(p, m))) == expected


@pytest.mark.parametrize("p, m", [(2, 2), (2, 3), (3, 2), (5, 1)])
def test_field_axioms(p, m):
    F = FiniteField(p, m)
    A, M, q = F.add, F.mul, F.q
    r = range(q)
    assert all(A[a, 0] == a and M[a, 1] == a for a in r)
    assert all(A[a, A[b, c]] == A[A[a, b], c] and M[a, M[b, c]] == M[M[a, b], c]
               and M[a, A[b, c]] == A[M[a, b], M[a, c]] for a in r for b in r for c in r)
    assert all(any(M[a, b] == 1 for b in r) for a in range(1, q))
    assert (A == A.T).all() and (M == M.T).all()


@pytest.mark.parametrize("p, m", [(2, 2), (2, 3), (5, 1)])
def test_field_automorphisms_against_brute_force(p, m):
    F = FiniteField(p, m)
    M = F.structure()
    brute = brute_automorphisms(M)
    A = aut(M).group
    assert set(A.elements()) == set(brute)
    assert A.order == m == primitive_image_count(F)
    assert A.same_group(frobenius_group(F))


def test_frobenius_is_a_ring_map():
    F = FiniteField(3, 2)
    phi = np.array(F.frobenius().img)
    assert (phi[F.add] == F.add[phi[:, None], phi[None, :]]).all()
    assert (phi[F.mul] == F.mul[phi[:, None], phi[None, :]]).all()
    assert F.frobenius(2).is_identity()


def test_dcl_is_prime_field():
    F = FiniteField(2, 3)
    assert {x.elem for x in dcl(F.structure())} == {F.name(0), F.name(1)}


def test_structures_from_different_moduli_are_isomorphic():
    f1, f2 = list(irreducible_moduli(2, 3))
    assert iso_structures(galois_orbit_structure(2, 3, f1), galois_orbit_structure(2, 3, f2)) is not None
    assert iso_structures(galois_orbit_structure(2, 2), galois_orbit_structure(3, 1)) is None


@pytest.mark.parametrize("p, m, modulus", [(4, 2, None), (2, 0, None), (2, 2, (1, 0, 1)), (2, 2, (1, 1))])
def test_field_rejects_bad_input(p, m, modulus):
    with pytest.raises(ValueError):
        FiniteField(p, m, modulus)


def test_field_size_cap():
    with pytest.raises(SizeLimitError):
        FiniteField(2, 10)


def test_deck_field_correspondence():
    T = cyclic_tower(2, 2)
    c = deck_field_correspondence(FiniteField(2, 4), T, ("L2", "r"))
    assert c.equivariant and len(set(c.bijection.values())) == 4
    with pytest.raises(TowerError):
        deck_field_correspondence(FiniteField(2, 3), T, ("L2", "r"))


EXPECTED_ORDERS = {"S3": 6, "S4": 24, "A4": 12, "Q8": 8, "C2xC2": 4, "D8": 8, "D16": 16, "C16": 16}


def test_catalog_shapes():
    cat = group_catalog()
    for name, order in EXPECTED_ORDERS.items():
        assert cat[name].order == order == cat[name].degree
    for G in cat.values():
        assert len(G.orbit(0)) == G.degree  # regular


@pytest.mark.parametrize("a, b", [("C4", "C2xC2"), ("D8", "Q8"), ("C6", "S3"), ("D12", "A4"),
                                  ("C8", "D8")])
def test_catalog_noniso_pairs(a, b):
    cat = group_catalog()
    assert iso_groups(cat[a], cat[b]) is None
    assert iso_groups(cat[a], cat[a]) is not None


def test_random_structure_is_seeded():
    a = [random_structure(random.Random(7)) for _ in range(3)]
    b = [random_structure(random.Random(7)) for _ in range(3)]
    assert a == b


def test_galois_corpus_orders():
    for name, M in galois_corpus().items():
        assert aut(M).group.order == len(brute_automorphisms(M)) <= 24, name
