"""Reproducible acceptance suite: eight criteria with time limits.

Each criterion returns a ``CriterionResult``; a criterion passes only when
every case passes and the run finishes inside its limit.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Callable

from .autcalc import aut, group_to_structure, iso_structures, reconstruction_check
from .config import size_cap
from .galois import (coset_imaginary, exact_sequence, normal_iff_zero_definable,
                     section_to_interpretation)
from .instances import (FiniteField, cyclic_tower, deck_field_correspondence, exact_pairs,
                        frobenius_group, galois_corpus, galois_orbit_structure, group_catalog,
                        irreducible_moduli, mixed_tower, nonsplit_pair, primitive_image_count,
                        random_structure)
from .perm import all_subgroups, find_sections, iso_groups
from .structure import dcl
from .tower import TowerError, fiber_structure, limit_group, pi1_et, section_demo, tower_laws

__all__ = ["CriterionResult", "CRITERIA", "SUITES", "run_suite", "list_criteria"]


@dataclass
class CriterionResult:
    number: int
    suite: str
    title: str
    passed: bool
    seconds: float
    limit: float
    cases: int
    failures: list[str] = field(default_factory=list)
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] {self.number}. {self.suite}: {self.title} "
                f"({self.cases} cases, {self.seconds:.1f}s / {self.limit:.0f}s)")

    def to_json(self, timing: bool = False) -> dict:
        d = {"criterion": self.number, "suite": self.suite, "title": self.title,
             "passed": self.passed, "cases": self.cases, "failures": self.failures,
             "limitSeconds": self.limit, "withinLimit": self.seconds < self.limit,
             "details": self.details}
        if timing:
            d["seconds"] = round(self.seconds, 3)
        return d


class _Run:
    def __init__(self):
        self.cases = 0
        self.failures: list[str] = []
        self.details: dict = {}

    def check(self, ok: bool, label: str) -> bool:
        self.cases += 1
        if not ok:
            self.failures.append(label)
        return ok


def _functor(run: _Run, rng: random.Random) -> None:
    per_case = {}
    for name, G in group_catalog().items():
        if G.order > 16:
            continue
        t = time.perf_counter()
        A = aut(group_to_structure(G, max_arity=16)).group
        ok = iso_groups(A, G) is not None
        dt = time.perf_counter() - t
        per_case[name] = dt
        run.check(ok and dt < 10.0, f"{name}: Aut(g2m(G)) {'~=' if ok else '!~='} G in {dt:.2f}s")
    run.details["groups"] = sorted(per_case)


def _reconstruction(run: _Run, rng: random.Random) -> None:
    orders = []
    for i in range(50):
        N = random_structure(rng, max_size=6, max_relations=3, max_arity=3)
        r = reconstruction_check(N)
        orders.append(r.aut_n_order)
        run.check(r.ok, f"structure {i}: {r}")
    run.details["autOrders"] = orders


def _galois(run: _Run, rng: random.Random) -> None:
    counts = {}
    for name, M in galois_corpus().items():
        G = aut(M).group
        if G.order > 24:
            run.check(False, f"{name}: |Aut| = {G.order} exceeds 24")
            continue
        subs = all_subgroups(G)
        counts[name] = len(subs)
        for H in subs:
            ci = coset_imaginary(M, H)
            exact = ci.anchor_stabilizer().same_group(H)
            normal, fixes_orbit = normal_iff_zero_definable(ci)
            run.check(exact and normal == fixes_orbit,
                      f"{name}: |H| = {H.order}, stabilizer exact {exact}, normal {normal}, "
                      f"orbit fixed pointwise {fixes_orbit}")
    run.details["subgroupCounts"] = counts


def _exact(run: _Run, rng: random.Random) -> None:
    split_cases = 0
    witnesses = {}
    for name, frag, qname in exact_pairs():
        seq = exact_sequence(frag, qname)
        run.check(seq.exact, f"{name}: exactness {seq.checks}")
        sections = find_sections(seq.restriction)
        good = 0
        for s in sections:
            w = section_to_interpretation(seq, s)
            good += run.check(w.ok, f"{name}: section witness {w.checks}")
        witnesses[name] = good
        if sections and good == len(sections):
            split_cases += 1
    run.check(split_cases >= 3, f"only {split_cases} split cases produced witnesses")
    nfrag, nq = nonsplit_pair()
    seq = exact_sequence(nfrag, nq)
    run.check(seq.exact, f"non-split: exactness {seq.checks}")
    run.check(find_sections(seq.restriction) == [], "non-split case has a section")
    run.details.update({"witnesses": witnesses, "splitCases": split_cases})


def _towers():
    return [(f"cyclic(2,{d})", cyclic_tower(2, d)) for d in range(1, 7)] + [("mixed", mixed_tower())]


def _tower(run: _Run, rng: random.Random) -> None:
    orders = {}
    for name, T in _towers():
        laws = tower_laws(T)
        orders[name] = limit_group(T).order
        for law, ok in laws.items():
            run.check(ok, f"{name}: {law}")
    run.details["gammaOrders"] = orders


def _pi1(run: _Run, rng: random.Random) -> None:
    orders = {}
    for name, T in [("cyclic(2,6)", cyclic_tower(2, 6)), ("mixed", mixed_tower())]:
        fs = fiber_structure(T)
        P = pi1_et(fs)
        gamma = limit_group(T).group
        orders[name] = [P.order, gamma.order]
        run.check(all(fs.checks.values()), f"{name}: fiber structure {fs.checks}")
        run.check(iso_groups(P, gamma) is not None, f"{name}: pi1 of order {P.order} vs {gamma.order}")
    run.details["orders"] = orders


def _sharp(run: _Run, rng: random.Random) -> None:
    d = section_demo(mixed_tower())
    run.check(d.sharp.is_k and d.section is not None and all(d.checks.values()),
              f"equivariant table: {d.message}")
    t = section_demo(mixed_tower(twisted=True))
    run.check(not t.sharp.is_k and t.section is None and t.sharp.obstruction is not None,
              f"twisted table: {t.message}")
    if t.sharp.obstruction is not None:
        a, b, _ = t.sharp.obstruction
        run.details["obstruction"] = f"{a[0]}:{a[1]} -> {b[0]}:{b[1]}"
    run.details["sharpIndex"] = [d.sharp.index, t.sharp.index]


_ISO_POOL = [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3), (5, 2), (2, 5), (3, 4)]


def _fields(run: _Run, rng: random.Random) -> None:
    with size_cap(max_universe=81):
        for p, m in [(2, 4), (3, 4), (2, 6)]:
            F = FiniteField(p, m)
            M = F.structure()
            A = aut(M).group
            frob = frobenius_group(F)
            run.check(A.order == m == primitive_image_count(F) and A.same_group(frob),
                      f"GF({p}^{m}): |Aut| = {A.order}")
            prime = {F.name(i) for i in range(p)}
            run.check({x.elem for x in dcl(M)} == prime, f"GF({p}^{m}): dcl of the empty set")
        T = cyclic_tower(2, 2)
        c = deck_field_correspondence(FiniteField(3, 4), T, ("L2", "r"))
        run.check(c.equivariant and len(c.bijection) == 4, "deck torsor of Z/4 vs conjugates in GF(81)")
        c1 = deck_field_correspondence(FiniteField(3, 1), T, ("L0", "r"))
        run.check(len(c1.bijection) == 1, "trivial level vs GF(3)")
        try:
            deck_field_correspondence(FiniteField(3, 3), T, ("L2", "r"))
            run.check(False, "Z/4 matched against GF(27)")
        except TowerError:
            run.check(True, "")
        agree = 0
        for i in range(20):
            p1, m1 = rng.choice(_ISO_POOL)
            p2, m2 = (p1, m1) if rng.random() < 0.5 else rng.choice(_ISO_POOL)
            f1 = rng.choice(list(irreducible_moduli(p1, m1)))
            f2 = rng.choice(list(irreducible_moduli(p2, m2)))
            iso = iso_structures(galois_orbit_structure(p1, m1, f1),
                                 galois_orbit_structure(p2, m2, f2)) is not None
            same = (p1, m1) == (p2, m2)
            agree += run.check(iso == same, f"pair {i}: GF({p1}^{m1}) mod {f1} vs "
                                            f"GF({p2}^{m2}) mod {f2}: iso {iso}")
        run.details["isoHarnessAgree"] = agree


CRITERIA: list[tuple[int, str, str, float, Callable]] = [
    (1, "functor", "Aut(group_to_structure(G)) ~= G for catalog groups of order <= 16", 180, _functor),
    (2, "reconstruction", "canonical_regular recovers Aut(N) and its tuple orbits", 120, _reconstruction),
    (3, "galois", "coset-imaginary stabilizers and normality", 180, _galois),
    (4, "exact", "restriction exact sequences and section witnesses", 60, _exact),
    (5, "tower", "tower laws on cyclic and mixed towers", 120, _tower),
    (6, "pi1", "pi1 of the forgetful fiber structure ~= limit group", 60, _pi1),
    (7, "sharp", "G# and the section demo, untwisted and twisted", 30, _sharp),
    (8, "fields", "finite-field automorphisms, dcl, torsors and the iso harness", 120, _fields),
]

SUITES = {suite: n for n, suite, *_ in CRITERIA}


def list_criteria() -> list[dict]:
    return [{"criterion": n, "suite": s, "title": t, "limitSeconds": lim}
            for n, s, t, lim, _ in CRITERIA]


def run_criterion(key: int | str, seed: int = 0) -> CriterionResult:
    n = SUITES[key] if isinstance(key, str) else key
    _, suite, title, limit, fn = CRITERIA[n - 1]
    rng = random.Random(f"{seed}:{suite}")
    run = _Run()
    t = time.perf_counter()
    try:
        fn(run, rng)
    except Exception as e:  # a crash is a failed criterion, reported not raised
        run.failures.append(f"{type(e).__name__}: {e}")
    dt = time.perf_counter() - t
    passed = not run.failures and run.cases > 0 and dt < limit
    return CriterionResult(n, suite, title, passed, dt, limit, run.cases, run.failures, run.details)


def run_suite(keys=None, seed: int = 0, echo: Callable[[str], None] | None = None) -> list[CriterionResult]:
    keys = list(keys) if keys else [n for n, *_ in CRITERIA]
    out = []
    for k in keys:
        r = run_criterion(k, seed)
        if echo:
            echo(r.line())
        out.append(r)
    return out
