"""Automorphism groups and isomorphisms of finite structures.

The search individualizes points along a first path of an
isomorphism-invariant colour refinement, then for each level looks for
automorphisms mapping the path point to every other candidate in its cell
(skipping candidates already in the orbit of the stabilizer found so far).
Orbit lengths along the path multiply to the group order.

Also here: both directions of the finite group / finite structure
equivalence (``group_to_structure`` and ``canonical_regular``) and the
restriction homomorphism attached to an interpretation.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping

import numpy as np

from .config import check_size, limits
from .perm import GroupHom, Perm, PermGroup, iso_groups, regular_representation, tuple_orbits
from .structure import Pt, SortedUniverse, StructureError, automorphism_failures, require_valid

__all__ = [
    "AutResult", "aut", "group_to_structure", "canonical_regular", "orbit_tuples",
    "iso_structures", "iso_groups", "restriction_hom", "reconstruction_check",
]


class _Refiner:
    def __init__(self, structure: SortedUniverse):
        self.structure = structure
        self.n = structure.size
        rel_names = sorted(structure.relations)
        self.rel_sets: dict[str, set[tuple[int, ...]]] = {}
        # one integer array per relation, rows are tuples
        self.blocks: list[np.ndarray] = []
        verts, tups, poss = [], [], []
        offset = 0
        for name in rel_names:
            ts = structure.index_tuples(name)
            self.rel_sets[name] = set(ts)
            k = structure.relations[name].arity
            if k == 0 or not ts:
                continue
            arr = np.array(ts, dtype=np.int64).reshape(len(ts), k)
            self.blocks.append(arr)
            rows = offset + np.arange(len(ts), dtype=np.int64)
            for pos in range(k):
                verts.append(arr[:, pos])
                tups.append(rows)
                poss.append(np.full(len(ts), pos, dtype=np.int64))
            offset += len(ts)
        self.width = max([b.shape[1] for b in self.blocks] + [1])
        if verts:
            vert, tup, pos = (np.concatenate(x) for x in (verts, tups, poss))
        else:
            vert = tup = pos = np.zeros(0, dtype=np.int64)
        order = np.argsort(vert, kind="stable")
        self.inc_vertex = vert[order]
        self.inc_tuple = tup[order]
        self.inc_pos = pos[order]
        self.bounds = np.searchsorted(self.inc_vertex, np.arange(self.n + 1))
        consts: dict[int, list[str]] = {}
        for c, p in structure.constants.items():
            consts.setdefault(structure.index[p], []).append(c)
        self.init_keys = [(p.sort, tuple(sorted(consts.get(i, ()))))
                          for i, p in enumerate(structure.points)]

    def initial(self) -> list[int]:
        keys = sorted(set(self.init_keys))
        pos = {k: i for i, k in enumerate(keys)}
        return [pos[k] for k in self.init_keys]

    def initial_trace(self) -> int:
        return hash(tuple(sorted(self.init_keys)))

    def refine(self, colors: list[int]) -> tuple[list[int], int]:
        traces = []
        col = np.asarray(colors, dtype=np.int64)
        ncol = len(np.unique(col))
        n = self.n
        while True:
            # colour each tuple by its relation and the colours along it
            ids, trace_parts, base = [], [], 0
            base_mul = int(col.max()) + 1 if n else 1
            for b in self.blocks:
                rows = col[b]
                # lexicographic rank of each row, one column at a time
                code = rows[:, 0]
                for j in range(1, rows.shape[1]):
                    _, code = np.unique(code * base_mul + rows[:, j], return_inverse=True)
                    code = code.reshape(-1)
                _, first, inv = np.unique(code, return_index=True, return_inverse=True)
                ids.append(base + inv.reshape(-1))
                trace_parts.append(rows[first].tobytes())
                base += len(first)
            tid = np.concatenate(ids) if ids else np.zeros(0, dtype=np.int64)
            keys = tid[self.inc_tuple] * self.width + self.inc_pos
            order = np.lexsort((keys, self.inc_vertex))
            keys = keys[order]
            bounds = self.bounds
            sigs = [(int(col[v]), keys[bounds[v]:bounds[v + 1]].tobytes()) for v in range(n)]
            counts: dict = {}
            for sg in sigs:
                counts[sg] = counts.get(sg, 0) + 1
            ranked = sorted(counts)
            rank = {k: i for i, k in enumerate(ranked)}
            col = np.array([rank[sg] for sg in sigs], dtype=np.int64)
            traces.append(hash((tuple(trace_parts), tuple((k, counts[k]) for k in ranked))))
            if len(ranked) == ncol:
                break
            ncol = len(ranked)
        return col.tolist(), hash(tuple(traces))


def _individualize(colors: list[int], v: int) -> list[int]:
    out = [2 * c for c in colors]
    out[v] += 1
    return out


def _target_cell(colors: list[int]) -> int | None:
    sizes: dict[int, int] = {}
    for c in colors:
        sizes[c] = sizes.get(c, 0) + 1
    cells = [(s, c) for c, s in sizes.items() if s > 1]
    return min(cells)[1] if cells else None


class _Path:
    """First path of the search tree: colours, target cells and choices per level."""

    def __init__(self, refiner: _Refiner):
        self.refiner = refiner
        c, tr = refiner.refine(refiner.initial())
        self.nodes: list[tuple[list[int], int, int]] = []
        self.traces = [tr]
        while True:
            cell = _target_cell(c)
            if cell is None:
                break
            v = min(x for x, col in enumerate(c) if col == cell)
            self.nodes.append((c, cell, v))
            c, tr = refiner.refine(_individualize(c, v))
            self.traces.append(tr)
        self.leaf = c

    def match(self, other: _Refiner, colors: list[int], depth: int,
              accept: Callable[[list[int]], bool]) -> list[int] | None:
        """Search ``other`` below ``colors`` for a leaf bijection passing ``accept``."""
        if depth == len(self.nodes):
            where = {col: x for x, col in enumerate(colors)}
            if len(where) != len(colors):
                return None
            perm = [where[self.leaf[x]] for x in range(len(colors))]
            return perm if accept(perm) else None
        _, cell, _ = self.nodes[depth]
        for w in [x for x, col in enumerate(colors) if col == cell]:
            c2, tr = other.refine(_individualize(colors, w))
            if tr != self.traces[depth + 1]:
                continue
            found = self.match(other, c2, depth + 1, accept)
            if found is not None:
                return found
        return None


def _preserves(refiner: _Refiner, target: _Refiner, perm: list[int]) -> bool:
    src, dst = refiner.structure, target.structure
    for i, j in enumerate(perm):
        if src.points[i].sort != dst.points[j].sort:
            return False
    for name, ts in refiner.rel_sets.items():
        other = target.rel_sets.get(name)
        if other is None or len(other) != len(ts):
            return False
        if any(tuple(perm[x] for x in t) not in other for t in ts):
            return False
    for c, p in src.constants.items():
        if perm[src.index[p]] != dst.index[dst.constants[c]]:
            return False
    return True


@dataclass
class AutResult:
    group: PermGroup
    certificate: list[dict[str, bool]]
    orbit_lengths: list[int]

    @property
    def order(self) -> int:
        return self.group.order


def aut(structure: SortedUniverse, max_size: int | None = None) -> AutResult:
    """Generators of the full automorphism group, each certified."""
    require_valid(structure)
    cap = limits().max_universe if max_size is None else max_size
    check_size("universe size", structure.size, cap)
    n = structure.size
    R = _Refiner(structure)
    path = _Path(R)
    gens: list[Perm] = []
    orbit_lengths = []
    accept = lambda perm: _preserves(R, R, perm)
    for depth in reversed(range(len(path.nodes))):
        colors, cell, v = path.nodes[depth]
        prefix = [path.nodes[j][2] for j in range(depth)]
        fixing = [g for g in gens if all(g.img[b] == b for b in prefix)]
        orbit = _orbit(v, fixing)
        for w in [x for x, col in enumerate(colors) if col == cell]:
            if w in orbit:
                continue
            c2, tr = R.refine(_individualize(colors, w))
            if tr != path.traces[depth + 1]:
                continue
            found = path.match(R, c2, depth + 1, accept)
            if found is not None:
                g = Perm(found)
                gens.append(g)
                fixing.append(g)
                orbit = _orbit(v, fixing)
        orbit_lengths.append(len(orbit))
    orbit_lengths.reverse()
    gens.sort()
    group = PermGroup(gens, n, structure.points)
    certificate = []
    for g in group.gens:
        bad = automorphism_failures(structure, g)
        if bad:
            raise AssertionError(f"search returned a non-automorphism (fails {bad})")
        certificate.append({name: True for name in sorted(structure.relations)})
    product = 1
    for k in orbit_lengths:
        product *= k
    if product != group.order:
        raise AssertionError("orbit lengths disagree with the stabilizer chain")
    return AutResult(group, certificate, orbit_lengths)


def _orbit(v: int, gens: list[Perm]) -> set[int]:
    seen = {v}
    stack = [v]
    while stack:
        x = stack.pop()
        for g in gens:
            y = g.img[x]
            if y not in seen:
                seen.add(y)
                stack.append(y)
    return seen


def _shape(s: SortedUniverse):
    return ({k: len(v) for k, v in s.sorts.items()},
            {k: (r.signature, len(r.tuples)) for k, r in s.relations.items()},
            sorted(s.constants))


def iso_structures(M: SortedUniverse, N: SortedUniverse,
                   max_size: int | None = None) -> dict[Pt, Pt] | None:
    """A relation- and constant-preserving bijection ``M -> N``, or ``None``."""
    require_valid(M)
    require_valid(N)
    cap = limits().max_universe if max_size is None else max_size
    check_size("universe size", max(M.size, N.size), cap)
    if _shape(M) != _shape(N):
        return None
    RM, RN = _Refiner(M), _Refiner(N)
    if RM.initial_trace() != RN.initial_trace():
        return None
    path = _Path(RM)
    c, tr = RN.refine(RN.initial())
    if tr != path.traces[0]:
        return None
    found = path.match(RN, c, 0, lambda perm: _preserves(RM, RN, perm))
    if found is None:
        return None
    return {M.points[i]: N.points[j] for i, j in enumerate(found)}


def group_to_structure(G: PermGroup, max_arity: int | None = None) -> SortedUniverse:
    """Universe = elements of ``G``; one relation = left-translation orbit
    of the enumeration tuple.  Its automorphism group is ``G`` again."""
    cap = limits().max_arity if max_arity is None else max_arity
    check_size("group order (relation arity)", G.order, cap)
    R = regular_representation(G)
    labels = R.points
    tuples = [tuple(labels[x] for x in h.img) for h in R.elements()]
    return SortedUniverse.build({"G": labels}, {"orbit": (["G"] * len(labels), tuples)})


def orbit_tuples(N: SortedUniverse, group: PermGroup | None = None) -> list[tuple[int, ...]]:
    """The Aut(N)-orbit of N's enumeration tuple, as index tuples."""
    A = aut(N, max_size=N.size).group if group is None else group
    return [g.img for g in A.elements()]


def canonical_regular(N: SortedUniverse, max_arity: int | None = None,
                      group: PermGroup | None = None) -> SortedUniverse:
    """The structure M' on the orbit of N's enumeration tuple.

    Elements ``t<i>`` stand for the tuples of ``orbit_tuples(N)`` in order;
    the single relation is the Aut(N)-orbit of M''s own enumeration tuple.
    """
    A = aut(N, max_size=N.size).group if group is None else group
    elems = A.elements()
    width = len(str(len(elems) - 1))
    names = [f"t{i:0{width}d}" for i in range(len(elems))]
    index = {g: i for i, g in enumerate(elems)}
    cap = max(len(elems), 1) if max_arity is None else max_arity
    check_size("orbit size (relation arity)", len(elems), cap)
    tuples = [tuple(names[index[tau * s]] for s in elems) for tau in elems]
    return SortedUniverse.build({"T": names}, {"orbit": (["T"] * len(names), tuples)})


@dataclass
class ReconstructionReport:
    aut_n_order: int
    aut_m_order: int
    isomorphic: bool
    well_defined: bool
    orbit_arities_checked: list[int]
    orbits_agree: bool

    @property
    def ok(self) -> bool:
        return self.isomorphic and self.well_defined and self.orbits_agree


def reconstruction_check(N: SortedUniverse, max_k: int | None = None) -> ReconstructionReport:
    """Compare Aut(N) with Aut(M') transported back to N through the tuple coordinates."""
    AN = aut(N, max_size=N.size).group
    tuples = orbit_tuples(N, AN)
    Mp = canonical_regular(N, group=AN)
    AM = aut(Mp, max_size=Mp.size).group
    n = N.size
    induced, well_defined = [], True
    for rho in AM.gens:
        img = [None] * n
        for i, T in enumerate(tuples):
            U = tuples[rho.img[i]]
            for pos, a in enumerate(T):
                b = U[pos]
                if img[a] is None:
                    img[a] = b
                elif img[a] != b:
                    well_defined = False
        if None in img or not well_defined:
            well_defined = False
            break
        induced.append(Perm(img))
    if well_defined and GroupHom(AM, AN, induced).is_injective() and AM.order == AN.order:
        iso = True
    else:
        iso = iso_groups(AM, AN) is not None
    ks = list(range(1, (n if max_k is None else min(n, max_k)) + 1))
    agree = well_defined
    if well_defined:
        for k in ks:
            if not np.array_equal(tuple_orbits(AN.gens, n, k), tuple_orbits(induced, n, k)):
                agree = False
                break
    return ReconstructionReport(AN.order, AM.order, iso, well_defined, ks, agree)


class InterpretationError(StructureError):
    pass


def restriction_hom(g) -> GroupHom:
    """``sigma -> sigma|g(N)`` transported back to ``N`` (for an interpretation ``g``).

    The domain is Aut(M/A) acting on the target fragment; the codomain is Aut(N).
    """
    frag = g.target
    G = frag.group
    AN = aut(g.source, max_size=g.source.size).group
    src = g.source
    back = {v: k for k, v in g.map.items()}
    images = []
    for s in G.gens:
        img = []
        for a in src.points:
            b = frag.points[s.img[frag.index[g.map[a]]]]
            if b not in back:
                raise InterpretationError(f"automorphism moves g(N) off itself at {a}")
            img.append(src.index[back[b]])
        p = Perm(img)
        if p not in AN:
            raise InterpretationError("restriction is not an automorphism of N")
        images.append(p)
    return GroupHom(G, AN, images)
