"""Reading and writing structures, permutations, interpretation bundles and towers.

Text structure format, one declaration per line::

    # comment
    sort V a b c
    rel E(V,V) a b | b c | c a
    const base = V:a

Tuples are separated by ``|``; a nullary relation that holds is written
``rel P() true``.  Identifiers may not contain whitespace or any of
``|(),:=#``.  ``print_text`` emits the canonical form (sorts, relations and
constants by name, tuples sorted) so parse/print is byte-stable on it.

JSON structure schema::

    {"sorts": {"V": ["a", "b"]},
     "relations": [{"name": "E", "signature": ["V", "V"], "tuples": [["a", "b"]]}],
     "constants": {"base": ["V", "a"]}}
"""

from __future__ import annotations

import json
import re
from typing import Any, Iterable, Mapping

from .perm import GroupHom, Perm, PermGroup
from .structure import (EqFragment, Pt, QuotientSort, SortedUniverse, StructureError,
                        add_quotient, fragment, is_point)

__all__ = [
    "FormatError", "parse_text", "print_text", "structure_to_json", "structure_from_json",
    "load_structure", "dumps", "perm_to_table", "perm_from_table", "parse_cycles",
    "term_to_json", "term_from_json", "load_bundle", "bundle_to_json",
    "tower_to_json", "tower_from_json", "group_to_json", "group_from_json",
]

_BAD = re.compile(r"[\s|(),:=#]")
_REL = re.compile(r"^rel\s+([^\s(]+)\s*\(([^)]*)\)\s*(.*)$")
_CONST = re.compile(r"^const\s+(\S+)\s*=\s*([^\s:]+):(\S+)$")


class FormatError(ValueError):
    pass


def _ident(s: str, what: str) -> str:
    if not s or _BAD.search(s):
        raise FormatError(f"bad {what} identifier {s!r}")
    return s


# -- text ---------------------------------------------------------------

def parse_text(text: str) -> SortedUniverse:
    sorts: dict[str, list[str]] = {}
    rels: dict[str, tuple[list[str], list[tuple[str, ...]]]] = {}
    consts: dict[str, tuple[str, str]] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kw = line.split(None, 1)[0]
        try:
            if kw == "sort":
                parts = line.split()
                if len(parts) < 2:
                    raise FormatError("sort needs a name")
                name = _ident(parts[1], "sort")
                if name in sorts:
                    raise FormatError(f"sort {name} declared twice")
                sorts[name] = [_ident(e, "element") for e in parts[2:]]
            elif kw == "rel":
                m = _REL.match(line)
                if not m:
                    raise FormatError("expected rel Name(S1,...) tuples")
                name = _ident(m.group(1), "relation")
                if name in rels:
                    raise FormatError(f"relation {name} declared twice")
                sig = [_ident(s.strip(), "sort") for s in m.group(2).split(",")] if m.group(2).strip() else []
                body = m.group(3).strip()
                tuples = []
                if sig:
                    for chunk in body.split("|") if body else []:
                        t = tuple(_ident(e, "element") for e in chunk.split())
                        if len(t) != len(sig):
                            raise FormatError(f"tuple {chunk.strip()!r} has wrong arity")
                        tuples.append(t)
                elif body == "true":
                    tuples.append(())
                elif body:
                    raise FormatError("nullary relation body must be 'true' or empty")
                rels[name] = (sig, tuples)
            elif kw == "const":
                m = _CONST.match(line)
                if not m:
                    raise FormatError("expected const name = Sort:elem")
                consts[_ident(m.group(1), "constant")] = (m.group(2), m.group(3))
            else:
                raise FormatError(f"unknown declaration {kw!r}")
        except FormatError as e:
            raise FormatError(f"line {lineno}: {e}") from None
    return _checked(SortedUniverse.build(sorts, rels, consts))


def _checked(s: SortedUniverse) -> SortedUniverse:
    from .structure import validate
    report = validate(s)
    if not report.ok:
        raise FormatError("; ".join(report.violations))
    return s


def print_text(s: SortedUniverse) -> str:
    lines = []
    for name in sorted(s.sorts):
        lines.append(" ".join(["sort", _ident(name, "sort")]
                              + [_ident(e, "element") for e in sorted(s.sorts[name])]))
    for name in sorted(s.relations):
        rel = s.relations[name]
        head = f"rel {_ident(name, 'relation')}({','.join(rel.signature)})"
        if rel.arity == 0:
            lines.append(head + (" true" if rel.tuples else ""))
            continue
        body = " | ".join(" ".join(t) for t in sorted(rel.tuples))
        lines.append(f"{head} {body}" if body else head)
    for name in sorted(s.constants):
        p = s.constants[name]
        lines.append(f"const {_ident(name, 'constant')} = {p.sort}:{p.elem}")
    return "\n".join(lines) + "\n"


# -- JSON ---------------------------------------------------------------

def structure_to_json(s: SortedUniverse) -> dict:
    return {
        "sorts": {k: sorted(v) for k, v in sorted(s.sorts.items())},
        "relations": [{"name": n, "signature": list(s.relations[n].signature),
                       "tuples": [list(t) for t in sorted(s.relations[n].tuples)]}
                      for n in sorted(s.relations)],
        "constants": {c: [p.sort, p.elem] for c, p in sorted(s.constants.items())},
    }


def structure_from_json(d: Mapping) -> SortedUniverse:
    try:
        sorts = {str(k): [str(e) for e in v] for k, v in d["sorts"].items()}
        rels = {}
        for r in d.get("relations", []):
            if r["name"] in rels:
                raise FormatError(f"relation {r['name']} declared twice")
            sig = list(r["signature"])
            tuples = [tuple(t) for t in r.get("tuples", [])]
            if any(len(t) != len(sig) for t in tuples):
                raise FormatError(f"relation {r['name']}: tuple of wrong arity")
            rels[r["name"]] = (sig, tuples)
        consts = {c: (v[0], v[1]) for c, v in d.get("constants", {}).items()}
    except (KeyError, TypeError, IndexError, AttributeError) as e:
        raise FormatError(f"malformed structure JSON: {e}") from None
    return _checked(SortedUniverse.build(sorts, rels, consts))


def load_structure(text: str) -> SortedUniverse:
    """JSON if the text looks like an object, the line format otherwise."""
    if text.lstrip().startswith("{"):
        try:
            d = json.loads(text)
        except json.JSONDecodeError as e:
            raise FormatError(f"invalid JSON: {e}") from None
        if "structure" in d and "sorts" not in d:
            d = d["structure"]
        return structure_from_json(d)
    return parse_text(text)


def dumps(obj: Any, pretty: bool = False) -> str:
    if pretty:
        return json.dumps(obj, indent=2, sort_keys=True) + "\n"
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


# -- permutations -------------------------------------------------------

def perm_to_table(s: SortedUniverse, g: Perm) -> dict[str, dict[str, str]]:
    out: dict[str, dict[str, str]] = {}
    for i, p in enumerate(s.points):
        q = s.points[g.img[i]]
        out.setdefault(p.sort, {})[p.elem] = q.elem
    return out


def perm_from_table(s: SortedUniverse, table: Mapping[str, Mapping[str, str]] | str) -> Perm:
    if isinstance(table, str):
        return parse_cycles(s, table)
    img = list(range(s.size))
    for sort, mapping in table.items():
        for a, b in mapping.items():
            try:
                img[s.index[Pt(sort, a)]] = s.index[Pt(sort, b)]
            except KeyError:
                raise FormatError(f"unknown point in table: {sort}:{a} or {sort}:{b}") from None
    if sorted(img) != list(range(s.size)):
        raise FormatError("table is not a bijection")
    return Perm(img)


def parse_cycles(s: SortedUniverse, text: str) -> Perm:
    """Cycle notation like ``(a b c)(d e)`` on a single-sort universe."""
    if len(s.sorts) != 1:
        raise FormatError("cycle notation needs a single-sort universe")
    (sort,) = s.sorts
    if re.sub(r"\([^()]*\)", "", text).strip():
        raise FormatError(f"bad cycle notation {text!r}")
    img = list(range(s.size))
    seen: set[int] = set()
    for body in re.findall(r"\(([^()]*)\)", text):
        try:
            cyc = [s.index[Pt(sort, e)] for e in body.replace(",", " ").split()]
        except KeyError as e:
            raise FormatError(f"unknown element {e}") from None
        if seen & set(cyc) or len(set(cyc)) != len(cyc):
            raise FormatError("cycles overlap")
        seen.update(cyc)
        for a, b in zip(cyc, cyc[1:] + cyc[:1]):
            img[a] = b
    return Perm(img)


def group_to_json(G: PermGroup) -> dict:
    return {"degree": G.degree, "generators": [list(g.img) for g in G.gens]}


def group_from_json(d: Mapping) -> PermGroup:
    try:
        n = int(d["degree"])
        gens = [Perm(g) for g in d.get("generators", [])]
    except (KeyError, TypeError, ValueError) as e:
        raise FormatError(f"malformed group: {e}") from None
    for g in gens:
        if sorted(g.img) != list(range(n)):
            raise FormatError(f"generator {list(g.img)} is not a permutation of degree {n}")
    return PermGroup(gens, n)


# -- terms and bundles --------------------------------------------------

def term_to_json(t) -> Any:
    if is_point(t):
        return f"{t.sort}:{t.elem}"
    return [term_to_json(x) for x in t]


def term_from_json(v) -> Any:
    if isinstance(v, str):
        if ":" not in v:
            raise FormatError(f"point {v!r} must be written Sort:elem")
        sort, elem = v.split(":", 1)
        return Pt(sort, elem)
    if isinstance(v, list):
        return tuple(term_from_json(x) for x in v)
    raise FormatError(f"bad term {v!r}")


def load_bundle(d: Mapping):
    """``{source, target, imaginaries:[{name, blocks}], map, named?, qname?}``.

    Returns an unvalidated Interpretation; ``qname`` defaults to the last
    imaginary.
    """
    from .interp import interpretation
    try:
        src = structure_from_json(d["source"])
        tgt = structure_from_json(d["target"])
        frag = fragment(tgt)
        for im in d.get("imaginaries", []):
            blocks = [[term_from_json(t) for t in blk] for blk in im["blocks"]]
            q = QuotientSort.from_blocks(im["name"], blocks)
            frag = add_quotient(frag, im["name"], q.domain, q)
        if d.get("named"):
            frag = frag.with_named(term_from_json(p) for p in d["named"])
        qname = d.get("qname") or (d["imaginaries"][-1]["name"] if d.get("imaginaries") else None)
        if qname is None:
            raise FormatError("bundle names no quotient sort")
        mapping = {term_from_json(k): term_from_json(v) for k, v in d["map"].items()}
    except (KeyError, TypeError) as e:
        raise FormatError(f"malformed bundle: {e}") from None
    return interpretation(src, frag, qname, mapping)


def bundle_to_json(g) -> dict:
    frag: EqFragment = g.target
    return {
        "source": structure_to_json(g.source),
        "target": structure_to_json(frag.base),
        "imaginaries": [{"name": q.name, "blocks": [sorted((term_to_json(t) for t in blk), key=str)
                                                      for blk in q.classes]}
                        for q in frag.imaginaries],
        "named": sorted(term_to_json(p) for p in frag.named),
        "qname": g.qname,
        "map": {term_to_json(a): term_to_json(g.term(a)) for a in g.source.points},
    }


# -- towers -------------------------------------------------------------

def tower_to_json(t) -> dict:
    chain = t.chain
    steps = []
    for i in range(1, len(chain)):
        e = chain.epis[(i, i - 1)]
        steps.append({"from": i, "to": i - 1, "images": [list(e(g).img) for g in chain.groups[i].gens]})
    covers = []
    for c in t.covers.values():
        covers.append({
            "label": c.label, "zeros": list(c.zeros), "geometric": c.geometric,
            "gkAction": [list(g.img) for g in c.gk_action],
            "constantField": None if c.constant_field is None else group_to_json(c.constant_field),
        })
    from .tower import node_name
    table = [{"source": node_name(a), "target": node_name(b), "twist": list(t.table[(a, b)].img)}
             for a, b in t.pairs]
    return {"chain": {"groups": [group_to_json(G) for G in chain.groups], "epis": steps},
            "gk": group_to_json(t.gk), "covers": covers, "distinguished": table}


def _node(s: str, labels: Iterable[str]) -> tuple[str, str]:
    for lab in sorted(labels, key=len, reverse=True):
        if s.startswith(lab + ":"):
            return (lab, s[len(lab) + 1:])
    raise FormatError(f"unknown node {s!r}")


def tower_from_json(d: Mapping):
    from .tower import Cover, CoverTower, GroupChain
    try:
        groups = [group_from_json(g) for g in d["chain"]["groups"]]
        steps_by = {int(e["from"]): e for e in d["chain"].get("epis", [])}
        steps = []
        for i in range(1, len(groups)):
            e = steps_by.get(i)
            if e is None or int(e["to"]) != i - 1:
                raise FormatError(f"chain needs an epi from level {i} to {i - 1}")
            steps.append(GroupHom(groups[i], groups[i - 1], [Perm(x) for x in e["images"]]))
        gk = group_from_json(d.get("gk", {"degree": 1, "generators": []}))
        covers = []
        for c in d["covers"]:
            cf = c.get("constantField")
            covers.append(Cover(str(c["label"]), tuple(map(str, c["zeros"])), int(c["geometric"]),
                                tuple(Perm(x) for x in c.get("gkAction", [])),
                                None if cf is None else group_from_json(cf)))
        dist = d.get("distinguished", "auto")
        if not isinstance(dist, str):
            labels = [c.label for c in covers]
            dist = {(_node(e["source"], labels), _node(e["target"], labels)): Perm(e["twist"])
                    for e in dist}
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, FormatError):
            raise
        raise FormatError(f"malformed tower: {e}") from None
    chain = GroupChain.from_steps(groups, steps)
    return CoverTower(chain, covers, gk, dist)
