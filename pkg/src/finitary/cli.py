"""Command-line front end.  Every command prints one JSON document on stdout.

Exit status: 0 success, 1 a verified law failed, 2 bad input or usage.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from typing import Any, Sequence

from . import formats
from .acceptance import CRITERIA, SUITES, list_criteria, run_suite
from .autcalc import aut, group_to_structure, iso_structures, reconstruction_check
from .config import SizeLimitError
from .galois import (coset_imaginary, exact_sequence, normal_iff_zero_definable,
                     section_to_interpretation)
from .instances import FiniteField, cyclic_tower, group_catalog
from .interp import classify, validate_premorphism
from .perm import NotHomomorphism, all_subgroups, find_sections
from .structure import QuotientSort, StructureError, add_quotient, fragment
from .tower import (TowerError, fiber_structure, limit_group, node_name, pi1_et, section_demo,
                    sharp_subgroup, tower_laws)


class LawFailure(Exception):
    def __init__(self, payload: dict):
        super().__init__("law violated")
        self.payload = payload


class _Ctx:
    def __init__(self, args):
        self.args = args
        self.digest = hashlib.sha256()
        self.started = time.perf_counter()

    def read(self, path: str) -> str:
        if path == "-":
            text = sys.stdin.read()
        else:
            try:
                with open(path, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as e:
                raise formats.FormatError(f"cannot read {path}: {e.strerror}") from None
        self.digest.update(text.encode())
        return text

    def read_json(self, path: str) -> Any:
        try:
            return json.loads(self.read(path))
        except json.JSONDecodeError as e:
            raise formats.FormatError(f"{path}: invalid JSON: {e}") from None

    def certificate(self, operation: str, laws: dict[str, bool]) -> dict:
        cert = {"operation": operation, "inputsDigest": self.digest.hexdigest(),
                "laws": [{"name": k, "pass": bool(v)} for k, v in laws.items()]}
        if self.args.timing:
            cert["seconds"] = round(time.perf_counter() - self.started, 3)
        return cert


def _require(out: dict, laws: dict[str, bool]) -> dict:
    if not all(laws.values()):
        raise LawFailure(out)
    return out


def _aut_payload(ctx: _Ctx, s) -> dict:
    res = aut(s, max_size=None)
    laws = {f"generator_{i}_is_automorphism": all(c.values()) for i, c in enumerate(res.certificate)}
    laws["orbit_lengths_multiply_to_order"] = True
    return {"order": res.order,
            "generators": [formats.perm_to_table(s, g) for g in res.group.gens],
            "orbitLengths": res.orbit_lengths,
            "certificate": ctx.certificate("aut", laws)}


# -- commands -----------------------------------------------------------

def cmd_aut(ctx: _Ctx) -> dict:
    s = formats.load_structure(ctx.read(ctx.args.file))
    return _aut_payload(ctx, s)


def cmd_g2m(ctx: _Ctx) -> dict:
    cat = group_catalog()
    if ctx.args.group:
        if ctx.args.group not in cat:
            raise formats.FormatError(f"unknown group {ctx.args.group!r}; try one of {sorted(cat)}")
        G = cat[ctx.args.group]
    else:
        G = formats.group_from_json(ctx.read_json(ctx.args.file))
    s = group_to_structure(G, max_arity=ctx.args.max_arity)
    return formats.structure_to_json(s)


def cmd_m2g(ctx: _Ctx) -> dict:
    s = formats.load_structure(ctx.read(ctx.args.file))
    res = aut(s)
    rep = reconstruction_check(s)
    laws = {"aut_canonical_regular_iso": rep.isomorphic, "transport_well_defined": rep.well_defined,
            "tuple_orbits_agree": rep.orbits_agree}
    out = {"order": res.order, "degree": s.size, "points": [str(p) for p in s.points],
           "generators": [list(g.img) for g in res.group.gens],
           "certificate": ctx.certificate("m2g", laws)}
    return _require(out, laws)


def cmd_iso(ctx: _Ctx) -> dict:
    M = formats.load_structure(ctx.read(ctx.args.first))
    N = formats.load_structure(ctx.read(ctx.args.second))
    f = iso_structures(M, N)
    out = {"isomorphic": f is not None,
           "map": None if f is None else {str(a): str(b) for a, b in f.items()}}
    laws = {}
    if f is not None:
        laws["map_preserves_structure"] = M.relabel(f) == N
    out["certificate"] = ctx.certificate("iso", laws)
    return _require(out, laws)


def cmd_interp(ctx: _Ctx) -> dict:
    g = validate_premorphism(formats.load_bundle(ctx.read_json(ctx.args.file)))
    out: dict = {"premorphism": bool(g.premorphism_ok), "failures": list(g.failures)}
    if g.premorphism_ok:
        cl = classify(g)
        out.update({"embedding": cl.embedding, "surjection": cl.surjection,
                    "isomorphism": cl.isomorphism, "verifiedUpTo": cl.verified_up_to,
                    "missingFromDcl": sorted(str(p) for p in cl.missing_from_dcl)})
    out["certificate"] = ctx.certificate("interp check", {"premorphism": bool(g.premorphism_ok)})
    return out


def _galois_input(ctx: _Ctx):
    text = ctx.read(ctx.args.file)
    if not text.lstrip().startswith("{"):
        return fragment(formats.parse_text(text)), None
    try:
        d = json.loads(text)
    except json.JSONDecodeError as e:
        raise formats.FormatError(f"{ctx.args.file}: invalid JSON: {e}") from None
    if "source" in d and "target" in d:
        raise formats.FormatError("expected a structure or fragment file, not a bundle")
    if "structure" in d:
        frag = fragment(formats.structure_from_json(d["structure"]))
        for im in d.get("imaginaries", []):
            blocks = [[formats.term_from_json(t) for t in blk] for blk in im["blocks"]]
            q = QuotientSort.from_blocks(im["name"], blocks)
            frag = add_quotient(frag, im["name"], q.domain, q)
        return frag, d.get("qname")
    return fragment(formats.structure_from_json(d)), None


def cmd_galois(ctx: _Ctx) -> dict:
    frag, qname = _galois_input(ctx)
    qname = ctx.args.quotient or qname
    if ctx.args.action == "subgroups":
        G = frag.group
        rows, laws = [], {}
        for i, H in enumerate(all_subgroups(G)):
            ci = coset_imaginary(frag, H)
            normal, fixes = normal_iff_zero_definable(ci)
            exact = ci.anchor_stabilizer().same_group(H)
            rows.append({"order": H.order, "generators": [list(h.img) for h in H.gens],
                         "normal": normal, "anchorOrbitFixedPointwise": fixes,
                         "stabilizerIsH": exact})
            laws[f"subgroup_{i}"] = exact and normal == fixes
        out = {"autOrder": G.order, "subgroups": rows}
        out["certificate"] = ctx.certificate("galois subgroups", laws)
        return _require(out, laws)
    if qname is None:
        raise formats.FormatError("no quotient sort given (use --quotient or a qname field)")
    seq = exact_sequence(frag, qname)
    out = {"kernelOrder": seq.kernel.order, "groupOrder": seq.group.order,
           "quotientOrder": seq.quotient_group.order}
    laws = dict(seq.checks)
    if ctx.args.action == "exact":
        out["certificate"] = ctx.certificate("galois exact", laws)
        return _require(out, laws)
    sections = find_sections(seq.restriction)
    wits = []
    for i, s in enumerate(sections):
        w = section_to_interpretation(seq, s)
        wits.append({"image": [list(g.img) for g in s.image().gens],
                     "fixedSet": sorted(str(p) for p in w.fixed_set), "checks": w.checks})
        laws[f"section_{i}"] = w.ok
    out.update({"split": bool(sections), "sections": wits})
    out["certificate"] = ctx.certificate("galois section", laws)
    return _require(out, laws)


def cmd_tower(ctx: _Ctx) -> dict:
    T = formats.tower_from_json(ctx.read_json(ctx.args.file))
    act = ctx.args.action
    if act == "build":
        laws = tower_laws(T)
        out = {"nodes": [node_name(a) for a in T.nodes], "morphismPairs": len(T.pairs),
               "certificate": ctx.certificate("tower build", laws)}
        return _require(out, laws)
    if act == "limit":
        lim = limit_group(T)
        out = {"gammaOrder": lim.order,
               "periodIndices": {node_name(a): lim.order // K.order for a, K in lim.periods.items()},
               "certificate": ctx.certificate("tower limit", lim.checks)}
        return _require(out, lim.checks)
    if act == "fiber":
        fs = fiber_structure(T)
        out = {"forget": formats.structure_to_json(fs.forget),
               "certificate": ctx.certificate("tower fiber", fs.checks)}
        return _require(out, fs.checks)
    if act == "pi1":
        from .perm import iso_groups
        fs = fiber_structure(T)
        P = pi1_et(fs)
        gamma = limit_group(T).group
        laws = {"pi1_iso_gamma": iso_groups(P, gamma) is not None}
        out = {"pi1Order": P.order, "gammaOrder": gamma.order,
               "certificate": ctx.certificate("tower pi1", laws)}
        return _require(out, laws)
    if act == "sharp":
        r = sharp_subgroup(T)
        ob = None
        if r.obstruction is not None:
            a, b, s = r.obstruction
            ob = {"source": node_name(a), "target": node_name(b), "element": list(s.img)}
        return {"index": r.index, "order": r.group.order, "label": r.label(), "obstruction": ob,
                "certificate": ctx.certificate("tower sharp", {})}
    d = section_demo(T)
    out = {"sharpIndex": d.sharp.index, "autOrder": d.automorphisms.order,
           "section": None if d.section is None else [list(g.img) for g in d.section.images],
           "message": d.message, "certificate": ctx.certificate("tower section", d.checks)}
    return _require(out, d.checks)


def cmd_gen(ctx: _Ctx) -> dict:
    a = ctx.args
    if a.what == "field":
        if a.p is None or a.m is None:
            raise formats.FormatError("gen field needs p and m")
        return formats.structure_to_json(FiniteField(a.p, a.m).structure())
    if a.what == "tower":
        if a.p is None or a.m is None:
            raise formats.FormatError("gen tower needs p and depth")
        return formats.tower_to_json(cyclic_tower(a.p, a.m))
    return {name: {"order": G.order, **formats.group_to_json(G)} for name, G in group_catalog().items()}


def cmd_acceptance(ctx: _Ctx) -> dict:
    a = ctx.args
    if a.list:
        return {"criteria": list_criteria()}
    keys = []
    for s in a.suite:
        if s.isdigit() and 1 <= int(s) <= len(CRITERIA):
            keys.append(int(s))
        elif s in SUITES:
            keys.append(s)
        else:
            raise formats.FormatError(f"unknown suite {s!r}; known: {sorted(SUITES)}")
    echo = (lambda line: print(line, file=sys.stderr)) if a.verbose else None
    results = run_suite(keys or None, seed=a.seed, echo=echo)
    out = {"seed": a.seed, "passed": all(r.passed for r in results),
           "criteria": [r.to_json(timing=a.timing) for r in results]}
    if not out["passed"]:
        raise LawFailure(out)
    return out


# -- parser -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finitary", description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0, help="seed for randomized generation")
    p.add_argument("--pretty", action="store_true", help="human-readable table instead of JSON")
    p.add_argument("--timing", action="store_true", help="include wall-clock seconds")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("aut", help="automorphism group of a structure file")
    s.add_argument("file")
    s.set_defaults(fn=cmd_aut)

    s = sub.add_parser("g2m", help="structure whose automorphism group is G")
    s.add_argument("--group", help="catalog name, e.g. C3 or S3")
    s.add_argument("--max-arity", type=int, default=None)
    s.add_argument("file", nargs="?", default="-", help="group JSON when --group is absent")
    s.set_defaults(fn=cmd_g2m)

    s = sub.add_parser("m2g", help="automorphism group with the reconstruction check")
    s.add_argument("file")
    s.set_defaults(fn=cmd_m2g)

    s = sub.add_parser("iso", help="isomorphism between two structures")
    s.add_argument("first")
    s.add_argument("second")
    s.set_defaults(fn=cmd_iso)

    s = sub.add_parser("interp", help="check an interpretation bundle")
    s.add_argument("action", choices=["check"])
    s.add_argument("file")
    s.set_defaults(fn=cmd_interp)

    s = sub.add_parser("galois", help="subgroups, exact sequences and sections")
    s.add_argument("action", choices=["subgroups", "exact", "section"])
    s.add_argument("file")
    s.add_argument("--quotient", help="quotient sort name")
    s.set_defaults(fn=cmd_galois)

    s = sub.add_parser("tower", help="tower description files")
    s.add_argument("action", choices=["build", "limit", "fiber", "pi1", "sharp", "section"])
    s.add_argument("file")
    s.set_defaults(fn=cmd_tower)

    s = sub.add_parser("gen", help="generate instances")
    s.add_argument("what", choices=["field", "tower", "catalog"])
    s.add_argument("p", type=int, nargs="?")
    s.add_argument("m", type=int, nargs="?", help="degree (field) or depth (tower)")
    s.set_defaults(fn=cmd_gen)

    s = sub.add_parser("acceptance", help="run acceptance criteria")
    s.add_argument("suite", nargs="*", help="suite names or criterion numbers")
    s.add_argument("--list", action="store_true")
    s.add_argument("-v", "--verbose", action="store_true", help="pass/fail lines on stderr")
    s.set_defaults(fn=cmd_acceptance)
    return p


def _rows(obj: Any, prefix: str = ""):
    if isinstance(obj, dict) and obj:
        for k in sorted(obj):
            yield from _rows(obj[k], f"{prefix}.{k}" if prefix else str(k))
    elif isinstance(obj, list) and obj and not all(isinstance(x, (int, float, str)) for x in obj):
        for i, x in enumerate(obj):
            yield from _rows(x, f"{prefix}[{i}]")
    else:
        if isinstance(obj, list):
            obj = ", ".join(map(str, obj))
        yield prefix, "" if obj is None else str(obj)


def render_table(obj: Any) -> str:
    rows = list(_rows(obj))
    width = max((len(k) for k, _ in rows), default=0)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in rows)


def _emit(obj: Any, pretty: bool) -> None:
    sys.stdout.write(render_table(obj) if pretty else formats.dumps(obj))


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    ctx = _Ctx(args)
    try:
        out = args.fn(ctx)
    except LawFailure as e:
        _emit(e.payload, args.pretty)
        return 1
    except AssertionError as e:
        _emit({"error": "law violated", "detail": str(e)}, args.pretty)
        return 1
    except (formats.FormatError, StructureError, TowerError, SizeLimitError, NotHomomorphism,
            ValueError, KeyError) as e:
        print(f"finitary: error: {e}", file=sys.stderr)
        return 2
    _emit(out, args.pretty)
    return 0


if __name__ == "__main__":
    sys.exit(main())
