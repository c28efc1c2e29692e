import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from finitary import formats
from finitary.cli import main, render_table
from finitary.instances import cyclic_tower, group_catalog, mixed_tower, random_structure
from finitary.perm import Perm
from finitary.structure import Pt, SortedUniverse
from finitary.tower import limit_group

DATA = Path(__file__).resolve().parent.parent / "demos" / "data"


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _multi():
    return SortedUniverse.build({"X": ["a", "b"], "Y": ["u"]},
                                {"R": (["X", "Y"], [("a", "u")]), "P": ([], [()])},
                                {"c": ("X", "b")})


# -- text and JSON formats ------------------------------------------------

def test_text_round_trip_is_byte_stable():
    s = _multi()
    text = formats.print_text(s)
    assert formats.parse_text(text) == s
    assert formats.print_text(formats.parse_text(text)) == text


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_round_trips_on_random_structures(seed):
    import random
    s = random_structure(random.Random(seed))
    assert formats.parse_text(formats.print_text(s)) == s
    j = formats.dumps(formats.structure_to_json(s))
    assert formats.structure_from_json(json.loads(j)) == s
    assert formats.dumps(formats.structure_to_json(formats.load_structure(j))) == j


@pytest.mark.parametrize("text, fragment", [
    ("sort V a a", "twice"),
    ("rel E(V,V) a b", "unknown sort"),
    ("sort V a\nrel E(V) a b", "arity"),
    ("sort V a\nconst c = V:z", "does not exist"),
    ("frobnicate", "unknown declaration"),
])
def test_text_errors(text, fragment):
    with pytest.raises((formats.FormatError, ValueError), match=fragment):
        formats.parse_text(text)


def test_json_wrapped_structure():
    s = _multi()
    wrapped = json.dumps({"structure": formats.structure_to_json(s)})
    assert formats.load_structure(wrapped) == s


def test_perm_tables_and_cycles():
    s = SortedUniverse.build({"V": ["a", "b", "c"]})
    g = Perm([1, 2, 0])
    assert formats.perm_from_table(s, formats.perm_to_table(s, g)) == g
    assert formats.parse_cycles(s, "(a b c)") == g
    assert formats.perm_from_table(s, "(a b c)") == g


def test_group_and_term_round_trip():
    G = group_catalog()["S3"]
    assert formats.group_from_json(formats.group_to_json(G)).same_group(G)
    t = (Pt("V", "a"), (Pt("V", "b"), Pt("W", "x")))
    assert formats.term_from_json(formats.term_to_json(t)) == t


def test_tower_round_trip():
    for T in [cyclic_tower(2, 3), mixed_tower(), mixed_tower(twisted=True)]:
        d = formats.tower_to_json(T)
        T2 = formats.tower_from_json(json.loads(formats.dumps(d)))
        assert T2.table == T.table and T2.nodes == T.nodes
        assert formats.dumps(formats.tower_to_json(T2)) == formats.dumps(d)
        assert limit_group(T2).order == limit_group(T).order


def test_bundle_round_trip():
    d = json.loads((DATA / "3cycle_inverse.bundle.json").read_text())
    g = formats.load_bundle(d)
    assert formats.dumps(formats.bundle_to_json(g)) == formats.dumps(d)


# -- command line ----------------------------------------------------------

def test_aut_command(capsys):
    code, out, _ = run(capsys, "aut", DATA / "3cycle.struct")
    d = json.loads(out)
    assert code == 0 and d["order"] == 3
    assert all(law["pass"] for law in d["certificate"]["laws"])
    assert "seconds" not in d["certificate"]


def test_output_is_deterministic(capsys):
    outs = {run(capsys, "--seed", 3, "m2g", DATA / "square.struct")[1] for _ in range(2)}
    assert len(outs) == 1


def test_timing_flag(capsys):
    _, out, _ = run(capsys, "--timing", "aut", DATA / "3cycle.struct")
    assert "seconds" in json.loads(out)["certificate"]


def test_pretty_table(capsys):
    code, out, _ = run(capsys, "--pretty", "aut", DATA / "3cycle.struct")
    rows = dict(line.split(None, 1) for line in out.splitlines())
    assert code == 0 and rows["order"] == "3" and rows["generators[0].V.a"] == "b"
    assert render_table({"a": {"b": [1, 2]}, "c": None}) == "a.b  1, 2\nc    \n"


def test_g2m_then_aut(capsys, tmp_path):
    code, out, _ = run(capsys, "g2m", "--group", "S3")
    assert code == 0
    f = tmp_path / "s3.json"
    f.write_text(out)
    code, out, _ = run(capsys, "aut", f)
    assert json.loads(out)["order"] == 6


def test_g2m_from_group_file(capsys, tmp_path):
    f = tmp_path / "g.json"
    f.write_text(formats.dumps(formats.group_to_json(group_catalog()["C4"])))
    code, out, _ = run(capsys, "g2m", f)
    g = tmp_path / "m.json"
    g.write_text(out)
    assert json.loads(run(capsys, "aut", g)[1])["order"] == 4


def test_m2g_command(capsys):
    code, out, _ = run(capsys, "m2g", DATA / "square.struct")
    d = json.loads(out)
    assert code == 0 and d["order"] == 8 and d["degree"] == 4


def test_iso_command(capsys, tmp_path):
    a = tmp_path / "a.struct"
    a.write_text("sort V x y z\nrel E(V,V) x y | y z | z x\n")
    code, out, _ = run(capsys, "iso", DATA / "3cycle.struct", a)
    assert code == 0 and json.loads(out)["isomorphic"]
    code, out, _ = run(capsys, "iso", DATA / "3cycle.struct", DATA / "square.struct")
    assert code == 0 and not json.loads(out)["isomorphic"]


def test_interp_check(capsys):
    code, out, _ = run(capsys, "interp", "check", DATA / "3cycle_inverse.bundle.json")
    d = json.loads(out)
    assert code == 0 and d["premorphism"] and d["isomorphism"]


def test_galois_commands(capsys):
    code, out, _ = run(capsys, "galois", "subgroups", DATA / "square.struct")
    d = json.loads(out)
    assert code == 0 and d["autOrder"] == 8 and len(d["subgroups"]) == 10
    code, out, _ = run(capsys, "galois", "exact", DATA / "square_opposite.json")
    d = json.loads(out)
    assert code == 0 and d["kernelOrder"] * d["quotientOrder"] == d["groupOrder"]
    code, out, _ = run(capsys, "galois", "section", DATA / "square_opposite.json")
    assert code == 0 and json.loads(out)["split"]


def test_galois_needs_quotient(capsys):
    code, _, err = run(capsys, "galois", "exact", DATA / "square.struct")
    assert code == 2 and "quotient" in err


def test_tower_commands(capsys):
    code, out, _ = run(capsys, "tower", "limit", DATA / "z2tower.json")
    assert code == 0 and json.loads(out)["gammaOrder"] == 8
    code, out, _ = run(capsys, "tower", "build", DATA / "mixed_tower.json")
    assert code == 0
    code, out, _ = run(capsys, "tower", "pi1", DATA / "mixed_tower.json")
    assert code == 0 and json.loads(out)["pi1Order"] == 3
    code, out, _ = run(capsys, "tower", "sharp", DATA / "mixed_tower_twisted.json")
    d = json.loads(out)
    assert code == 0 and d["index"] == 2 and d["obstruction"] is not None
    code, out, _ = run(capsys, "tower", "section", DATA / "mixed_tower_twisted.json")
    assert code == 0 and json.loads(out)["section"] is None
    code, out, _ = run(capsys, "tower", "section", DATA / "mixed_tower.json")
    assert code == 0 and json.loads(out)["section"] is not None
    code, out, _ = run(capsys, "tower", "fiber", DATA / "z2tower.json")
    assert code == 0 and "relations" in json.loads(out)["forget"]


def test_gen_commands(capsys):
    code, out, _ = run(capsys, "gen", "field", 2, 3)
    assert code == 0 and len(json.loads(out)["sorts"]["F"]) == 8
    code, out, _ = run(capsys, "gen", "tower", 3, 2)
    assert code == 0 and len(json.loads(out)["covers"]) == 3
    code, out, _ = run(capsys, "gen", "catalog")
    assert json.loads(out)["Q8"]["order"] == 8


@pytest.mark.parametrize("argv", [
    ["aut", "/nonexistent/file.struct"],
    ["gen", "field", 4, 2],
    ["gen", "field", 2, 12],
    ["g2m", "--group", "Nope"],
    ["acceptance", "nosuch"],
])
def test_bad_input_exits_2(capsys, argv):
    code, out, err = run(capsys, *argv)
    assert code == 2 and out == "" and err.startswith("finitary: error:")


def test_bad_text_file_exits_2(capsys, tmp_path):
    f = tmp_path / "bad.struct"
    f.write_text("sort V a\nrel E(V,V) a z\n")
    code, _, err = run(capsys, "aut", f)
    assert code == 2 and err


def test_broken_tower_table_exits_2(capsys, tmp_path):
    d = formats.tower_to_json(cyclic_tower(2, 3))
    d["distinguished"] = [e for e in formats.tower_to_json(mixed_tower(True))["distinguished"]][:1]
    f = tmp_path / "t.json"
    f.write_text(json.dumps(d))
    code, _, err = run(capsys, "tower", "build", f)
    assert code == 2 and err


def test_usage_error_exits_2(capsys):
    with pytest.raises(SystemExit) as e:
        main(["aut"])
    assert e.value.code == 2


def test_acceptance_list(capsys):
    code, out, _ = run(capsys, "acceptance", "--list")
    assert code == 0 and [c["criterion"] for c in json.loads(out)["criteria"]] == list(range(1, 9))


def test_acceptance_single_suite(capsys):
    code, out, err = run(capsys, "acceptance", "sharp", "-v")
    d = json.loads(out)
    assert code == 0 and d["passed"] and err.startswith("[PASS] 7. sharp")
