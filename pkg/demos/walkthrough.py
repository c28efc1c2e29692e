"""A tour of the package on small examples.  Run: python demos/walkthrough.py"""

from finitary.autcalc import aut, group_to_structure, reconstruction_check
from finitary.galois import coset_imaginary, exact_sequence, normal_iff_zero_definable
from finitary.instances import (FiniteField, exact_pairs, group_catalog, mixed_tower,
                                nonsplit_pair)
from finitary.perm import all_subgroups, find_sections, iso_groups
from finitary.structure import SortedUniverse, dcl
from finitary.tower import fiber_structure, limit_group, pi1_et, section_demo


def main():
    square = SortedUniverse.build({"V": list("abcd")}, {"E": (["V", "V"], [
        (x, y) for x, y in ["ab", "bc", "cd", "da"]] + [(y, x) for x, y in ["ab", "bc", "cd", "da"]])})
    A = aut(square)
    print(f"square: |Aut| = {A.order}, orbit lengths {A.orbit_lengths}")

    Q8 = group_catalog()["Q8"]
    M = group_to_structure(Q8)
    print(f"Q8 as a structure: {M.size} points, Aut ~= Q8: {iso_groups(aut(M).group, Q8) is not None}")
    print(f"reconstruction of the square: {reconstruction_check(square).ok}")

    print("subgroups of Aut(square) and their coset imaginaries:")
    for H in all_subgroups(A.group):
        normal, fixed = normal_iff_zero_definable(coset_imaginary(square, H))
        print(f"  |H| = {H.order}: normal {normal}, anchor orbit fixed pointwise {fixed}")

    for name, frag, q in exact_pairs()[:2] + [("directed square / opposite",) + nonsplit_pair()]:
        seq = exact_sequence(frag, q)
        print(f"{name}: 1 -> {seq.kernel.order} -> {seq.group.order} -> {seq.quotient_group.order}"
              f" -> 1, sections: {len(find_sections(seq.restriction))}")

    F = FiniteField(3, 2)
    FM = F.structure()
    print(f"GF(9): |Aut| = {aut(FM).order}, dcl of the empty set = "
          f"{sorted(p.elem for p in dcl(FM))}")

    for twisted in (False, True):
        T = mixed_tower(twisted)
        P = pi1_et(fiber_structure(T))
        d = section_demo(T)
        print(f"mixed tower{' (twisted)' if twisted else ''}: |Gamma| = {limit_group(T).order}, "
              f"|pi1| = {P.order}; {d.message}")


if __name__ == "__main__":
    main()
