import json

import pytest

from ramitree.engine import Budget, GroupSnapshot, CapExceeded
from ramitree.omega import evaluate_word, parse_omega
from ramitree.ramify import (
    GenTuple,
    build_tuples,
    candidates,
    check_disjoint_certified,
    check_disjoint_exact,
    check_spherical,
    involution_of,
    preferred_family,
    verify_theorem,
)
from ramitree.treeauto import rooted_swap


def omega(seq):
    return parse_omega(seq)


def test_family_selection():
    T1, T2 = build_tuples(omega("(012)"), 7)
    assert T1.family == "i0-fallback"
    assert T1.words == ("a", "d", "cad", "abad")
    assert T2.words == ("ac", "c", "bac", "abac")
    T1, _ = build_tuples(omega("1(02)"), 6)
    assert T1.words == ("a", "b", "cab", "adab")
    # b-role is the letter killed by omega_1 = 2, d-role by the tail symbol 0
    T1, _ = build_tuples(omega("2(0)"), 4)
    assert T1.family == "sigma-constant"
    assert T1.words == ("a", "b", "c", "ad")


def test_sigma_constant_role_letters_follow_sequence():
    T1, _ = build_tuples(omega("1(2)"), 4)
    assert T1.words == ("a", "c", "d", "ab")
    assert preferred_family(omega("0(1)")) == "sigma-constant"


def test_candidates_cover_all_choices():
    cands = candidates(omega("(012)"))
    assert len(cands) == 18
    assert cands[0][0] == "i0-fallback"
    assert len({(f, tuple(sorted(m.items()))) for f, m in cands}) == 18


def test_identity_entry_rejected():
    with pytest.raises(ValueError, match="identity"):
        GenTuple.from_words(omega("(012)"), 4, ["a", "aa", "a", "a"])


def test_conjugate_substitutions():
    w = omega("1(02)")
    for n in (4, 6):
        # cab is the c-conjugate of ad and dac the d-conjugate of ab
        assert evaluate_word(w, "cab", n) == evaluate_word(w, "ad", n).conjugate(evaluate_word(w, "c", n))
        assert evaluate_word(w, "dac", n) == evaluate_word(w, "ab", n).conjugate(evaluate_word(w, "d", n))


@pytest.mark.parametrize("seq, n", [("2(0)", 4), ("1(2)", 5), ("1(02)", 6), ("(012)", 7), ("2(01)", 6)])
def test_theorem_tuples_are_spherical(seq, n):
    for T in build_tuples(omega(seq), n):
        report = check_spherical(T, omega(seq), n)
        assert report["ok"], report["failing"]
        assert report["product_one"] and report["generates"]
        # the listed product is the square of the listed final entry
        assert not report["literal_product_is_identity"]
        assert report["literal_product_is_final_squared"]
        assert all(wit["ok"] for wit in report["witnesses"])


def test_corrupted_tuple_fails_spherical():
    w = omega("2(0)")
    T1, _ = build_tuples(w, 4)
    # replace the final entry by a neighbour of the identity: one generator
    bad = GenTuple.from_words(w, 4, [*T1.words[:3], "d"], name="T1", family=T1.family, witnesses=T1.witnesses)
    report = check_spherical(bad, w, 4)
    assert not report["ok"]
    assert report["failing"]


def test_involution_of():
    assert involution_of(rooted_swap(4)) == rooted_swap(4)
    g = GroupSnapshot.grigorchuk(omega("(012)"), 5)
    ab = g.word("ab")
    assert involution_of(ab) == ab**8
    with pytest.raises(ValueError):
        involution_of(ab**16)


def test_self_overlap():
    w = omega("2(0)")
    T1, _ = build_tuples(w, 4)
    g = GroupSnapshot.grigorchuk(w, 4)
    result = check_disjoint_exact(T1, T1, g)
    assert result.verdict == "OVERLAP"
    assert check_disjoint_certified(T1, T1, g).verdict == "OVERLAP"


@pytest.mark.parametrize("n", [4, 5])
def test_sigma_constant_exact_disjoint(n):
    w = omega("2(0)")
    T1, T2 = build_tuples(w, n)
    g = GroupSnapshot.grigorchuk(w, n)
    result = check_disjoint_exact(T1, T2, g)
    assert result.verdict == "DISJOINT"
    assert all(p["evidence"]["kind"] == "exact" for p in result.pairs)


@pytest.mark.parametrize("seq", ["2(0)", "21(0)", "(0112)", "2(01)"])
def test_exact_and_certified_agree(seq):
    w = omega(seq)
    g = GroupSnapshot.grigorchuk(w, 4)
    T1, T2 = build_tuples(w, 4)
    exact = check_disjoint_exact(T1, T2, g)
    cert = check_disjoint_certified(T1, T2, g)
    assert [p["verdict"] for p in exact.pairs] == [p["verdict"] for p in cert.pairs]


def test_exact_mode_cap():
    w = omega("(012)")
    g = GroupSnapshot.grigorchuk(w, 4)
    T1, T2 = build_tuples(w, 4)
    with pytest.raises(CapExceeded):
        check_disjoint_exact(T1, T2, g, Budget(max_elements=50))


def test_pair_certificates_name_their_rung():
    w = omega("(012)")
    g = GroupSnapshot.grigorchuk(w, 4)
    T1, T2 = build_tuples(w, 4)
    result = check_disjoint_certified(T1, T2, g)
    pair = next(p for p in result.pairs if (p["x"], p["y"]) == ("a", "c"))
    assert pair["verdict"] == "disjoint" and pair["evidence"]["test"] == "level"
    assert len(result.pairs) == 16


def test_verify_pipeline_sigma_constant():
    report = verify_theorem(omega("2(0)"), 4)
    assert report["verdict"] == "PASS" and report["mode"] == "exact"
    assert report["theorem_claim"] == "confirmed"
    assert report["exact"]["group_order"] == 512
    assert report["elapsed_ms"] is None
    json.dumps(report)


def test_verify_below_threshold():
    report = verify_theorem(omega("(012)"), 3)
    assert report["threshold_m"] == 7
    assert report["theorem_claim"] == "below-threshold"


def test_verify_auto_falls_back_to_certified():
    report = verify_theorem(omega("2(01)"), 6, budget=Budget(max_elements=5000))
    assert report["mode"] == "certified"
    assert report["caps_hit"][0]["stage"] == "enumerate"
    assert report["verdict"] == "PASS"


def test_verify_rejects_bad_arguments():
    with pytest.raises(ValueError):
        verify_theorem(omega("2(0)"), 4, mode="fast")
    with pytest.raises(ValueError):
        verify_theorem(omega("2(0)"), 1)


def test_sigma_is_conjugation_invariant():
    from ramitree.ramify import _cyclic_classes

    w = omega("21(0)")
    g = GroupSnapshot.grigorchuk(w, 4)
    T1, _ = build_tuples(w, 4)
    h = g.word("abcab")
    plain = set().union(*(_cyclic_classes(x, g.gens, Budget()) for x in T1.entries))
    moved = set().union(*(_cyclic_classes(x.conjugate(h), g.gens, Budget()) for x in T1.entries))
    assert plain == moved
