import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfwitness.errors import DomainError, InvariantFailure, SearchExhausted
from nfwitness.ideals import Place, all_dyadic_places, parse_place, real_places
from nfwitness.prescribe import (
    Certificate,
    ConditionReport,
    Prescription,
    check_conditions,
    local_class_representatives,
    solve,
)
from nfwitness.qfield import FieldCtx, enumerate_by_height
from nfwitness.symbols import delta_set, hilbert_symbol, is_local_square

Q = FieldCtx.rational()
QI = FieldCtx.quadratic(-1)
QM5 = FieldCtx.quadratic(-5)
Q5 = FieldCtx.quadratic(5)
TEST_FIELDS = (Q, QI, QM5, Q5)

P2 = parse_place(Q, "2")
P3 = parse_place(Q, "3")
P5 = parse_place(Q, "5")
P7 = parse_place(Q, "7")
OO = parse_place(Q, "oo")


def oracle_prescription(field, family, x0):
    """The prescription whose -1 set is exactly the -1 set of (a_i, x0)."""
    flips = {(i, w) for i, a in enumerate(family, start=1) for w in delta_set(a, x0)}
    return Prescription(field, tuple(family), frozenset(flips))


# ---- local square-class representatives -------------------------------------------

def test_reps_at_5_match_the_classic_values():
    assert [str(c) for c in local_class_representatives(P5)] == ["1", "2", "5", "10"]


def test_reps_at_2_match_the_classic_values():
    reps = local_class_representatives(P2)
    assert [str(c) for c in reps] == ["1", "-1", "5", "-5", "2", "-2", "10", "-10"]


def test_reps_at_real_and_complex_places():
    assert [str(c) for c in local_class_representatives(OO)] == ["1", "-1"]
    cx = Place.complex_place(QI)
    assert [str(c) for c in local_class_representatives(cx)] == ["1"]


@pytest.mark.parametrize("field", (QI, QM5, Q5))
def test_reps_counts_at_dyadic_places(field):
    for pl in all_dyadic_places(field):
        reps = local_class_representatives(pl)
        assert len(reps) == 2 ** (pl.e * pl.f + 2)


@pytest.mark.parametrize("place", (P2, P3, P7))
def test_reps_pairwise_inequivalent_by_direct_route(place):
    reps = local_class_representatives(place)
    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            assert not is_local_square(reps[i] / reps[j], place)


def test_reps_pairwise_inequivalent_quadratic_dyadic():
    pl = all_dyadic_places(QM5)[0]
    reps = local_class_representatives(pl)
    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            assert not is_local_square(reps[i] / reps[j], pl)


@pytest.mark.parametrize("place", (P2, P5))
def test_reps_exhaust_small_rationals(place):
    reps = local_class_representatives(place)
    for n in range(1, 30):
        x = Q.elem(n) if n % 2 else Q.elem(-(n // 2))
        if not x:
            continue
        hits = [r for r in reps if is_local_square(x / r, place)]
        assert len(hits) == 1


# ---- prescription construction and text form --------------------------------------

def test_make_drops_plus_one_entries():
    pres = Prescription.make(Q, [Q.elem(17)], {(1, P2): 1, (1, OO): -1})
    assert pres.flips == frozenset({(1, OO)})
    assert pres.target(1, P2) == 1
    assert pres.target(1, OO) == -1
    assert pres.column(OO) == (-1,)


def test_constructor_rejects_bad_input():
    with pytest.raises(DomainError):
        Prescription.make(Q, [Q.elem(0)], {})
    with pytest.raises(DomainError):
        Prescription.make(Q, [Q.elem(3)], {(2, P2): -1})
    with pytest.raises(DomainError):
        Prescription.make(Q, [Q.elem(3)], {(1, parse_place(QI, "3")): -1})
    with pytest.raises(DomainError):
        Prescription.make(Q, [Q.elem(3)], {(1, P2): 2})


def test_flipped_toggles_one_target():
    pres = Prescription.make(Q, [Q.elem(17)], {(1, P2): -1, (1, OO): -1})
    assert pres.flipped(1, P2).flips == frozenset({(1, OO)})
    assert pres.flipped(1, P3).flips == frozenset({(1, P2), (1, OO), (1, P3)})
    assert pres.flipped(1, P3).flipped(1, P3) == pres


def test_flagged_places_sorted():
    pres = Prescription.make(Q, [Q.elem(17), Q.elem(-2)],
                             {(1, OO): -1, (2, P7): -1, (1, P2): -1, (1, P7): -1})
    assert [str(pl) for pl in pres.flagged_places()] == ["2", "7", "oo"]


def test_text_round_trip_rational():
    pres = Prescription.make(Q, [Q.elem(17), Q.elem(-2)], {(1, P2): -1, (1, OO): -1})
    text = pres.to_text()
    assert "field Q" in text
    assert "a_1 := 17" in text
    assert "(1, 2) = -1" in text
    assert Prescription.from_text(text) == pres


def test_text_round_trip_quadratic():
    w2 = all_dyadic_places(QM5)[0]
    w3 = parse_place(QM5, "(3,-1+w)")
    pres = Prescription.make(QM5, [QM5.elem(1, 1), QM5.elem(-7)], {(1, w2): -1, (1, w3): -1})
    again = Prescription.from_text(pres.to_text())
    assert again == pres


def test_from_text_rejects_malformed():
    with pytest.raises(DomainError):
        Prescription.from_text("a_1 := 17\n")
    with pytest.raises(DomainError):
        Prescription.from_text("field Q\na_2 := 17\n")
    with pytest.raises(DomainError):
        Prescription.from_text("field Q\na_1 := 17\nnonsense\n")


# ---- condition checking ------------------------------------------------------------

def test_check_ok_with_matching_witnesses():
    pres = oracle_prescription(Q, (Q.elem(17), Q.elem(-2), Q.elem(15)), Q.elem(-30))
    report = check_conditions(pres)
    assert report.ok and not report.violations
    assert set(report.witnesses) == set(pres.flagged_places())
    for pl, c in report.witnesses.items():
        for i, a in enumerate(pres.family, start=1):
            assert hilbert_symbol(a, c, pl) == pres.target(i, pl)


def test_check_parity_violation_names_the_row():
    # -1 is a square at 5 while 3 is not, so the flipped column stays locally
    # solvable and only the parity condition fires.
    pres = Prescription.make(Q, [Q.elem(-1), Q.elem(3)], {(1, P2): -1, (1, OO): -1})
    assert check_conditions(pres).ok
    bad = pres.flipped(2, P5)
    report = check_conditions(bad)
    assert not report.ok
    assert report.violated_conditions() == (2,)
    assert any("row 2" in msg for c, msg in report.violations if c == 2)


def test_check_local_violation_names_the_place():
    pres = Prescription.make(Q, [Q.elem(4)], {(1, P3): -1, (1, P5): -1})
    report = check_conditions(pres)
    assert not report.ok
    assert report.violated_conditions() == (3,)
    assert {msg.split(":")[0] for _, msg in report.violations} == {"place 3", "place 5"}


def test_check_rejects_minus_one_at_complex_place():
    cx = Place.complex_place(QI)
    w3 = parse_place(QI, "3")
    pres = Prescription.make(QI, [QI.elem(0, 1)], {(1, cx): -1, (1, w3): -1})
    report = check_conditions(pres)
    assert not report.ok
    assert any(c == 3 and "complex" in msg for c, msg in report.violations)


def test_check_structural_violation_on_tampered_object():
    pres = object.__new__(Prescription)
    object.__setattr__(pres, "field", Q)
    object.__setattr__(pres, "family", (Q.elem(0),))
    object.__setattr__(pres, "flips", frozenset())
    report = check_conditions(pres)
    assert not report.ok
    assert report.violated_conditions() == (1,)


def test_conflicting_columns_are_rejected():
    # 3 and -2 are both non-squares mod 5, so their symbols at 5 always agree;
    # asking for the same sign there works, opposite signs cannot.
    agree = Prescription.make(Q, [Q.elem(3), Q.elem(-2)],
                              {(1, P5): -1, (1, P2): -1, (2, P5): -1, (2, P2): -1})
    oppose = Prescription.make(Q, [Q.elem(3), Q.elem(-2)],
                               {(1, P5): -1, (1, P2): -1, (2, P2): -1, (2, P7): -1})
    assert check_conditions(agree).ok
    report = check_conditions(oppose)
    assert not report.ok
    assert any(c == 3 and msg.startswith("place 5") for c, msg in report.violations)


# ---- solving ------------------------------------------------------------------------

def test_solve_classic_minus_one_at_two_and_infinity():
    pres = Prescription.make(Q, [Q.elem(-1)], {(1, P2): -1, (1, OO): -1})
    cert = solve(pres)
    assert cert.verify()
    assert {str(w) for w in delta_set(Q.elem(-1), cert.x)} == {"2", "oo"}


def test_solve_all_plus_returns_one():
    pres = Prescription.make(Q, [Q.elem(17), Q.elem(-2)], {})
    cert = solve(pres)
    assert cert.x == Q.one()
    assert cert.verify()
    assert all(s == 1 for s in cert.table.values())


def test_solve_is_deterministic():
    pres = oracle_prescription(Q, (Q.elem(17), Q.elem(-2), Q.elem(15)), Q.elem(-30))
    c1, c2 = solve(pres), solve(pres)
    assert c1.x == c2.x
    assert c1.table == c2.table


def test_solve_matches_oracle_minus_set_exactly():
    family = (Q.elem(17), Q.elem(-2), Q.elem(15))
    pres = oracle_prescription(Q, family, Q.elem(-30))
    cert = solve(pres)
    assert cert.verify()
    for i, a in enumerate(family, start=1):
        got = {w for w in delta_set(a, cert.x)}
        want = {w for j, w in pres.flips if j == i}
        assert got == want


@pytest.mark.parametrize("field,seed", ((QI, 3), (QM5, 5), (Q5, 11)))
def test_solve_quadratic_oracle_prescriptions(field, seed):
    rng = random.Random(seed)
    pool = [z for z in enumerate_by_height(field, 5) if z]
    solved = 0
    while solved < 2:
        family = tuple(rng.choice(pool) for _ in range(rng.randint(1, 2)))
        pres = oracle_prescription(field, family, rng.choice(pool))
        if not pres.flips or len(pres.flagged_places()) > 4:
            continue
        cert = solve(pres)
        assert cert.verify()
        solved += 1


def test_solve_refuses_unsolvable_with_named_condition():
    pres = Prescription.make(Q, [Q.elem(17)], {(1, P2): -1})
    with pytest.raises(DomainError, match=r"\(2\) row 1"):
        solve(pres)
    square_row = Prescription.make(Q, [Q.elem(4)], {(1, P3): -1, (1, P5): -1})
    with pytest.raises(DomainError, match=r"\(3\) place 3"):
        solve(square_row)


def test_solve_exhaustion_carries_attempt_log():
    pres = Prescription.make(Q, [Q.elem(-1)], {(1, P2): -1, (1, OO): -1})
    with pytest.raises(SearchExhausted, match="0 attempts"):
        solve(pres, max_attempts=0)


def test_certificate_table_covers_relevant_places():
    pres = oracle_prescription(Q, (Q.elem(17), Q.elem(-2)), Q.elem(-30))
    cert = solve(pres)
    names = {str(w) for w in cert.places()}
    assert {"2", "17", "oo"} <= names


def test_certificate_text_round_trip():
    pres = oracle_prescription(Q, (Q.elem(17), Q.elem(-2)), Q.elem(-30))
    cert = solve(pres)
    again = Certificate.from_text(cert.to_text())
    assert again.x == cert.x
    assert again.table == cert.table
    assert again.prescription == pres


def test_certificate_text_tamper_is_caught():
    pres = Prescription.make(Q, [Q.elem(-1)], {(1, P2): -1, (1, OO): -1})
    cert = solve(pres)
    text = cert.to_text()
    forged = text.replace("sym (1, 2) = -1", "sym (1, 2) = +1")
    with pytest.raises(InvariantFailure):
        Certificate.from_text(forged)
    forged_x = text.replace(f"x := {cert.x}", "x := 3")
    with pytest.raises(InvariantFailure):
        Certificate.from_text(forged_x)


def test_verify_rejects_wrong_sign_table():
    pres = Prescription.make(Q, [Q.elem(-1)], {(1, P2): -1, (1, OO): -1})
    cert = solve(pres)
    bad_table = dict(cert.table)
    key = next(iter(bad_table))
    bad_table[key] = -bad_table[key]
    with pytest.raises(InvariantFailure):
        Certificate(pres, cert.x, bad_table, ()).verify()


# ---- randomized soundness ----------------------------------------------------------

@settings(max_examples=12, deadline=None)
@given(st.data())
def test_random_oracle_prescriptions_solve_and_mutants_fail(data):
    pool = [Q.elem(n) for n in range(-12, 13) if n]
    family = tuple(data.draw(st.sampled_from(pool))
                   for _ in range(data.draw(st.integers(1, 3))))
    x0 = data.draw(st.sampled_from(pool))
    pres = oracle_prescription(Q, family, x0)
    if len(pres.flagged_places()) > 4:
        return
    cert = solve(pres)
    assert cert.verify()
    if pres.flips:
        i, pl = sorted(pres.flips, key=lambda k: (k[0], k[1].sort_key()))[0]
        mutant = pres.flipped(i, pl)
        report = check_conditions(mutant)
        assert not report.ok
        assert 2 in report.violated_conditions()
