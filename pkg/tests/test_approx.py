import random
from fractions import Fraction

import pytest

from nfwitness.approx import lift_residue, solve_congruences, split_idempotent, weak_approx
from nfwitness.ideals import (
    factor_ideal,
    places_above,
    prime_places_up_to,
    real_places,
    reduce_elem,
    residue_field,
    uniformizer,
    valuation,
)
from nfwitness.qfield import FieldCtx, integral_elements

Q = FieldCtx.rational()
QI = FieldCtx.quadratic(-1)
Q5 = FieldCtx.quadratic(5)
QM5 = FieldCtx.quadratic(-5)
Q2 = FieldCtx.quadratic(2)


def place_2_plus_i():
    return next(pl for pl in places_above(QI, 5) if pl.r == 3)


def test_spec_example_rational():
    v3 = places_above(Q, 3)[0]
    v5 = places_above(Q, 5)[0]
    oo = real_places(Q)[0]
    x = weak_approx(Q, [("val", v3, 1), ("val", v5, 0), ("res", v5, 2), ("sign", oo, 1)])
    # self-certification oracle (direct valuation/reduction/sign):
    assert valuation(x, v3) == 1
    assert valuation(x, v5) == 0
    assert reduce_elem(x, v5).value == 2
    assert x.embedding_sign(1) == 1
    # the natural CRT answer; frozen for determinism
    assert x == Q.elem(12)


def test_empty_constraints():
    assert weak_approx(Q, []) == Q.one()
    assert weak_approx(QI, []) == QI.one()


def test_spec_example_qi_strong():
    pl = place_2_plus_i()
    x = weak_approx(QI, [("val", pl, 1)], integral_outside=True)
    assert valuation(x, pl) == 1
    assert x.is_integral()
    for place, e in factor_ideal(x):
        assert e >= 0
    # frozen deterministic output
    assert x == QI.elem(15)


def test_split_idempotent():
    pl = place_2_plus_i()
    sister = next(q for q in places_above(QI, 5) if q != pl)
    lam = split_idempotent(pl, 3)
    assert valuation(lam - 1, pl) >= 3
    assert valuation(lam, sister) >= 3


def test_negative_valuation_target():
    v2 = places_above(Q, 2)[0]
    x = weak_approx(Q, [("val", v2, -2)])
    assert valuation(x, v2) == -2


def test_negative_valuation_split_strong():
    pl = place_2_plus_i()
    sister = next(q for q in places_above(QI, 5) if q != pl)
    x = weak_approx(QI, [("val", pl, -1)], integral_outside=True)
    assert valuation(x, pl) == -1
    assert valuation(x, sister) >= 0
    for place, e in factor_ideal(x):
        assert e >= 0 or place == pl


def test_signs_all_quadrants():
    oop, oom = real_places(Q5)
    for s1 in (1, -1):
        for s2 in (1, -1):
            x = weak_approx(Q5, [("sign", oop, s1), ("sign", oom, s2)])
            assert x.embedding_sign(1) == s1 and x.embedding_sign(-1) == s2


def test_congruence_form():
    pl3 = places_above(QI, 3)[0]
    c = QI.elem(1, 1)
    x = weak_approx(QI, [("cong", pl3, c, 2)])
    diff = x - c
    assert (not diff) or valuation(diff, pl3) >= 2


def test_solve_congruences_split_pair():
    p1, p2 = places_above(QI, 5)
    x = solve_congruences(QI, [(p1, QI.elem(2), 2), (p2, QI.elem(0, 1), 1)])
    assert valuation(x - 2, p1) >= 2
    assert valuation(x - QI.elem(0, 1), p2) >= 1


def test_residue_lift_inert():
    pl = places_above(QI, 3)[0]
    r = (2, 1)  # 2 + w-bar in F_9
    x = weak_approx(QI, [("res", pl, r)])
    assert reduce_elem(x, pl).value == r
    assert valuation(x, pl) == 0


def test_val_plus_residue_combo():
    v5 = places_above(Q, 5)[0]
    x = weak_approx(Q, [("val", v5, 2), ("res", v5, 3)])
    assert valuation(x, v5) == 2
    assert reduce_elem(x * Fraction(1, 25), v5).value == 3


@pytest.mark.parametrize("field", [Q, QI, QM5, Q5, Q2])
def test_random_constraint_systems(field):
    rng = random.Random(field.disc + 100)
    places = prime_places_up_to(field, 30)
    reals = real_places(field)
    for trial in range(40):
        chosen = rng.sample(places, k=min(len(places), rng.randint(1, 3)))
        constraints = []
        for pl in chosen:
            mode = rng.choice(["val", "res", "valres", "cong"])
            if mode == "val":
                constraints.append(("val", pl, rng.randint(-2, 3)))
            elif mode == "res":
                F_elems = [e.value for e in residue_field(pl).elements() if e]
                constraints.append(("res", pl, rng.choice(F_elems)))
            elif mode == "valres":
                constraints.append(("val", pl, rng.randint(0, 2)))
                nonzero = [v for v in range(1, pl.p)]
                constraints.append(("res", pl, rng.choice(nonzero) if pl.f == 1 else (rng.choice(nonzero), 0)))
            else:
                c = field.elem(rng.randint(0, 8), rng.randint(0, 8) if not field.is_rational else 0)
                constraints.append(("cong", pl, c, rng.randint(1, 3)))
        for pl in reals:
            if rng.random() < 0.5:
                constraints.append(("sign", pl, rng.choice([1, -1])))
        strong = rng.random() < 0.5
        x = weak_approx(field, constraints, integral_outside=strong)
        # independent re-check
        listed = {c[1] for c in constraints if c[0] in ("val", "cong")}
        for con in constraints:
            if con[0] == "val":
                assert valuation(x, con[1]) == con[2]
            elif con[0] == "res":
                shift = next((c[2] for c in constraints if c[0] == "val" and c[1] == con[1]), 0)
                y = x * uniformizer(con[1]) ** (-shift)
                assert reduce_elem(y, con[1]) == reduce_elem(lift_residue(con[1], con[2]), con[1])
            elif con[0] == "cong":
                diff = x - con[2]
                assert (not diff) or valuation(diff, con[1]) >= con[3]
            else:
                assert x.embedding_sign(con[1].selector) == con[2]
        if strong:
            for pl, e in factor_ideal(x):
                assert e >= 0 or pl in listed


def test_determinism():
    pl = place_2_plus_i()
    runs = {str(weak_approx(QI, [("val", pl, 1), ("res", places_above(QI, 3)[0], (1, 1))], integral_outside=True)) for _ in range(3)}
    assert len(runs) == 1
