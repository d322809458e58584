"""Weak and strong approximation: global elements with prescribed local behavior.

The workhorse is ``solve_congruences``: finitely many conditions
x = c mod place^k, real-place sign conditions, and an optional
"integral outside" guarantee.  The public ``weak_approx`` compiles the
(valuation / residue / sign) constraint language onto it, handling
negative valuation targets by a rational denominator.

Everything is deterministic: per-prime targets combine by CRT on ideal
powers (split places through an explicit idempotent), the canonical
representative is box-reduced against the product-ideal lattice, and sign
repair walks expanding lattice shells in a fixed order.  The result is
re-verified against every original constraint before it is returned.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Iterator, List, Optional, Sequence, Tuple

from nfwitness.gf import GFElem
from nfwitness.ideals import (
    Ideal,
    Place,
    factor_ideal,
    hensel_root,
    local_ring,
    places_above,
    reduce_elem,
    uniformizer,
    valuation,
)
from nfwitness.qfield import FieldCtx, NfElem

__all__ = ["weak_approx", "solve_congruences", "lift_residue", "split_idempotent"]

_SHELL_BOUND = 400


def lift_residue(place: Place, r) -> NfElem:
    """An integral element reducing to r at the place (r: GFElem, int or pair)."""
    f = place.field
    if isinstance(r, GFElem):
        coeffs = r.coeffs
    elif isinstance(r, tuple):
        coeffs = r
    else:
        coeffs = (int(r),) + (0,) * (place.f - 1)
    assert len(coeffs) == place.f
    if place.f == 1:
        x = f.elem(coeffs[0])
    else:
        x = f.elem(coeffs[0], coeffs[1])
    return x


def split_idempotent(place: Place, precision: int) -> NfElem:
    """An integral element = 1 mod place^precision and = 0 mod sister^precision."""
    assert place.split_type == "split"
    p, K = place.p, precision
    t = place.field.omega_trace
    rK = hensel_root(place, K)
    rbar = (t - rK) % p**K  # the root at the sister place
    gbar = place.field.omega() - rbar
    u = (rK - rbar) % p**K  # residue of gbar at this place; a unit mod p
    lam = gbar * pow(u, -1, p**K)
    return lam


def _crt_ints(pairs: Sequence[Tuple[int, int]]) -> Tuple[int, int]:
    """Combine (residue, modulus) pairs with pairwise coprime moduli."""
    r, m = 0, 1
    for r2, m2 in pairs:
        g = math.gcd(m, m2)
        assert g == 1
        u = pow(m, -1, m2)
        r = r + m * ((r2 - r) * u % m2)
        m *= m2
    return r % m, m


def _shells(rank: int, bound: int) -> Iterator[Tuple[int, int]]:
    """(0,0), then lattice coordinate pairs in expanding max-norm shells."""
    yield (0, 0)
    for h in range(1, bound + 1):
        if rank == 1:
            yield (h, 0)
            yield (-h, 0)
            continue
        ring = [
            (u, v)
            for u in range(-h, h + 1)
            for v in range(-h, h + 1)
            if max(abs(u), abs(v)) == h
        ]
        # prefer sparse, nonnegative, mostly-rational combinations
        ring.sort(key=lambda t: (abs(t[0]) + abs(t[1]), t[0] < 0, t[1] < 0, abs(t[1]), t))
        yield from ring


def solve_congruences(
    field: FieldCtx,
    congruences: Sequence[Tuple[Place, NfElem, int]],
    signs: Sequence[Tuple[Place, int]] = (),
    forbid_zero: bool = True,
) -> NfElem:
    """An element x with v(x - c) >= k for every (place, c, k), the requested
    real-embedding signs, and integral coordinates.

    Requires distinct finite places, k >= 1 and v(c) >= 0 at each place.
    The output is integral, which also serves the strong-approximation
    ("integral outside") mode.  Deterministic; raises RuntimeError when the
    sign-repair shell search exhausts its bound (which the constraint forms
    used here cannot trigger: the lattice has full rank in the sign space).
    """
    places = [pl for pl, _, _ in congruences]
    assert len(set(places)) == len(places), "duplicate places in congruences"
    assert all(k >= 1 for _, _, k in congruences)
    for pl, s in signs:
        assert pl.is_real and s in (1, -1)

    # group by residue characteristic; produce one target mod p^M per prime
    by_p: dict = {}
    for pl, c, k in congruences:
        by_p.setdefault(pl.p, []).append((pl, c, k))

    crt_pairs0 = []  # (residue, modulus) for the 1-coordinate
    crt_pairs1 = []  # for the w-coordinate
    modulus = Ideal.unit_ideal(field)
    for p, group in sorted(by_p.items()):
        M = max(-(-k // pl.e) for pl, _, k in group)
        if len(group) == 1:
            pl, c, k = group[0]
            rep = local_ring(pl, k).reduce(c)
            target = local_ring(pl, k).elem_of(rep)
            modulus = modulus * pl.ideal() ** k
        else:
            # two split places over p: combine with the idempotent pair
            assert len(group) == 2 and all(pl.split_type == "split" for pl, _, _ in group)
            (pl1, c1, k1), (pl2, c2, k2) = group
            K = max(k1, k2)
            lam1 = split_idempotent(pl1, K)
            c1l = local_ring(pl1, k1).elem_of(local_ring(pl1, k1).reduce(c1))
            c2l = local_ring(pl2, k2).elem_of(local_ring(pl2, k2).reduce(c2))
            target = c1l * lam1 + c2l * (1 - lam1)
            M = K
            modulus = modulus * pl1.ideal() ** k1 * pl2.ideal() ** k2
        pM = p**M
        crt_pairs0.append((int(target.c0) % pM, pM))
        if not field.is_rational:
            crt_pairs1.append((int(target.c1) % pM, pM))

    a0 = _crt_ints(crt_pairs0)[0] if crt_pairs0 else 0
    a1 = _crt_ints(crt_pairs1)[0] if crt_pairs1 else 0
    x0 = field.elem(a0, a1) if not field.is_rational else field.elem(a0)

    # canonical small representative modulo the product-ideal lattice
    assert modulus.den == 1
    A, B, C = modulus.A, modulus.B, modulus.C
    if field.is_rational:
        basis = [field.elem(A)]
        x0 = field.elem(int(x0.c0) % A)
    else:
        basis = [field.elem(A), field.elem(B, C)]
        u0, u1 = int(x0.c0), int(x0.c1)
        j = u1 % C
        u0 -= ((u1 - j) // C) * B
        x0 = field.elem(u0 % A, j)

    # sign repair (and zero avoidance) over expanding lattice shells
    rank = len(basis)
    for (u, v) in _shells(rank, _SHELL_BOUND):
        x = x0 + u * basis[0] + (v * basis[1] if rank == 2 else 0)
        if not x:
            if forbid_zero or signs:
                continue
        elif any(x.embedding_sign(pl.selector) != s for pl, s in signs):
            continue
        break
    else:
        raise RuntimeError("sign-repair shell search exhausted")

    # self-certification
    for pl, c, k in congruences:
        diff = x - c
        assert (not diff) or valuation(diff, pl) >= k, "congruence violated"
    for pl, s in signs:
        assert x.embedding_sign(pl.selector) == s, "sign violated"
    assert x.is_integral()
    return x


def weak_approx(
    field: FieldCtx,
    constraints: Iterable[tuple],
    integral_outside: bool = False,
) -> NfElem:
    """An element satisfying every constraint in the list, exactly.

    Constraint forms:
      ("val", place, n)      -- v(x) = n exactly (n may be negative)
      ("res", place, r)      -- red(x) = r != 0 (implies v(x) = 0)
      ("sign", place, s)     -- real place, s = +1 or -1
      ("cong", place, c, k)  -- v(x - c) >= k
    A "val" and a "res" entry may share a place: then x * g^{-n} has residue
    r for the canonical uniformizer g.  With integral_outside set, x is
    additionally integral at every unlisted finite place.
    """
    vals: dict = {}
    residues: dict = {}
    congs: List[Tuple[Place, NfElem, int]] = []
    signs: List[Tuple[Place, int]] = []
    for con in constraints:
        tag = con[0]
        if tag == "val":
            _, pl, n = con
            assert pl.is_finite
            assert pl not in vals, f"duplicate valuation target at {pl}"
            vals[pl] = n
        elif tag == "res":
            _, pl, r = con
            assert pl.is_finite
            assert pl not in residues, f"duplicate residue target at {pl}"
            lifted = lift_residue(pl, r)
            if not lifted:
                raise ValueError("residue target must be nonzero")
            residues[pl] = lifted
        elif tag == "sign":
            _, pl, s = con
            signs.append((pl, s))
        elif tag == "cong":
            _, pl, c, k = con
            congs.append((pl, c, k))
        else:
            raise ValueError(f"unknown constraint tag {tag!r}")

    # denominator needed for negative valuation targets
    s_p: dict = {}
    for pl, n in vals.items():
        if n < 0:
            s_p[pl.p] = max(s_p.get(pl.p, 0), -(n // pl.e))
    D = 1
    for p, s in sorted(s_p.items()):
        D *= p**s

    # compile sugar into congruences on y = x * D
    compiled: List[Tuple[Place, NfElem, int]] = []
    seen = set()
    for pl in set(vals) | set(residues):
        n = vals.get(pl, 0)
        shift = pl.e * s_p.get(pl.p, 0)
        g = uniformizer(pl)
        c = g**n * residues.get(pl, field.one()) * D
        k = n + 1 + shift
        assert valuation(c, pl) == n + shift
        compiled.append((pl, c, k))
        seen.add(pl)
    for pl, c, k in congs:
        assert pl not in seen, f"congruence and val/res at the same place {pl}"
        seen.add(pl)
        shift = pl.e * s_p.get(pl.p, 0)
        compiled.append((pl, c * D, k + shift))
    if integral_outside:
        # places over scaled primes must not drop below integrality in x = y/D
        for p, s in s_p.items():
            for pl in places_above(field, p):
                if pl not in seen:
                    compiled.append((pl, field.zero(), pl.e * s))

    y = solve_congruences(field, compiled, signs)
    x = y if D == 1 else y * Fraction(1, D)

    # verify the original constraint list through independent predicates
    for pl, n in vals.items():
        assert valuation(x, pl) == n, "valuation target violated"
    for pl, lifted in residues.items():
        got = reduce_elem(x * uniformizer(pl) ** (-vals.get(pl, 0)), pl)
        want = reduce_elem(lifted, pl)
        assert got == want, "residue target violated"
    for pl, s in signs:
        assert x.embedding_sign(pl.selector) == s
    if integral_outside:
        listed = {pl for pl in vals} | {pl for pl, _, _ in congs}
        for pl, e in factor_ideal(x):
            assert e >= 0 or pl in listed, "integral-outside violated"
    return x
