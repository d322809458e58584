"""Exact local symbols: square classes, Hilbert symbols, ramification sets.

Everything here is exact integer arithmetic; no p-adic floats, no real
approximations.  Odd finite places go through the residue-field power
formula.  Dyadic places are decided by a bounded primitive-solution search
for the conic z^2 = a x^2 + b y^2, with a precision budget that carries a
Hensel-lifting completeness margin (worked out in the comments below).
Real places compare exact embedding signs.  Results are memoized per
canonical local square class, which the witness pipelines lean on heavily.
"""
from __future__ import annotations

from functools import lru_cache
from typing import Dict, Iterable, List, Tuple

from .errors import DomainError, InvariantFailure
from .ideals import (
    Place,
    all_dyadic_places,
    factor_ideal,
    hensel_root,
    local_ring,
    real_places,
    reduce_elem,
    uniformizer,
    valuation,
    vp_int,
)
from .qfield import FieldCtx, NfElem

__all__ = [
    "Sign",
    "QuaternionPair",
    "is_local_square",
    "square_class_key",
    "local_rep",
    "hilbert_symbol",
    "conic_solvable",
    "delta_set",
    "reciprocity_audit",
]

# A sign is just an int constrained to {+1, -1}; keeping it primitive makes
# products and table entries painless.
Sign = int


def _e2(place: Place) -> int:
    """v_p(2) at a finite place: the ramification index over 2, or 0 at odd places."""
    return place.e if place.p == 2 else 0


def _square_depth(place: Place) -> int:
    """Congruence depth deciding unit squareness: units u = w^2 mod p^(2*v(2)+1)
    are squares (Hensel; the quadratic obstruction sits inside 1 + 4p)."""
    return 2 * _e2(place) + 1


@lru_cache(maxsize=None)
def _unit_square_reps(place: Place) -> frozenset:
    """Box representatives of squares of units in O/p^depth (dyadic use only)."""
    ring = local_ring(place, _square_depth(place))
    return frozenset(ring.mul(r, r) for r in ring.elements() if ring.is_unit(r))


def _unit_orbit_key(place: Place, u: NfElem) -> Tuple[int, int]:
    """Canonical label of the square class of a unit u: the minimum box
    representative of u * (unit squares).  Two units get the same key iff
    they differ by a local square."""
    ring = local_ring(place, _square_depth(place))
    r = ring.reduce(u)
    return min(ring.mul(r, s) for s in _unit_square_reps(place))


@lru_cache(maxsize=None)
def square_class_key(x: NfElem, place: Place):
    """Canonical key of x modulo local squares at the given place."""
    if not x:
        raise DomainError("square class of zero")
    if place.kind == "complex":
        return ("c",)
    if place.kind == "real":
        return ("r", x.embedding_sign(place.selector))
    v = valuation(x, place)
    u = x * uniformizer(place) ** (-v)
    if place.is_dyadic:
        return (v & 1, _unit_orbit_key(place, u))
    # odd places have exactly two unit classes; a bool is the whole story
    return (v & 1, reduce_elem(u, place).is_square())


def local_rep(x: NfElem, place: Place) -> NfElem:
    """A small integral element in the same local square class as x.

    Shape: pi^(v mod 2) * (box lift of the unit part mod p^depth).  The lift
    differs from the true unit part by an element of 1 + p^depth, which is a
    square, so the class is preserved exactly.
    """
    v = valuation(x, place)
    pi = uniformizer(place)
    ring = local_ring(place, _square_depth(place))
    u = ring.elem_of(ring.reduce(x * pi ** (-v)))
    return pi ** (v & 1) * u


def is_local_square(x: NfElem, place: Place) -> bool:
    """Membership in K_v^x squared, decided exactly."""
    if not x:
        raise DomainError("is_local_square: zero input")
    if place.kind == "complex":
        return True
    if place.kind == "real":
        return x.embedding_sign(place.selector) > 0
    v = valuation(x, place)
    if v & 1:
        return False
    u = x * uniformizer(place) ** (-v)
    if place.is_dyadic:
        ring = local_ring(place, _square_depth(place))
        return ring.reduce(u) in _unit_square_reps(place)
    return reduce_elem(u, place).is_square()


# ---- bounded conic solvability ----------------------------------------------------

def _attainable_even_cap(vP: int, vQ: int, m_cap: int):
    """Largest even m <= m_cap that v(P*s^2 + Q) can attain for s in O_v,
    given v(P)=vP and v(Q)=vQ; None when no even value is attainable.

    v(P s^2 + Q) = min(vP + 2*v(s), vQ) when the two differ; unbounded
    cancellation is only possible when vQ >= vP with matching parity.
    """
    cands = []
    if (vP - vQ) % 2 == 0:
        if vQ < vP:
            if vQ % 2 == 0 and vQ <= m_cap:
                cands.append(vQ)
        else:
            top = m_cap - (m_cap & 1)
            if top >= 0:
                cands.append(top)
    else:
        top = min(vQ - 1, m_cap)
        if vP % 2 == 0 and top >= vP:
            cands.append(top - ((top - vP) & 1))
        if vQ % 2 == 0 and vQ <= m_cap:
            cands.append(vQ)
    return max(cands) if cands else None


def conic_solvable(a: NfElem, b: NfElem, place: Place) -> bool:
    """Does z^2 = a x^2 + b y^2 have a nontrivial zero over the completion?

    Exact bounded decision.  A primitive solution has x or y a unit (if both
    sat in p the right side would have valuation >= 2 while z^2 stays a unit
    square), so after dividing through it suffices to scan the two affine
    charts w = a s^2 + b and w = b s^2 + a for a value that is a square.

    Precision.  With e = v_place(2) and vetted representatives of valuation
    <= 1 the budget is k = 2e^2 + v(4ab) + 3; a candidate value w is accepted
    when m = v(w) is even, m <= the attainable cap (<= k - 2e - 2), and the
    unit part is a square mod p^(2e+1).  Acceptance is sound outright
    (arithmetic is exact); the chart variable only needs to range over a box
    mod p^j with j = m_cap + e + 1 - v(coef), because perturbing s by p^j
    moves w by coef*(2 s d + d^2), valuation >= v(coef) + j + e, which
    leaves the square class of any acceptable w untouched.
    """
    if not a or not b:
        raise DomainError("conic_solvable: zero coefficient")
    if not place.is_finite:
        raise DomainError("conic_solvable expects a finite place")
    # one-variable corners first: a or b or -ab a square settles it
    if is_local_square(a, place) or is_local_square(b, place):
        return True
    if is_local_square(-(a * b), place):
        return True
    A, B = local_rep(a, place), local_rep(b, place)
    e2 = _e2(place)
    vA, vB = valuation(A, place), valuation(B, place)
    k = 2 * e2 * e2 + (2 * e2 + vA + vB) + 3
    m_cap = k - (2 * e2 + 2)
    for P, Q in ((A, B), (B, A)):
        vP, vQ = (vA, vB) if P is A else (vB, vA)
        m_max = _attainable_even_cap(vP, vQ, m_cap)
        if m_max is None:
            continue
        j = max(1, m_max + e2 + 1 - vP)
        if _chart_scan(P, Q, place, j, m_max):
            return True
    return False


def _chart_scan(P: NfElem, Q: NfElem, place: Place, j: int, m_max: int) -> bool:
    """Scan w = P*s^2 + Q for s over O/p^j, looking for a square value.

    The inner loop is plain integer arithmetic on coordinates (P, Q and the
    box representatives are all integral); exact element machinery only runs
    on the rare candidates that survive the valuation filter.
    """
    field = place.field
    p = place.p
    box = local_ring(place, j)
    pi = uniformizer(place)
    typ = place.split_type
    sq_reps = _unit_square_reps(place) if place.is_dyadic else None
    ring_depth = local_ring(place, _square_depth(place)) if place.is_dyadic else None
    P0, P1 = (int(P.c0), int(P.c1))
    Q0, Q1 = (int(Q.c0), int(Q.c1))
    if field.is_rational:
        w0s = w1s = tr = nm = 0
    else:
        w0s, w1s = field.omega_sq0, field.omega_sq1
        tr, nm = field.omega_trace, field.omega_norm
    if typ == "split":
        prec = j + m_max + _square_depth(place) + 2
        root, pK = hensel_root(place, prec), p**prec
    for i, jj in box.elements():
        s0 = i * i + jj * jj * w0s
        s1 = 2 * i * jj + jj * jj * w1s
        w0 = P0 * s0 + P1 * s1 * w0s + Q0
        w1 = P0 * s1 + P1 * s0 + P1 * s1 * w1s + Q1
        if w0 == 0 and w1 == 0:
            return True
        # exact valuation, cheapest route per splitting type
        if typ == "rational":
            m = vp_int(w0, p)
        elif typ == "inert":
            m = min(vp_int(c, p) for c in (w0, w1) if c)
        elif typ == "ramified":
            m = vp_int(abs(w0 * w0 + tr * w0 * w1 + nm * w1 * w1), p)
        else:  # split: scalar image under the residue embedding
            phi = (w0 + w1 * root) % pK
            if phi == 0:
                continue  # valuation >= prec > m_max
            m = vp_int(phi, p)
        if m & 1 or m > m_max:
            continue
        u = field.elem(w0, w1) * pi ** (-m)
        if place.is_dyadic:
            if ring_depth.reduce(u) in sq_reps:
                return True
        elif reduce_elem(u, place).is_square():
            return True
    return False


# ---- Hilbert symbols ---------------------------------------------------------------

_SYMBOL_CACHE: Dict[tuple, Sign] = {}


def _odd_symbol(a: NfElem, b: NfElem, place: Place) -> Sign:
    """Closed formula at odd finite places:
    ((-1)^{v(a)v(b)} * red(a^{v(b)} / b^{v(a)}))^{(q-1)/2}."""
    al, be = valuation(a, place), valuation(b, place)
    pi = uniformizer(place)
    ua = reduce_elem(a * pi ** (-al), place)
    ub = reduce_elem(b * pi ** (-be), place)
    q = place.residue_size
    r = ua ** (be % (q - 1)) * ub.inverse() ** (al % (q - 1))
    if al * be % 2:
        r = -r
    t = r ** ((q - 1) // 2)
    if t == t.field.one():
        return 1
    assert t == -t.field.one()
    return -1


def hilbert_symbol(a: NfElem, b: NfElem, place: Place) -> Sign:
    """(a, b)_v: +1 iff the quaternion algebra (a, b) splits at v, i.e. iff
    z^2 = a x^2 + b y^2 has a nontrivial local zero."""
    if not a or not b:
        raise DomainError("hilbert_symbol: zero input")
    if place.kind == "complex":
        return 1
    if place.kind == "real":
        sa = a.embedding_sign(place.selector)
        sb = b.embedding_sign(place.selector)
        return -1 if (sa < 0 and sb < 0) else 1
    ka, kb = square_class_key(a, place), square_class_key(b, place)
    key = (place,) + tuple(sorted((ka, kb)))
    hit = _SYMBOL_CACHE.get(key)
    if hit is not None:
        return hit
    if place.is_dyadic:
        s = 1 if conic_solvable(a, b, place) else -1
    else:
        s = _odd_symbol(a, b, place)
    _SYMBOL_CACHE[key] = s
    return s


def _candidate_places(a: NfElem, b: NfElem) -> List[Place]:
    """Places where (a, .)_v or (., b)_v could possibly ramify: the support
    of a and b, every dyadic place, and the real places."""
    field = a.field
    seen = {pl for pl, _ in factor_ideal(a)} | {pl for pl, _ in factor_ideal(b)}
    seen.update(all_dyadic_places(field))
    seen.update(real_places(field))
    return sorted(seen, key=lambda v: v.sort_key())


def delta_set(a: NfElem, b: NfElem) -> Tuple[Place, ...]:
    """All places with (a,b)_v = -1; finite, and of even size by reciprocity."""
    if not a or not b:
        raise DomainError("delta_set: zero input")
    out = tuple(v for v in _candidate_places(a, b) if hilbert_symbol(a, b, v) == -1)
    if len(out) % 2:
        raise InvariantFailure(
            f"ramification set of ({a}, {b}) has odd size {len(out)}: "
            f"{[str(v) for v in out]}"
        )
    return out


def reciprocity_audit(a: NfElem, b: NfElem) -> Sign:
    """Product of (a,b)_v over all candidate places; contract: always +1.

    A -1 product is never returned silently: it means a symbol is wrong.
    """
    prod = 1
    for v in _candidate_places(a, b):
        prod *= hilbert_symbol(a, b, v)
    if prod != 1:
        raise InvariantFailure(f"Hilbert reciprocity fails for ({a}, {b})")
    return prod


class QuaternionPair:
    """The quaternion algebra presented by i^2 = a, j^2 = b, ij = -ji.

    Carries its ramification set lazily; everything else in the trace-set
    and witness machinery keys off (a, b, delta).
    """

    __slots__ = ("a", "b", "_delta")

    def __init__(self, a: NfElem, b: NfElem):
        if not a or not b:
            raise DomainError("quaternion pair needs nonzero a, b")
        if a.field != b.field:
            raise DomainError("quaternion pair: mixed fields")
        self.a = a
        self.b = b
        self._delta = None

    @property
    def field(self) -> FieldCtx:
        return self.a.field

    @property
    def delta(self) -> Tuple[Place, ...]:
        if self._delta is None:
            self._delta = delta_set(self.a, self.b)
        return self._delta

    def symbol(self, place: Place) -> Sign:
        return hilbert_symbol(self.a, self.b, place)

    def is_split_at(self, place: Place) -> bool:
        return self.symbol(place) == 1

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, QuaternionPair)
            and (self.a, self.b) == (other.a, other.b)
        )

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def __repr__(self) -> str:
        return f"QuaternionPair({self.a}, {self.b})"
