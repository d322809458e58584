"""Trace sets of norm-one quaternions, locally and globally.

For a quaternion pair (a, b) the reduced traces of norm-1 elements form a
set S(K_v) in each completion and S globally; T = S + S.  The punchline this
module implements and certifies at desk scale: T is exactly the intersection
of the valuation rings O_p over the finite ramified places p of (a, b) --
provided no real place ramifies.

The local membership criterion at a ramified finite place is exact:
t is a reduced trace iff v(t) >= 0 and (t = +-2 or t^2 - 4 is a local
non-square); x^2 - t x + 1 is then irreducible, so the quadratic extension
it cuts out embeds in the ramified quaternion algebra with x of norm 1.
Decompositions t = r + (t - r) are produced constructively by prescribing r
at each ramified place (residue in U_q, or exact-valuation +-2 shift) and
gluing with weak approximation.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import List, Optional, Sequence, Tuple

from .approx import weak_approx
from .errors import DomainError, InvariantFailure, SearchExhausted
from .gf import GF, GFElem, canonical_gf
from .ideals import (
    Place,
    real_places,
    reduce_elem,
    residue_field,
    uniformizer,
    valuation,
)
from .qfield import FieldCtx, NfElem, enumerate_by_height, sqrt_in_field
from .symbols import QuaternionPair, is_local_square

__all__ = [
    "USet",
    "TraceMembershipCert",
    "u_set",
    "u_set_at",
    "u_table_text",
    "u_sumset_covers",
    "u_sumset_with_pm2_covers",
    "local_trace_membership",
    "t_membership",
    "t_decompose",
    "sigma_box",
]

# The eight residue sizes small enough that U_q alone cannot cover F_q by
# sums and the +-2 escape hatch is part of the decomposition recipe.
SMALL_Q = (2, 3, 4, 5, 7, 8, 9, 11)


@dataclass(frozen=True)
class USet:
    """Traces s whose characteristic polynomial x^2 - s x + 1 stays irreducible."""

    q: int
    members: frozenset

    def __contains__(self, s: GFElem) -> bool:
        return s in self.members

    def sorted_members(self) -> List[GFElem]:
        return sorted(self.members, key=_gf_encode)

    def __repr__(self) -> str:
        return f"USet(q={self.q}, size={len(self.members)})"


def _gf_encode(e: GFElem) -> int:
    """Integer encoding sum(c_i p^i); fixes the display and search order."""
    p = e.field.p
    return sum(c * p**i for i, c in enumerate(e.coeffs))


def _scan_u(F: GF) -> frozenset:
    elems = list(F.elements())
    return frozenset(
        s for s in elems if not any(x * x - s * x + F.one() == F.zero() for x in elems)
    )


@lru_cache(maxsize=None)
def u_set(q: int) -> USet:
    """U_q, by exhaustive root scan of x^2 - s x + 1 over F_q.

    Supported q: residue sizes of the fields we handle (f <= 2) plus the
    eight small table entries; anything else is rejected rather than
    silently extended.
    """
    try:
        F = canonical_gf(q)
    except (ValueError, AssertionError) as exc:
        raise DomainError(f"u_set: unsupported residue size q={q}") from exc
    if q not in SMALL_Q and F.f > 2:
        raise DomainError(f"u_set: residue degree {F.f} not supported (q={q})")
    return USet(q, _scan_u(F))


@lru_cache(maxsize=None)
def u_set_at(place: Place) -> USet:
    """U of the residue field attached to a specific place.

    Same mathematical set as u_set(q) but living inside the residue field
    with the place's own modulus, so it can meet reduce_elem output; the two
    presentations are only canonically isomorphic, not identical.
    """
    F = residue_field(place)
    return USet(F.q, _scan_u(F))


def _render_member(e: GFElem) -> str:
    """Monomials highest-degree first; ' + ' join once a square term shows up,
    bare '+' otherwise (matching how the reference tables are typeset)."""
    parts = []
    top = 0
    for deg in range(e.field.f - 1, -1, -1):
        c = e.coeffs[deg]
        if c == 0:
            continue
        top = max(top, deg)
        if deg == 0:
            parts.append(str(c))
        else:
            var = "a" if deg == 1 else f"a^{deg}"
            parts.append(var if c == 1 else f"{c}{var}")
    if not parts:
        return "0"
    return (" + " if top >= 2 else "+").join(parts)


def _display_gf(q: int) -> GF:
    """Field presentation used for the printed small tables.

    These match the handed-down reference tables character for character.
    The q = 9 table was typeset with the generator satisfying
    a^2 + 2a + 2 = 0 (the Conway presentation), not our canonical a^2 + 1 = 0,
    so rendering — and only rendering — swaps the modulus there.  The two
    presentations are isomorphic; u_set/u_set_at keep the canonical one.
    """
    if q == 9:
        return GF(3, (2, 2, 1))
    return canonical_gf(q)


def u_table_text(q: int) -> str:
    """The set U_q as display text, e.g. '{1,4}' or '{a, a+1}'.

    Prime fields pack the elements tight; extension fields get a space after
    each comma.  Members are sorted by their integer encoding.
    """
    F = _display_gf(q)
    members = _scan_u(F)
    sep = "," if F.f == 1 else ", "
    ordered = sorted(members, key=_gf_encode)
    return "{" + sep.join(_render_member(e) for e in ordered) + "}"


def u_sumset_covers(q: int) -> bool:
    """Does U_q + U_q = F_q?  (True for every q > 11.)"""
    us = u_set(q)
    F = canonical_gf(q)
    sums = {x + y for x, y in itertools.product(us.members, repeat=2)}
    return len(sums) == F.q


def u_sumset_with_pm2_covers(q: int) -> bool:
    """Does (U_q u {+-2}) + U_q = F_q?  (The case check for q <= 11.)"""
    us = u_set(q)
    F = canonical_gf(q)
    left = set(us.members) | {F.from_int(2), F.from_int(-2)}
    sums = {x + y for x, y in itertools.product(left, us.members)}
    return len(sums) == F.q


# ---- local membership ----------------------------------------------------------------


def _real_in_box(t: NfElem, place: Place) -> bool:
    """Exact -2 <= sigma(t) <= 2."""
    two = t.field.elem(2)
    lo = (t + two).embedding_sign(place.selector)
    hi = (t - two).embedding_sign(place.selector)
    return lo >= 0 and hi <= 0


def local_trace_membership(t: NfElem, pair: QuaternionPair, place: Place) -> bool:
    """Is t the reduced trace of a norm-1 quaternion over the completion at place?

    Split places (anything outside delta) accept every t.  Ramified finite
    places: t integral and (t = +-2 or t^2 - 4 not a local square).  Ramified
    real places: -2 <= sigma(t) <= 2 exactly.
    """
    if place not in pair.delta:
        return True
    if place.kind == "real":
        return _real_in_box(t, place)
    if t and valuation(t, place) < 0:
        return False
    two = t.field.elem(2)
    if t == two or t == -two:
        return True
    disc = t * t - 4
    return not is_local_square(disc, place)


def _admissible(pair: QuaternionPair) -> Optional[Place]:
    """The first real place violating 'sigma(a) > 0 or sigma(b) > 0', if any."""
    for sigma in real_places(pair.field):
        if (
            pair.a.embedding_sign(sigma.selector) < 0
            and pair.b.embedding_sign(sigma.selector) < 0
        ):
            return sigma
    return None


def t_membership(t: NfElem, pair: QuaternionPair) -> bool:
    """t in T = S + S, decided by the valuation criterion: v(t) >= 0 at every
    finite ramified place.  Requires the no-real-ramification hypothesis."""
    bad = _admissible(pair)
    if bad is not None:
        raise DomainError(
            f"pair ({pair.a}, {pair.b}) has both entries negative at {bad}; "
            "the trace-set equality needs sigma(a) > 0 or sigma(b) > 0 "
            "at every real place"
        )
    if not t:
        return True
    return all(
        valuation(t, v) >= 0 for v in pair.delta if v.is_finite
    )


# ---- decomposition -------------------------------------------------------------------


@dataclass(frozen=True)
class TraceMembershipCert:
    """t = r + (t - r) with both halves certified local traces everywhere.

    When the bounded search finds global norm-1 quaternions realizing the
    halves, their coordinate 4-tuples are attached; otherwise `flag` explains
    what degraded and the per-place local certificates stand alone.
    """

    t: NfElem
    r: NfElem
    pair: QuaternionPair
    witness_r: Optional[Tuple[NfElem, NfElem, NfElem, NfElem]] = None
    witness_rest: Optional[Tuple[NfElem, NfElem, NfElem, NfElem]] = None
    flag: str = ""

    def halves(self) -> Tuple[NfElem, NfElem]:
        return self.r, self.t - self.r

    def verify(self) -> bool:
        """Recheck everything this certificate claims, from scratch."""
        r, rest = self.halves()
        if r + rest != self.t:
            return False
        for v in self.pair.delta:
            if not local_trace_membership(r, self.pair, v):
                return False
            if not local_trace_membership(rest, self.pair, v):
                return False
        for half, wit in ((r, self.witness_r), (rest, self.witness_rest)):
            if wit is None:
                continue
            x1, x2, x3, x4 = wit
            if x1 + x1 != half:
                return False
            a, b = self.pair.a, self.pair.b
            if x1 * x1 - a * x2 * x2 - b * x3 * x3 + a * b * x4 * x4 != 1:
                return False
        return True


def _decompose_constraint(t: NfElem, place: Place):
    """One weak-approximation constraint pinning r at a ramified finite place.

    Route 1: a residue split red(t) = u1 + u2 inside U_q.
    Route 2: r = s0 + (exact valuation k) for s0 in {2, -2} with
             red(t - s0) in U_q; k odd and > 2 v(2) makes v(r^2 - 4) odd,
             so r is a trace, and the other half lands in U_q.
    The sumset facts guarantee one of the routes applies (routes using +-2
    are only legal for residue characteristic <= 11, and only needed there).
    """
    field = t.field
    q = place.residue_size
    us = u_set_at(place)
    F = residue_field(place)
    tr = reduce_elem(t, place)
    for u1 in us.sorted_members():
        if tr - u1 in us.members:
            if not u1:  # red(r) = 0 is a congruence, not a unit residue
                return ("cong", place, field.zero(), 1)
            return ("res", place, u1)
    if place.p > 11:
        raise InvariantFailure(
            f"U_q + U_q failed to cover F_q at {place} (q={q}); "
            "this contradicts the sumset theorem"
        )
    for s0 in (2, -2):
        if tr - F.from_int(s0) in us.members:
            k = 2 * _v2_at(place) + 1
            target = field.elem(s0) + uniformizer(place) ** k
            return ("cong", place, target, k + 1)
    raise InvariantFailure(
        f"(U_q u {{+-2}}) + U_q failed to cover F_q at {place} (q={q})"
    )


def _v2_at(place: Place) -> int:
    return place.e if place.p == 2 else 0


@lru_cache(maxsize=8)
def _witness_pool(field: FieldCtx) -> tuple:
    """Scan candidates with integer coordinate data attached, smallest first."""
    depth = 24 if field.is_rational else 6
    return tuple((y,) + y.coords_int() for y in enumerate_by_height(field, depth))


def _norm_one_witness(
    half: NfElem, pair: QuaternionPair, bound: int = 200
) -> Optional[Tuple[NfElem, NfElem, NfElem, NfElem]]:
    """Bounded search for (x1..x4) with x1^2 - a x2^2 - b x3^2 + ab x4^2 = 1
    and 2 x1 = half.  Corner strategies only (one coordinate zero at a time);
    existence is guaranteed by the local-global principle but without height
    bounds, so a miss is reported as None, never as nonexistence.

    Each chart solves X^2 = (c + S y^2) / P for a scan variable y.  The inner
    loop is pure integer arithmetic: N(rhs) square in Q is necessary for rhs
    square in K and is multiplicative, so the candidate is priced at a handful
    of int mults; only survivors pay for the exact sqrt_in_field check.
    """
    field = half.field
    a, b = pair.a, pair.b
    x1 = half / 2
    c = x1 * x1 - 1
    if not c:
        return (x1, field.zero(), field.zero(), field.zero())
    zero = field.zero()
    charts = (
        (-b, a, lambda x, y: (x1, x, y, zero)),  # x4 = 0, scan y = x3
        (a * b, a, lambda x, y: (x1, x, zero, y)),  # x3 = 0, scan y = x4
        (a * b, b, lambda x, y: (x1, zero, x, y)),  # x2 = 0, scan y = x4
    )
    pool = _witness_pool(field)
    n0, n1, cd = c.coords_int()
    if field.is_rational:
        w0s = w1s = tr = nm = 0
    else:
        w0s, w1s = int(field.omega_sq0), int(field.omega_sq1)
        tr, nm = int(field.omega_trace), int(field.omega_norm)
    for S, P, build in charts:
        s0, s1, sd = S.coords_int()
        p0, p1, pd = P.coords_int()
        if field.is_rational:
            # rhs = z0*pd / (cd*sd*yd^2*p0): square iff z0 * (p0*pd*cd*sd) square
            np_ = p0 * pd * cd * sd
        else:
            # denominators enter N(rhs) squared and drop; only N(P') survives
            np_ = p0 * p0 + p0 * p1 * tr + p1 * p1 * nm
        if np_ == 0:
            continue
        b0, b1 = n0 * sd, n1 * sd
        for y, y0, y1, yd in pool:
            yd2 = yd * yd
            u0 = y0 * y0 + y1 * y1 * w0s
            u1 = 2 * y0 * y1 + y1 * y1 * w1s
            z0 = b0 * yd2 + (s0 * u0 + s1 * u1 * w0s) * cd
            z1 = b1 * yd2 + (s0 * u1 + s1 * u0 + s1 * u1 * w1s) * cd
            if field.is_rational:
                nz = z0
            else:
                nz = z0 * z0 + z0 * z1 * tr + z1 * z1 * nm
            m = nz * np_
            if m < 0 or not _is_square_int(m):
                continue
            rhs = (c + S * y * y) / P
            x = sqrt_in_field(rhs)
            if x is not None and _heights_ok((x1, x, y), bound):
                return build(x, y)
    return None


def _is_square_int(n: int) -> bool:
    if n < 0:
        return False
    r = math.isqrt(n)
    return r * r == n


def _heights_ok(xs, bound: int) -> bool:
    return all(x.height <= bound for x in xs)


def t_decompose(t: NfElem, pair: QuaternionPair) -> TraceMembershipCert:
    """Split t into two locally-certified trace halves.

    Tries the global corners r = +-2 first, then assembles per-place
    constraints and glues them by weak approximation.  The returned
    certificate is re-verified before it leaves this function.
    """
    if not t_membership(t, pair):
        raise DomainError(f"{t} is not in the trace sumset for this pair")
    finite_delta = [v for v in pair.delta if v.is_finite]
    field = t.field
    r = None
    for cand in (field.elem(2), field.elem(-2)):
        rest = t - cand
        if all(
            local_trace_membership(cand, pair, v)
            and local_trace_membership(rest, pair, v)
            for v in finite_delta
        ):
            r = cand
            break
    if r is None:
        constraints = [_decompose_constraint(t, v) for v in finite_delta]
        r = weak_approx(field, constraints)
    rest = t - r
    for v in finite_delta:
        if not local_trace_membership(r, pair, v) or not local_trace_membership(
            rest, pair, v
        ):
            raise InvariantFailure(
                f"decomposition of {t} failed its own certificate at {v}"
            )
    wr = _norm_one_witness(r, pair)
    wrest = _norm_one_witness(rest, pair)
    flag = ""
    if wr is None or wrest is None:
        flag = "norm-1 witness search exhausted; local certificates only"
    cert = TraceMembershipCert(
        t=t, r=r, pair=pair, witness_r=wr, witness_rest=wrest, flag=flag
    )
    if not cert.verify():
        raise InvariantFailure(f"certificate for {t} does not verify")
    return cert


# ---- the archimedean box, for completeness --------------------------------------------


def sigma_box(pair: QuaternionPair, place: Place) -> str:
    """The T-level archimedean constraint at an infinite place:
    'R' (no constraint), '[-4,4]' (both entries negative), or 'C'."""
    if place.kind == "complex":
        return "C"
    if place.kind != "real":
        raise DomainError("sigma_box expects an archimedean place")
    sa = pair.a.embedding_sign(place.selector)
    sb = pair.b.embedding_sign(place.selector)
    return "[-4,4]" if (sa < 0 and sb < 0) else "R"
