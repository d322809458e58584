"""Witness rings and the universal-formula integrality decision.

The endgame of the library: integrality of t is decided by exhibiting, for a
prime where t has a pole, a semilocal ring R = intersection of O_(p) over a
finite delta set such that 1/t lies in the Jacobson radical J(R).  Since
x belongs to the universally-defined set R~ = {x : no y in J(R) has xy = 1},
the pair (t, 1/t) is a machine-checkable certificate of non-integrality.

Three ring families cover every prime, keyed by the Artin label the ray
context assigns to it:

  * primes dividing the ray modulus -- plain localization;
  * label sigma != (1,1) -- R_p^sigma cut out by the odd part of (p) = p0*q
    with q an auxiliary identity-labeled prime, delta = {p0};
  * label (1,1) -- R_{p,q}^{[1,1]} from a solved Hilbert-symbol prescription
    whose delta = (ramification of (a*p, q)) & (ramification of (b*p, q)) is
    exactly {p0}.

Deltas are carried as Artin-label partition buckets and re-derived from
Hilbert-symbol intersections on every construction and verification; the two
routes must agree except at reciprocity-pinned odd modulus primes, where the
exact discrepancy is predicted and enforced (see sigma_delta_places).

The module also houses the building blocks used along the way: the parity
test for K^x2 * T^x (squares times trace-set units), the interval sets I^c,
the Jacobson radical J_{a,b} with its two-summand decomposition certificate,
and the predicate families Phi_sigma / Psi whose members parameterize the
rings.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterator, List, Mapping, Optional, Sequence, Tuple

from nfwitness.approx import weak_approx
from nfwitness.classfield import (
    GaloisLabel,
    RayContext,
    artin_label,
    artin_label_ideal,
    power_residue_symbol,
    prime_partition,
)
from nfwitness.errors import DomainError, InvariantFailure, SearchExhausted
from nfwitness.ideals import (
    Place,
    factor_ideal,
    is_principal,
    parse_place,
    prime_places_up_to,
    reduce_elem,
    uniformizer,
    valuation,
)
from nfwitness.prescribe import (
    Prescription,
    _small_integral,
    local_class_representatives,
    solve,
)
from nfwitness.qfield import FieldCtx, NfElem, parse_elem, render_elem
from nfwitness.symbols import (
    QuaternionPair,
    delta_set,
    hilbert_symbol,
    is_local_square,
    square_class_key,
)

__all__ = [
    "WitnessRing",
    "Witness",
    "odd_support",
    "in_square_times_trace_units",
    "trace_unit_scale",
    "in_I_c",
    "in_I_c_by_membership",
    "in_J",
    "j_relevant_places",
    "j_split",
    "in_Phi",
    "in_Phi_tilde",
    "in_Psi",
    "sigma_delta_places",
    "pair_delta_places",
    "construct_q",
    "construct_sigma_witness",
    "construct_pair_witness",
    "decide_integrality",
    "verify_witness",
]

_SPLIT_COMBO_CAP = 6000


# ---- squares times trace units ----------------------------------------------------

def _finite_delta(pair: QuaternionPair) -> Tuple[Place, ...]:
    delta = pair.delta
    if any(not pl.is_finite for pl in delta):
        raise DomainError(f"pair ({pair.a}, {pair.b}) ramifies at a real place")
    return delta


def odd_support(c: NfElem) -> Tuple[Place, ...]:
    """The finite places where (c) has odd valuation."""
    if not c:
        raise DomainError("odd support of zero is undefined")
    return tuple(pl for pl, e in factor_ideal(c) if e % 2)


def in_square_times_trace_units(x: NfElem, pair: QuaternionPair) -> bool:
    """Membership in K^x2 * T^x: even valuation at every ramified place."""
    if not x:
        raise DomainError("zero is not in K^x2 * T^x")
    return all(valuation(x, pl) % 2 == 0 for pl in _finite_delta(pair))


def trace_unit_scale(x: NfElem, pair: QuaternionPair) -> NfElem:
    """r with x/r^2 a unit at every ramified place (the constructive half)."""
    if not in_square_times_trace_units(x, pair):
        raise DomainError(f"{x} has odd valuation on the ramification set")
    delta = _finite_delta(pair)
    if not delta:
        return x.field.one()
    r = weak_approx(x.field, [("val", pl, valuation(x, pl) // 2) for pl in delta])
    for pl in delta:
        if valuation(x / (r * r), pl) != 0:
            raise InvariantFailure(f"halving scale failed at {pl}")
    return r


# ---- the interval sets I^c ---------------------------------------------------------

def in_I_c(y: NfElem, pair: QuaternionPair, c: NfElem) -> bool:
    """The valuation criterion for I^c = c*K^x2*T^x & (1 - K^x2*T^x).

    Odd positive valuation on delta & oddsupp(c); even valuation of y and of
    1 - y on the rest of delta.  y = 1 is excluded (1 - y = 0 has no class).
    """
    if not y:
        raise DomainError("zero is not in I^c")
    if not c:
        raise DomainError("I^c needs nonzero c")
    if y == 1:
        return False
    pc = set(odd_support(c))
    for pl in _finite_delta(pair):
        vy = valuation(y, pl)
        if pl in pc:
            if vy % 2 == 0 or vy < 0:
                return False
        else:
            if vy % 2 or valuation(1 - y, pl) % 2:
                return False
    return True


def in_I_c_by_membership(y: NfElem, pair: QuaternionPair, c: NfElem) -> bool:
    """The defining-formula route: y/c and 1-y both in K^x2 * T^x."""
    if not y:
        raise DomainError("zero is not in I^c")
    if y == 1:
        return False
    return in_square_times_trace_units(y / c, pair) and in_square_times_trace_units(1 - y, pair)


# ---- the Jacobson radical J_{a,b} --------------------------------------------------

def j_relevant_places(pair: QuaternionPair) -> Tuple[Place, ...]:
    """delta & (oddsupp(a) | oddsupp(b)): where J_{a,b} imposes a zero."""
    rel = set(odd_support(pair.a)) | set(odd_support(pair.b))
    return tuple(pl for pl in _finite_delta(pair) if pl in rel)


def in_J(x: NfElem, pair: QuaternionPair) -> bool:
    """Valuation route: x = 0, or v(x) >= 1 at every relevant place."""
    if not x:
        return True
    return all(valuation(x, pl) >= 1 for pl in j_relevant_places(pair))


def _residue_options(pl: Place):
    opts: List[object] = [n for n in range(1, 6) if n % pl.p]
    if pl.f == 2:
        opts.extend([(0, 1), (1, 1), (2 % pl.p, 1)])
    return opts


def _split_options(z: NfElem, pair: QuaternionPair, c: NfElem):
    """Per-place constraint alternatives for the I^c + I^c decomposition."""
    pc = set(odd_support(c))
    per_place = []
    for pl in _finite_delta(pair):
        opts = []
        if pl in pc:
            for r in _residue_options(pl):
                opts.append((("val", pl, 1), ("res", pl, r)))
            opts.append((("val", pl, 3), ("res", pl, 1)))
        else:
            for r in _residue_options(pl):
                opts.append((("val", pl, 0), ("res", pl, r)))
            opts.append((("val", pl, 2), ("res", pl, 1)))
            shifted = z.field.one() + uniformizer(pl) ** 2
            opts.append((("cong", pl, shifted, 3),))
            m = valuation(z, pl)
            if m < 0 and m % 2:
                opts.append((("val", pl, m - 1), ("res", pl, 1)))
        per_place.append(opts)
    return per_place


def _i_c_split(z: NfElem, pair: QuaternionPair, c: NfElem) -> NfElem:
    """y1 with y1 and z - y1 both in I^c (exists whenever v(z) >= 1 on delta & oddsupp(c))."""
    field = z.field
    per_place = _split_options(z, pair, c)
    if not per_place:
        for n in range(2, 9):
            y1 = z - field.elem(n)
            if y1 and y1 != 1 and in_I_c(y1, pair, c) and in_I_c(z - y1, pair, c):
                return y1
        raise SearchExhausted(f"no unconstrained split of {z}")
    tried = 0
    for combo in itertools.product(*per_place):
        tried += 1
        if tried > _SPLIT_COMBO_CAP:
            break
        y1 = weak_approx(field, [con for group in combo for con in group])
        if not y1 or y1 == 1 or y1 == z:
            continue
        if in_I_c(y1, pair, c) and in_I_c(z - y1, pair, c):
            return y1
    raise SearchExhausted(
        f"no I^c + I^c split of {z} for c = {c} within {tried} constraint patterns")


def j_split(x: NfElem, pair: QuaternionPair) -> Tuple[NfElem, NfElem]:
    """(y1, y2) certifying x in J_{a,b}: y_i and x - y_i lie in I^a resp. I^b."""
    if not x:
        raise DomainError("the zero element needs no decomposition certificate")
    if not in_J(x, pair):
        raise DomainError(f"{x} is not in J for this pair")
    return _i_c_split(x, pair, pair.a), _i_c_split(x, pair, pair.b)


# ---- the predicate families Phi and Psi --------------------------------------------

def _modulus_valuations(x: NfElem, ctx: RayContext) -> List[int]:
    return [valuation(x, pl) for pl, _ in ctx.modulus.finite_factorization()]


def in_Phi(p: NfElem, sigma: GaloisLabel, ctx: RayContext) -> bool:
    """(p) coprime to the modulus, Artin label sigma, odd support labeled (1,1) or sigma."""
    if not p:
        raise DomainError("Phi membership is for nonzero elements")
    if any(v != 0 for v in _modulus_valuations(p, ctx)):
        return False
    if artin_label_ideal(p, ctx) != sigma:
        return False
    part = prime_partition(p, ctx)
    for lab in GaloisLabel.all_labels():
        if lab != GaloisLabel.identity() and lab != sigma and part[lab]:
            return False
    return True


def in_Phi_tilde(p: NfElem, sigma: GaloisLabel, ctx: RayContext) -> bool:
    """The square-saturated variant: p times any square of a Phi_sigma element."""
    if not p:
        raise DomainError("Phi membership is for nonzero elements")
    if any(v % 2 for v in _modulus_valuations(p, ctx)):
        return False
    if artin_label_ideal(p, ctx) != sigma:
        return False
    part = prime_partition(p, ctx)
    for lab in GaloisLabel.all_labels():
        if lab != GaloisLabel.identity() and lab != sigma and part[lab]:
            return False
    return True


def sigma_delta_places(p: NfElem, sigma: GaloisLabel, ctx: RayContext) -> Tuple[Place, ...]:
    """The delta of R_p^sigma: the sigma bucket of the label partition of (p).

    The Hilbert-symbol route -- delta(a,p) & delta(b,p) for (-1,-1),
    delta(a,p) & delta(a*b,p) for (-1,1), delta(b,p) & delta(a*b,p) for
    (1,-1) -- is recomputed every time as an audit.  Away from the modulus the
    two routes agree identically; at an odd modulus prime P where both column
    elements have odd valuation, the symbol route picks up P exactly when
    (p/P) = -1 (for labels pinned by reciprocity this is unavoidable, which is
    why the partition set is the one the ring carries).  Any deviation from
    that exact discrepancy raises InvariantFailure.
    """
    if sigma.is_identity():
        raise DomainError("the identity label needs a pair (p, q) ring, not a single p")
    a, b = ctx.a, ctx.b
    if sigma == GaloisLabel(-1, -1):
        u, v = a, b
    elif sigma == GaloisLabel(-1, 1):
        u, v = a, a * b
    else:
        u, v = b, a * b
    part = prime_partition(p, ctx)
    if part.modulus_primes:
        raise DomainError(
            f"(p) = ({p}) has odd valuation at a modulus prime; no sigma ring is defined")
    symbol_route = frozenset(delta_set(u, p)) & frozenset(delta_set(v, p))
    if any(not pl.is_finite for pl in symbol_route):
        raise InvariantFailure("totally positive a, b cannot ramify at a real place")
    partition_route = part[sigma]
    pinned = frozenset(
        pl for pl, _ in ctx.modulus.finite_factorization()
        if not pl.is_dyadic and valuation(u, pl) % 2 and valuation(v, pl) % 2
        and power_residue_symbol(p, pl) == -1)
    if symbol_route != partition_route | pinned:
        raise InvariantFailure(
            f"delta routes disagree beyond the pinned modulus primes for p = {p}: "
            f"symbols give {sorted(str(x) for x in symbol_route)}, partition gives "
            f"{sorted(str(x) for x in partition_route)}, pinned {sorted(str(x) for x in pinned)}")
    return tuple(sorted(partition_route, key=lambda pl: pl.sort_key()))


def pair_delta_places(p: NfElem, q: NfElem, ctx: RayContext) -> Tuple[Place, ...]:
    """The delta of R_{p,q}^{[1,1]}: delta(a*p, q) & delta(b*p, q), fully recomputed."""
    inter = frozenset(delta_set(ctx.a * p, q)) & frozenset(delta_set(ctx.b * p, q))
    return tuple(sorted(inter, key=lambda pl: pl.sort_key()))


def in_Psi(p: NfElem, q: NfElem, ctx: RayContext) -> bool:
    """All four clauses of the Psi membership for the pair (p, q).

    p in saturated Phi_(1,1); q in saturated Phi_(-1,-1); the product of
    (a*p, q) symbols over the modulus places is -1; and a*p is a local square
    at every place of the delta of R_q^{(-1,-1)} (the reduction of the
    square-class congruence p in a * K^x2 * (1 + J)).
    """
    if not p or not q:
        raise DomainError("Psi membership is for nonzero pairs")
    if not in_Phi_tilde(p, GaloisLabel.identity(), ctx):
        return False
    if not in_Phi_tilde(q, GaloisLabel(-1, -1), ctx):
        return False
    ap = ctx.a * p
    prod = 1
    for pl in ctx.modulus.finite_places():
        prod *= hilbert_symbol(ap, q, pl)
    for pl in ctx.modulus.reals:
        prod *= hilbert_symbol(ap, q, pl)
    if prod != -1:
        return False
    delta_q = sigma_delta_places(q, GaloisLabel(-1, -1), ctx)
    if not delta_q:
        raise InvariantFailure(f"q = {q} passed the label filter yet has empty delta")
    return all(is_local_square(ap, pl) for pl in delta_q)


# ---- witness constructions ---------------------------------------------------------

def _unit_scalings(field: FieldCtx) -> Tuple[NfElem, ...]:
    units = list(field.roots_of_unity)
    eps = field.fundamental_unit
    if eps is not None:
        units.extend([z * eps for z in field.roots_of_unity])
    return tuple(units)


def _check_free_prime(p0: Place, ctx: RayContext) -> None:
    if not (isinstance(p0, Place) and p0.is_finite):
        raise DomainError(f"{p0} is not a finite place")
    if p0.field != ctx.field:
        raise DomainError(f"{p0} is not a place of {ctx.field.spec}")
    if ctx.modulus.divides(p0):
        raise DomainError(f"{p0} divides the modulus; localize there directly")


def construct_q(
    p0: Place,
    ctx: RayContext,
    *,
    exclude: Sequence[NfElem] = (),
    residue_target: int = -1,
    norm_bound: Optional[int] = None,
) -> NfElem:
    """A generator q of a prime ideal with label (-1,-1) and (q | p0) as requested.

    The returned q is principal-prime by construction, coprime to the modulus,
    to p0 and to every excluded element, and its residue symbol at p0 equals
    residue_target.  Self-certified before return.
    """
    _check_free_prime(p0, ctx)
    bound = norm_bound if norm_bound is not None else ctx.prime_bound
    target = GaloisLabel(-1, -1)
    for qpl in prime_places_up_to(ctx.field, bound):
        if qpl == p0 or ctx.modulus.divides(qpl):
            continue
        if artin_label(qpl, ctx) != target:
            continue
        if any(valuation(e, qpl) != 0 for e in exclude):
            continue
        principal, gen = is_principal(qpl.ideal())
        if not principal:
            continue
        for z in _unit_scalings(ctx.field):
            q = gen * z
            if power_residue_symbol(q, p0) != residue_target:
                continue
            if not in_Phi(q, target, ctx):
                raise InvariantFailure(f"constructed q = {q} escapes Phi_(-1,-1)")
            return q
    raise SearchExhausted(
        f"no principal (-1,-1) prime with residue symbol {residue_target:+d} at "
        f"{p0} and norm <= {bound}")


@dataclass(frozen=True)
class WitnessRing:
    """A semilocal ring from the universal-formula family, with its delta set.

    kind "localization": intersection within the modulus, parameter `place`.
    kind "sigma": R_p^sigma for sigma != (1,1), parameters `p` and `sigma`.
    kind "pair": R_{p,q}^{[1,1]}, parameters `p` and `q`.
    """

    kind: str
    field: FieldCtx
    delta: Tuple[Place, ...]
    sigma: Optional[GaloisLabel] = None
    p: Optional[NfElem] = None
    q: Optional[NfElem] = None
    place: Optional[Place] = None

    def verify(self, ctx: RayContext) -> bool:
        """Recompute the delta set from the parameters; raise on any mismatch."""
        if not self.delta:
            raise InvariantFailure("witness ring with empty delta defines all of K")
        if self.kind == "localization":
            if self.place is None or not ctx.modulus.divides(self.place):
                raise InvariantFailure("localization witness must sit at a modulus prime")
            if self.delta != (self.place,):
                raise InvariantFailure("localization delta is its own place")
            return True
        if self.kind == "sigma":
            if self.sigma is None or self.sigma.is_identity() or self.p is None:
                raise InvariantFailure("sigma ring needs parameters p and sigma != (1,1)")
            if not in_Phi(self.p, self.sigma, ctx):
                raise InvariantFailure(f"p = {self.p} is not in Phi_{self.sigma}")
            recomputed = sigma_delta_places(self.p, self.sigma, ctx)
            if recomputed != self.delta:
                raise InvariantFailure(
                    f"sigma-ring delta mismatch: stored {self.delta}, got {recomputed}")
            return True
        if self.kind == "pair":
            if self.p is None or self.q is None:
                raise InvariantFailure("pair ring needs parameters p and q")
            if not in_Psi(self.p, self.q, ctx):
                raise InvariantFailure(f"(p, q) = ({self.p}, {self.q}) is not in Psi")
            recomputed = pair_delta_places(self.p, self.q, ctx)
            if recomputed != self.delta:
                raise InvariantFailure(
                    f"pair-ring delta mismatch: stored {self.delta}, got {recomputed}")
            return True
        raise InvariantFailure(f"unknown witness ring kind {self.kind!r}")

    def to_lines(self) -> List[str]:
        out = [f"ring kind {self.kind}"]
        if self.sigma is not None:
            out.append(f"ring sigma {self.sigma}")
        if self.p is not None:
            out.append(f"ring p {render_elem(self.p)}")
        if self.q is not None:
            out.append(f"ring q {render_elem(self.q)}")
        if self.place is not None:
            out.append(f"ring place {self.place}")
        out.append("ring delta " + "; ".join(str(pl) for pl in self.delta))
        return out

    @classmethod
    def from_lines(cls, field: FieldCtx, rows: Mapping[str, str]) -> "WitnessRing":
        kind = rows["kind"]
        sigma = None
        if "sigma" in rows:
            i_txt, j_txt = rows["sigma"].strip("()").split(",")
            sigma = GaloisLabel(int(i_txt), int(j_txt))
        p = parse_elem(field, rows["p"]) if "p" in rows else None
        q = parse_elem(field, rows["q"]) if "q" in rows else None
        place = parse_place(field, rows["place"]) if "place" in rows else None
        delta = tuple(parse_place(field, tok.strip())
                      for tok in rows["delta"].split(";") if tok.strip())
        return cls(kind=kind, field=field, delta=delta, sigma=sigma, p=p, q=q, place=place)


def construct_sigma_witness(p0: Place, ctx: RayContext,
                            norm_bound: Optional[int] = None) -> Tuple[NfElem, WitnessRing]:
    """p in Phi_sigma with delta(R_p^sigma) = {p0}, for sigma = label(p0) != (1,1).

    Searches identity-labeled auxiliary primes q by norm until p0*q is
    principal; then (p) = p0*q has odd support {p0, q} labeled
    {sigma, (1,1)}, so the sigma bucket -- the ring's delta -- is exactly {p0}.
    """
    _check_free_prime(p0, ctx)
    sigma = artin_label(p0, ctx)
    if sigma.is_identity():
        raise DomainError(f"{p0} has the identity label; use construct_pair_witness")
    bound = norm_bound if norm_bound is not None else ctx.prime_bound
    for qpl in prime_places_up_to(ctx.field, bound):
        if qpl == p0 or ctx.modulus.divides(qpl):
            continue
        if not artin_label(qpl, ctx).is_identity():
            continue
        principal, p = is_principal(p0.ideal() * qpl.ideal())
        if not principal:
            continue
        if not in_Phi(p, sigma, ctx):
            raise InvariantFailure(f"constructed p = {p} escapes Phi_{sigma}")
        delta = sigma_delta_places(p, sigma, ctx)
        if delta != (p0,):
            raise InvariantFailure(
                f"sigma witness delta should be exactly {{{p0}}}, got "
                f"{[str(x) for x in delta]}")
        ring = WitnessRing(kind="sigma", field=ctx.field, delta=delta, sigma=sigma, p=p)
        return p, ring
    raise SearchExhausted(
        f"sigma witness at {p0}: no identity-labeled partner prime of norm <= {bound} "
        f"makes {p0}*q principal")


def _local_basis(pl: Place) -> List[NfElem]:
    """Independent generators of the local square-class group at the place."""
    reps = local_class_representatives(pl)
    span = [pl.field.one()]
    span_keys = {square_class_key(span[0], pl)}
    basis: List[NfElem] = []
    for r in reps:
        if square_class_key(r, pl) in span_keys:
            continue
        basis.append(r)
        span = span + [s * r for s in span]
        span_keys = {square_class_key(s, pl) for s in span}
    if len(span) != len(reps):
        raise InvariantFailure(f"local basis extraction stalled at {pl}")
    return basis


def construct_pair_witness(p0: Place, ctx: RayContext,
                           norm_bound: Optional[int] = None) -> Tuple[NfElem, NfElem, WitnessRing]:
    """(p, q) in Psi with delta(R_{p,q}^{[1,1]}) = {p0}, for an identity-labeled p0.

    Stages: shift a local square-class basis at every modulus prime to be 1 mod
    p0; pick the auxiliary prime q (label (-1,-1), nonresidue at p0, coprime to
    the shifted basis); pick e0 (nonresidue at (q), residue 1 at p0); solve the
    symbol prescription with -1 exactly at the (q-row, p0) and (q-row, (q))
    entries; then strip the even modulus valuations of the solution.  Every
    stage is self-certified and failures name the stage.
    """
    _check_free_prime(p0, ctx)
    if not artin_label(p0, ctx).is_identity():
        raise DomainError(f"{p0} has a nontrivial label; use construct_sigma_witness")
    field = ctx.field

    shifted: List[NfElem] = []
    for pl, _ in ctx.modulus.finite_factorization():
        depth = 2 * pl.e + 1 if pl.is_dyadic else 1
        for g in _local_basis(pl):
            e = weak_approx(field, [("cong", pl, g, valuation(g, pl) + depth),
                                    ("res", p0, 1)])
            shifted.append(e)

    q = construct_q(p0, ctx, exclude=tuple(shifted), norm_bound=norm_bound)
    q_support = [pl for pl, k in factor_ideal(q) if k % 2]
    if len(q_support) != 1:
        raise InvariantFailure(f"(q) = ({q}) is not a prime ideal")
    qpl = q_support[0]

    nonsquare_unit = local_class_representatives(qpl)[1]
    e0 = weak_approx(field, [("res", qpl, reduce_elem(nonsquare_unit, qpl)),
                             ("res", p0, 1)])
    if power_residue_symbol(e0, qpl) != -1 or power_residue_symbol(e0, p0) != 1:
        raise InvariantFailure("e0 residue symbols came out wrong")

    family = tuple(shifted) + (e0, q, ctx.a, ctx.b)
    q_row = len(shifted) + 2
    pres = Prescription(field, family, frozenset({(q_row, p0), (q_row, qpl)}))
    try:
        cert = solve(pres)
    except DomainError as exc:
        raise InvariantFailure(
            f"pair witness at {p0}: prescription unexpectedly unsolvable ({exc})") from exc
    except SearchExhausted as exc:
        raise SearchExhausted(f"pair witness at {p0}: prescription stage: {exc}") from exc
    p1 = cert.x

    mod_vals = [(pl, valuation(p1, pl)) for pl, _ in ctx.modulus.finite_factorization()]
    if any(v % 2 for _, v in mod_vals):
        raise InvariantFailure("solution has odd valuation at a modulus prime")
    p = p1
    if any(v for _, v in mod_vals):
        r = weak_approx(field, [("val", pl, v // 2) for pl, v in mod_vals])
        p = p1 / (r * r)

    if not in_Psi(p, q, ctx):
        raise InvariantFailure(f"pair witness at {p0}: (p, q) escaped Psi")
    delta = pair_delta_places(p, q, ctx)
    if delta != (p0,):
        raise InvariantFailure(
            f"pair witness delta should be exactly {{{p0}}}, got {[str(x) for x in delta]}")
    ring = WitnessRing(kind="pair", field=field, delta=delta, p=p, q=q)
    return p, q, ring


# ---- the decision procedure --------------------------------------------------------

@dataclass(frozen=True)
class Witness:
    """A certified non-integrality record: t has a pole on all of ring.delta.

    y = 1/t lies in the Jacobson radical of the ring (valuations recorded),
    so t fails the ring's universal formula: some y in J(R) has t*y = 1.
    """

    t: NfElem
    y: NfElem
    bad_prime: Place
    ring: WitnessRing
    valuations: Tuple[Tuple[Place, int], ...]

    def to_text(self, ctx: RayContext) -> str:
        lines = ["ctx " + ln for ln in ctx.to_text().splitlines()]
        lines.extend(self.ring.to_lines())
        lines.append(f"t {render_elem(self.t)}")
        lines.append(f"y {render_elem(self.y)}")
        lines.append(f"bad_prime {self.bad_prime}")
        for pl, v in self.valuations:
            lines.append(f"val {pl} = {v}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> Tuple["Witness", RayContext]:
        ctx_lines: List[str] = []
        ring_rows: Dict[str, str] = {}
        rows: Dict[str, str] = {}
        vals: List[Tuple[str, int]] = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("ctx "):
                ctx_lines.append(line[len("ctx "):])
            elif line.startswith("ring "):
                key, _, val = line[len("ring "):].partition(" ")
                ring_rows[key] = val.strip()
            elif line.startswith("val "):
                inner, _, v_txt = line[len("val "):].partition("=")
                vals.append((inner.strip(), int(v_txt.strip())))
            else:
                key, _, val = line.partition(" ")
                rows[key] = val.strip()
        ctx = RayContext.from_text("\n".join(ctx_lines))
        field = ctx.field
        ring = WitnessRing.from_lines(field, ring_rows)
        witness = cls(
            t=parse_elem(field, rows["t"]),
            y=parse_elem(field, rows["y"]),
            bad_prime=parse_place(field, rows["bad_prime"]),
            ring=ring,
            valuations=tuple((parse_place(field, s), v) for s, v in vals),
        )
        verify_witness(witness, ctx)
        return witness, ctx


def verify_witness(w: Witness, ctx: RayContext) -> bool:
    """Re-derive every claim in the witness from scratch; raise on any failure."""
    if w.t * w.y != 1:
        raise InvariantFailure("t*y = 1 fails, the certificate is vacuous")
    if w.t.is_integral():
        raise InvariantFailure(f"t = {w.t} is integral; nothing to witness")
    w.ring.verify(ctx)
    if w.bad_prime not in w.ring.delta:
        raise InvariantFailure(f"bad prime {w.bad_prime} is outside the ring delta")
    recorded = dict(w.valuations)
    for pl in w.ring.delta:
        v = valuation(w.y, pl)
        if v < 1:
            raise InvariantFailure(f"y = {w.y} is not in the radical: v = {v} at {pl}")
        if recorded.get(pl) != v:
            raise InvariantFailure(f"recorded valuation at {pl} is stale")
        if valuation(w.t, pl) >= 0:
            raise InvariantFailure(f"t has no pole at {pl} despite the delta claim")
    return True


_RING_CACHE: Dict[tuple, WitnessRing] = {}


def _ring_for(p0: Place, ctx: RayContext) -> WitnessRing:
    key = (ctx.field.spec, render_elem(ctx.a), render_elem(ctx.b), str(p0))
    if key not in _RING_CACHE:
        if ctx.modulus.divides(p0):
            ring = WitnessRing(kind="localization", field=ctx.field, delta=(p0,), place=p0)
        elif artin_label(p0, ctx).is_identity():
            _, _, ring = construct_pair_witness(p0, ctx)
        else:
            _, ring = construct_sigma_witness(p0, ctx)
        _RING_CACHE[key] = ring
    return _RING_CACHE[key]


def decide_integrality(t: NfElem, ctx: RayContext) -> Optional[Witness]:
    """None when t is integral; otherwise a verified non-integrality Witness.

    Search-bound exhaustion in the underlying constructions propagates as
    SearchExhausted ("undecided at this bound") -- it is never reported as
    integrality.
    """
    if not isinstance(t, NfElem) or t.field != ctx.field:
        raise DomainError("decide_integrality needs an element of the context field")
    if t.is_integral():
        return None
    poles = sorted((pl for pl, e in factor_ideal(t) if e < 0),
                   key=lambda pl: pl.sort_key())
    if not poles:
        raise InvariantFailure(f"{t} is non-integral yet pole-free")
    p0 = poles[0]
    ring = _ring_for(p0, ctx)
    y = ctx.field.one() / t
    w = Witness(
        t=t,
        y=y,
        bad_prime=p0,
        ring=ring,
        valuations=tuple((pl, valuation(y, pl)) for pl in ring.delta),
    )
    verify_witness(w, ctx)
    return w
