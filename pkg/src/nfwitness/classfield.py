"""Ray-class machinery for a master pair (a, b).

A modulus m = m0 * (real places) fixes the ray K_{m,1}: elements congruent
to 1 mod m0 and positive at the listed real embeddings.  On primes coprime
to m0 the Artin map of K(sqrt a, sqrt b)/K is the pair of quadratic residue
symbols ((a/.), (b/.)) valued in {+-1}^2, and it partitions those primes
into four classes.

The master pair is chosen so that a and b are totally positive, lie in
1 + 8*O_K (hence are dyadic local squares), are square-independent, have
disjoint support, and -- checked empirically, prime by prime -- populate
every (ideal class, Artin label) cell.  Under those conditions the
odd-valuation support of an element p, bucketed by label, coincides with
pairwise intersections of quaternion ramification sets; the definability
layer runs on that identification.

A caution found while validating: coprimality of (p) to m0 is not enough
for the identification.  At an odd modulus prime P with v_P(a*b) odd,
(p/P) = -1 puts P into two of the ramification intersections while the
partition, which exposes only primes coprime to m0, cannot contain it.
(Over Q with a = 17, b = 73: p = 3 has (3/17) = -1, and 17 then lands in
Delta(17,3) cap Delta(17*73,3) but in no partition cell.)  We call p
ADMISSIBLE when (p) is coprime to m0 and (p/P) = +1 at every such P, and
the audit refuses inadmissible inputs up front.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

from .errors import DomainError, InvariantFailure, SearchExhausted
from .ideals import (
    Ideal,
    Place,
    factor_ideal,
    ideal_class_index,
    ideal_class_representatives,
    is_principal,
    prime_places_up_to,
    real_places,
    reduce_elem,
    valuation,
)
from .qfield import (
    FieldCtx,
    NfElem,
    integral_elements,
    parse_elem,
    render_elem,
    sqrt_in_field,
)
from .symbols import delta_set, is_local_square

__all__ = [
    "GaloisLabel",
    "Modulus",
    "PrimePartition",
    "RayContext",
    "power_residue_symbol",
    "in_K_m1",
    "artin_label",
    "artin_label_ideal",
    "ray_equivalent",
    "prime_partition",
    "class_group",
    "is_principal",
    "find_prime",
    "select_ab",
    "is_admissible_p",
    "exact_identification_audit",
]

DEFAULT_PRIME_BOUND = 10**4
DEFAULT_UNIT_CAP = 200_000


@dataclass(frozen=True)
class GaloisLabel:
    """An element of Gal(K(sqrt a, sqrt b)/K) = {+-1} x {+-1}."""

    i: int
    j: int

    def __post_init__(self):
        if self.i not in (1, -1) or self.j not in (1, -1):
            raise DomainError(f"label components must be +-1, got ({self.i}, {self.j})")

    def __mul__(self, other: "GaloisLabel") -> "GaloisLabel":
        return GaloisLabel(self.i * other.i, self.j * other.j)

    def is_identity(self) -> bool:
        return self.i == 1 and self.j == 1

    @classmethod
    def identity(cls) -> "GaloisLabel":
        return cls(1, 1)

    @classmethod
    def all_labels(cls) -> Tuple["GaloisLabel", ...]:
        return (cls(1, 1), cls(1, -1), cls(-1, 1), cls(-1, -1))

    def __str__(self) -> str:
        return f"({self.i},{self.j})"


class Modulus:
    """m = m0 * (a set of real places), with m0 a nonzero integral ideal."""

    __slots__ = ("field", "m0", "reals", "_finite")

    def __init__(self, m0: Ideal, reals: Tuple[Place, ...] = ()):
        if not m0.is_integral():
            raise DomainError("modulus finite part must be an integral ideal")
        for pl in reals:
            if pl.kind != "real":
                raise DomainError(f"modulus infinite part must be real places, got {pl}")
        self.field = m0.field
        self.m0 = m0
        self.reals = tuple(sorted(set(reals), key=lambda p: p.sort_key()))
        self._finite = tuple(m0.factor())

    @classmethod
    def from_generator(cls, gen: NfElem, include_all_reals: bool = True) -> "Modulus":
        reals = tuple(real_places(gen.field)) if include_all_reals else ()
        return cls(Ideal.from_elem(gen), reals)

    def finite_factorization(self) -> Tuple[Tuple[Place, int], ...]:
        return self._finite

    def finite_places(self) -> Tuple[Place, ...]:
        return tuple(pl for pl, _ in self._finite)

    def exponent(self, place: Place) -> int:
        for pl, e in self._finite:
            if pl == place:
                return e
        return 0

    def divides(self, place: Place) -> bool:
        if place.kind == "real":
            return place in self.reals
        return self.exponent(place) > 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Modulus)
            and self.m0 == other.m0
            and self.reals == other.reals
        )

    def __hash__(self) -> int:
        return hash((self.m0, self.reals))

    def __str__(self) -> str:
        fin = (
            "*".join(f"{pl}^{e}" if e > 1 else str(pl) for pl, e in self._finite)
            or "(1)"
        )
        inf = "*".join(str(pl) for pl in self.reals)
        return f"{fin}*{inf}" if inf else fin


def power_residue_symbol(x: NfElem, place: Place) -> int:
    """The quadratic residue symbol (x/place) at an odd finite place.

    Computed literally as red(x)^((q-1)/2) in the residue field; the
    preconditions (odd place, x a unit there) force the answer to be +-1.
    """
    if not place.is_finite or place.p == 2:
        raise DomainError(f"power residue symbol needs an odd finite place, got {place}")
    if not x or valuation(x, place) != 0:
        raise DomainError(f"power residue symbol needs a unit at {place}, got {x}")
    r = reduce_elem(x, place)
    s = r ** ((place.residue_size - 1) // 2)
    F = r.field
    if s == F.one():
        return 1
    if s == -F.one():
        return -1
    raise InvariantFailure(f"Euler criterion returned a non-sign at {place}")


def in_K_m1(x: NfElem, modulus: Modulus) -> bool:
    """Ray membership: v(x - 1) >= v(m0) at each finite modulus place, and
    x positive at each listed real place."""
    if not x:
        raise DomainError("ray membership is for nonzero elements")
    diff = x - 1
    for pl, k in modulus.finite_factorization():
        if diff and valuation(diff, pl) < k:
            return False
    for pl in modulus.reals:
        if x.embedding_sign(pl.selector) <= 0:
            return False
    return True


# ---- the master-pair context ---------------------------------------------


class RayContext:
    """A validated master pair (a, b) with its modulus and cached class data.

    Build through `from_pair` (explicit pair, re-validated) or `select_ab`
    (deterministic search).  Treated as immutable once constructed.
    """

    __slots__ = ("field", "a", "b", "modulus", "class_reps", "coverage", "prime_bound")

    def __init__(self, *_args, **_kwargs):
        raise TypeError("use RayContext.from_pair or select_ab")

    @classmethod
    def from_pair(
        cls,
        field: FieldCtx,
        a: NfElem,
        b: NfElem,
        prime_bound: int = DEFAULT_PRIME_BOUND,
        check_coverage: bool = True,
    ) -> "RayContext":
        reason = _pair_violation(field, a, b)
        if reason is not None:
            raise DomainError(f"pair ({a}, {b}) rejected: {reason}")
        ctx = object.__new__(cls)
        ctx.field = field
        ctx.a = a
        ctx.b = b
        ctx.modulus = Modulus.from_generator(a * b * 8)
        ctx.class_reps = ideal_class_representatives(field)
        ctx.prime_bound = prime_bound
        ctx.coverage = {}
        for x in (a, b):  # consequence of 1 + 8*O_K, re-verified rather than trusted
            for pl in ctx.modulus.finite_places():
                if pl.is_dyadic and not is_local_square(x, pl):
                    raise InvariantFailure(
                        f"{x} lies in 1 + 8*O_K yet is not a square at {pl}"
                    )
        if check_coverage:
            for idx in range(len(ctx.class_reps)):
                for sigma in GaloisLabel.all_labels():
                    ctx.coverage[(idx, sigma)] = find_prime(idx, sigma, ctx, prime_bound)
        return ctx

    # -- canonical text record ----------------------------------------------

    def to_text(self) -> str:
        return "\n".join(
            [
                f"field {self.field.spec}",
                f"a {render_elem(self.a)}",
                f"b {render_elem(self.b)}",
                f"m0 {self.modulus}",
                f"prime_bound {self.prime_bound}",
            ]
        )

    @classmethod
    def from_text(cls, text: str) -> "RayContext":
        rows: Dict[str, str] = {}
        for line in text.strip().splitlines():
            line = line.strip()
            if line:
                key, _, val = line.partition(" ")
                rows[key] = val.strip()
        try:
            field = FieldCtx.parse(rows["field"])
            a = parse_elem(field, rows["a"])
            b = parse_elem(field, rows["b"])
        except (KeyError, ValueError) as exc:
            raise DomainError(f"bad context record: {exc}") from exc
        bound = int(rows.get("prime_bound", DEFAULT_PRIME_BOUND))
        ctx = cls.from_pair(field, a, b, prime_bound=bound)
        if "m0" in rows and rows["m0"] != str(ctx.modulus):
            raise DomainError(
                f"recorded modulus {rows['m0']!r} does not match recomputed {ctx.modulus}"
            )
        return ctx

    def __repr__(self) -> str:
        return f"<ray context a={self.a}, b={self.b} over {self.field.spec}>"


def _pair_violation(field: FieldCtx, a: NfElem, b: NfElem) -> Optional[str]:
    """The first violated selection condition, phrased for error messages;
    None when the pair is acceptable."""
    for name, x in (("a", a), ("b", b)):
        if not x:
            return f"{name} is zero"
        if x.field != field:
            return f"{name} belongs to {x.field.spec}, not {field.spec}"
        if not ((x - 1) / 8).is_integral():
            return f"{name} = {x} is not in 1 + 8*O_K (congruence condition)"
        for s in field.real_embedding_selectors():
            if x.embedding_sign(s) <= 0:
                return f"{name} = {x} is not totally positive (embedding {s})"
    for name, x in (("a", a), ("b", b), ("a*b", a * b)):
        if sqrt_in_field(x) is not None:
            return f"{name} = {x} is a square (independence condition)"
    support_a = {pl for pl, _ in factor_ideal(a)}
    support_b = {pl for pl, _ in factor_ideal(b)}
    common = support_a & support_b
    if common:
        shared = ", ".join(sorted(str(pl) for pl in common))
        return f"(a) and (b) share support at {shared} (disjointness condition)"
    return None


# ---- Artin labels ----------------------------------------------------------


def artin_label(place: Place, ctx: RayContext) -> GaloisLabel:
    """psi(place) = ((a/place), (b/place)) for a finite prime coprime to m0."""
    if not place.is_finite:
        raise DomainError("Artin labels are attached to finite places")
    if ctx.modulus.divides(place):
        raise DomainError(f"{place} divides the modulus; no Artin label")
    return GaloisLabel(
        power_residue_symbol(ctx.a, place), power_residue_symbol(ctx.b, place)
    )


def artin_label_ideal(x: Union[NfElem, Ideal], ctx: RayContext) -> GaloisLabel:
    """Multiplicative extension of the label to (x), or to an explicit ideal."""
    factors = factor_ideal(x) if isinstance(x, NfElem) else x.factor()
    out = GaloisLabel.identity()
    for pl, e in factors:
        if ctx.modulus.divides(pl):
            raise DomainError(f"ideal not coprime to the modulus at {pl}")
        if e % 2:
            out = out * artin_label(pl, ctx)
    return out


# ---- ray comparison of principal ideals ------------------------------------


def ray_equivalent(
    x: NfElem, y: NfElem, ctx: RayContext, unit_cap: int = DEFAULT_UNIT_CAP
) -> bool:
    """Do (x) and (y) fall in the same ray class mod m?

    Equivalent to: c*u lies in K_{m,1} for c = x/y and some unit u of O_K.
    The unit group is roots of unity times (for real quadratic fields) the
    powers of the fundamental unit eps; the eps-orbit is walked with integer
    coordinates reduced mod the rational integer A in m0, which is exact --
    (A) is contained in m0, so a reduced representative decides every
    congruence mod m0 -- while real signs are tracked separately by parity.
    Raises SearchExhausted if the orbit has not closed within unit_cap steps
    (the answer is then unknown, not False).
    """
    if not x or not y:
        raise DomainError("ray comparison is for nonzero elements")
    c = x / y
    for pl, _ in ctx.modulus.finite_factorization():
        if valuation(c, pl) != 0:
            return False
    field = ctx.field
    eps = field.fundamental_unit
    if eps is None:  # Q or imaginary quadratic: finitely many units
        return any(in_K_m1(c * z, ctx.modulus) for z in field.roots_of_unity)

    modulus = ctx.modulus
    A = modulus.m0.A  # smallest positive rational integer in m0; (A) <= m0
    w0, w1 = int(field.omega_sq0), int(field.omega_sq1)
    e0, e1 = int(eps.c0) % A, int(eps.c1) % A
    signs_c = tuple(c.embedding_sign(pl.selector) for pl in modulus.reals)
    signs_eps = tuple(eps.embedding_sign(pl.selector) for pl in modulus.reals)

    # cheap necessary congruence test at one modulus prime: u = c^{-1} there
    guard = max(modulus.finite_places(), key=lambda pl: pl.residue_size)
    target = reduce_elem(c, guard).inverse()
    red_eps = reduce_elem(eps, guard)

    def confirmed(z: int, r0: int, r1: int) -> bool:
        u = field.elem((z * r0) % A, (z * r1) % A)
        cu = c * u  # congruent to c * z * eps^k mod every pl^e dividing m0
        diff = cu - 1
        return all(
            not diff or valuation(diff, pl) >= k
            for pl, k in modulus.finite_factorization()
        )

    r0, r1 = 1 % A, 0
    red_u = reduce_elem(field.one(), guard)
    signs_k = tuple(1 for _ in signs_eps)
    for _step in range(unit_cap + 1):
        for z in (1, -1):
            if any(sc * sk * z < 0 for sc, sk in zip(signs_c, signs_k)):
                continue
            if red_u * z != target:
                continue
            if confirmed(z, r0, r1):
                return True
        r0, r1 = (r0 * e0 + r1 * e1 * w0) % A, (r0 * e1 + r1 * e0 + r1 * e1 * w1) % A
        red_u = red_u * red_eps
        signs_k = tuple(s * t for s, t in zip(signs_k, signs_eps))
        if r0 == 1 % A and r1 == 0 and all(s == 1 for s in signs_k):
            return False  # unit orbit closed mod m: every class examined
    raise SearchExhausted(
        f"unit orbit did not close mod the modulus within {unit_cap} steps"
    )


# ---- prime partition --------------------------------------------------------


@dataclass(frozen=True)
class PrimePartition:
    """Odd-valuation support of (p), bucketed by Artin label.

    Primes dividing the modulus carry no label and are reported apart.
    """

    by_label: Dict[GaloisLabel, FrozenSet[Place]]
    modulus_primes: FrozenSet[Place]

    def __getitem__(self, sigma: GaloisLabel) -> FrozenSet[Place]:
        return self.by_label[sigma]

    def all_odd_support(self) -> FrozenSet[Place]:
        out = set(self.modulus_primes)
        for part in self.by_label.values():
            out |= part
        return frozenset(out)


def prime_partition(p: NfElem, ctx: RayContext) -> PrimePartition:
    if not p:
        raise DomainError("prime partition is for nonzero elements")
    buckets: Dict[GaloisLabel, set] = {s: set() for s in GaloisLabel.all_labels()}
    unlabeled = set()
    for pl, e in factor_ideal(p):
        if e % 2 == 0:
            continue
        if ctx.modulus.divides(pl):
            unlabeled.add(pl)
        else:
            buckets[artin_label(pl, ctx)].add(pl)
    return PrimePartition(
        by_label={s: frozenset(v) for s, v in buckets.items()},
        modulus_primes=frozenset(unlabeled),
    )


def class_group(field: FieldCtx) -> Tuple[Ideal, ...]:
    """Representatives of every ideal class, unit class first.

    Principality of any ideal is decided exactly by `is_principal`
    (re-exported here); together these are the class data the coverage
    condition quantifies over.
    """
    return ideal_class_representatives(field)


# ---- deterministic prime search ----------------------------------------------


def find_prime(
    cls_: Union[int, Ideal],
    sigma: GaloisLabel,
    ctx: RayContext,
    norm_bound: Optional[int] = None,
) -> Place:
    """The first prime (by norm, then the global place order) coprime to m0,
    in the requested ideal class, with Artin label sigma."""
    bound = norm_bound if norm_bound is not None else ctx.prime_bound
    idx = cls_ if isinstance(cls_, int) else ideal_class_index(cls_)
    if not 0 <= idx < len(ctx.class_reps):
        raise DomainError(f"ideal class index {idx} out of range")
    for pl in prime_places_up_to(ctx.field, bound):
        if ctx.modulus.divides(pl):
            continue
        if artin_label(pl, ctx) != sigma:
            continue
        if ideal_class_index(pl.ideal()) != idx:
            continue
        return pl
    raise SearchExhausted(
        f"no prime of class {idx} and label {sigma} with norm <= {bound}"
    )


# ---- master-pair selection ------------------------------------------------------


def _candidate_stream(field: FieldCtx, height_cap: int) -> Iterator[NfElem]:
    """x = 1 + 8*m over integral m != 0, by increasing coordinate height."""
    for h in range(1, height_cap + 1):
        for m in integral_elements(field, h):
            if m and m.height == h:
                yield field.one() + m * 8


def _single_violation(field: FieldCtx, x: NfElem) -> Optional[str]:
    for s in field.real_embedding_selectors():
        if x.embedding_sign(s) <= 0:
            return "not totally positive"
    if sqrt_in_field(x) is not None:
        return "square"
    return None


def select_ab(
    field: FieldCtx,
    prime_bound: int = DEFAULT_PRIME_BOUND,
    height_cap: int = 64,
    max_pairs: int = 40,
) -> RayContext:
    """Deterministically pick the master pair: candidates 1 + 8*m stream by
    height; each new arrival is paired with every earlier survivor, and the
    first pair passing all selection conditions whose (class, label) table
    fills within the prime bound wins."""
    failures = 0
    survivors: List[NfElem] = []
    for x in _candidate_stream(field, height_cap):
        if _single_violation(field, x) is not None:
            continue
        for a in survivors:
            if _pair_violation(field, a, x) is not None:
                continue
            try:
                return RayContext.from_pair(field, a, x, prime_bound=prime_bound)
            except SearchExhausted:
                failures += 1
                if failures >= max_pairs:
                    raise SearchExhausted(
                        f"no pair filled its (class, label) table within norm "
                        f"{prime_bound} after {failures} candidate pairs"
                    ) from None
        survivors.append(x)
    raise SearchExhausted(
        f"candidate stream exhausted (height cap {height_cap}) without a valid pair"
    )


# ---- exact identification audit ----------------------------------------------------


def is_admissible_p(p: NfElem, ctx: RayContext) -> Tuple[bool, str]:
    """Admissibility of p for the exact identification: (p) coprime to m0,
    and (p/P) = +1 at every odd modulus prime P where v_P(a*b) is odd."""
    if not p:
        return False, "p = 0"
    for pl, _ in ctx.modulus.finite_factorization():
        if valuation(p, pl) != 0:
            return False, f"(p) is not coprime to the modulus at {pl}"
    ab = ctx.a * ctx.b
    for pl, _ in ctx.modulus.finite_factorization():
        if pl.p == 2:
            continue
        if valuation(ab, pl) % 2 and power_residue_symbol(p, pl) != 1:
            return False, f"(p/{pl}) = -1 at the odd-valuation modulus prime {pl}"
    return True, ""


def exact_identification_audit(p: NfElem, ctx: RayContext) -> Dict[str, List[str]]:
    """Verify, for admissible p, the three identities

        partition bucket (-1,-1)  =  Delta(a,p)  cap Delta(b,p)
        partition bucket (-1,+1)  =  Delta(a,p)  cap Delta(a*b,p)
        partition bucket (+1,-1)  =  Delta(b,p)  cap Delta(a*b,p)

    with both sides computed independently.  Returns {label: sorted places}
    on success; inadmissible p is refused (DomainError) and a genuine
    mismatch raises InvariantFailure.
    """
    ok, why = is_admissible_p(p, ctx)
    if not ok:
        raise DomainError(f"p = {p} is not admissible: {why}")
    parts = prime_partition(p, ctx)
    assert not parts.modulus_primes  # coprimality was just checked
    a, b, ab = ctx.a, ctx.b, ctx.a * ctx.b
    cases = (
        (GaloisLabel(-1, -1), a, b),
        (GaloisLabel(-1, 1), a, ab),
        (GaloisLabel(1, -1), b, ab),
    )
    report: Dict[str, List[str]] = {}
    for sigma, u, v in cases:
        lhs = parts[sigma]
        rhs = frozenset(delta_set(u, p)) & frozenset(delta_set(v, p))
        if lhs != rhs:
            raise InvariantFailure(
                f"identification failed at {sigma}: partition gives "
                f"{sorted(map(str, lhs))} but symbols give {sorted(map(str, rhs))}"
            )
        report[str(sigma)] = sorted(str(q) for q in lhs)
    return report
