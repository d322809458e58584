"""Places, fractional ideals, valuations, residue fields and local rings.

Finite places are prime ideals with explicit two-element generator data;
ideals are 2x2 integer Hermite-normal-form lattices with a rational
denominator.  Everything reduces to exact integer arithmetic; completions
are represented only through valuation / residue / sign predicates.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import lru_cache
from typing import Iterator, List, Optional, Tuple

from sympy import factorint, isprime, jacobi_symbol, primerange, sqrt_mod

from nfwitness.gf import GF, GFElem
from nfwitness.qfield import FieldCtx, NfElem, parse_elem, render_elem

__all__ = [
    "Place",
    "Ideal",
    "factor_rational_prime",
    "places_above",
    "real_places",
    "all_dyadic_places",
    "prime_places_up_to",
    "valuation",
    "reduce_elem",
    "residue_field",
    "uniformizer",
    "hensel_root",
    "LocalRing",
    "local_ring",
    "factor_ideal",
    "ideal_class_representatives",
    "is_principal",
    "ideal_class_index",
    "legendre",
    "vp_int",
    "vp_frac",
    "parse_place",
]


# ---- rational-prime plumbing -------------------------------------------------

def vp_int(n: int, p: int) -> int:
    """Exponent of p in a nonzero integer."""
    assert n != 0
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def vp_frac(x: Fraction, p: int) -> int:
    assert x != 0
    return vp_int(x.numerator, p) - vp_int(x.denominator, p)


def legendre(a: int, p: int) -> int:
    """Legendre symbol (a/p) for odd prime p."""
    assert p % 2 == 1
    return int(jacobi_symbol(a, p))


def _kronecker_disc(disc: int, p: int) -> int:
    """Kronecker symbol (disc/p) of a fundamental discriminant at a prime."""
    if p == 2:
        if disc % 2 == 0:
            return 0
        return 1 if disc % 8 in (1, 7) else -1
    if disc % p == 0:
        return 0
    return legendre(disc, p)


# ---- places --------------------------------------------------------------------

class Place:
    """A place of K: finite (prime ideal data) or archimedean.

    Finite places carry the residue characteristic p, ramification index e,
    residue degree f and a root r of the minimal polynomial of w mod p
    (None for inert places).  Real places carry the embedding selector:
    which sign sqrt(d) is sent to (+1 for Q).
    """

    __slots__ = ("field", "kind", "p", "e", "f", "r", "selector")

    def __init__(self, field, kind, p=None, e=None, f=None, r=None, selector=None):
        self.field = field
        self.kind = kind  # "finite" | "real" | "complex"
        self.p = None if p is None else int(p)
        self.e = None if e is None else int(e)
        self.f = None if f is None else int(f)
        self.r = None if r is None else int(r)
        self.selector = None if selector is None else int(selector)

    # -- constructors ----------------------------------------------------------

    @classmethod
    def finite(cls, field, p, e, f, r=None) -> "Place":
        return cls(field, "finite", p=p, e=e, f=f, r=r)

    @classmethod
    def real(cls, field, selector=1) -> "Place":
        return cls(field, "real", selector=selector)

    @classmethod
    def complex_place(cls, field) -> "Place":
        return cls(field, "complex")

    # -- basic data -------------------------------------------------------------

    @property
    def is_finite(self) -> bool:
        return self.kind == "finite"

    @property
    def is_real(self) -> bool:
        return self.kind == "real"

    @property
    def is_dyadic(self) -> bool:
        return self.kind == "finite" and self.p == 2

    @property
    def residue_size(self) -> int:
        assert self.is_finite
        return self.p**self.f

    @property
    def split_type(self) -> str:
        assert self.is_finite
        if self.field.is_rational:
            return "rational"
        if self.e == 2:
            return "ramified"
        return "inert" if self.f == 2 else "split"

    def gens(self) -> Tuple[NfElem, NfElem]:
        """Two-element generator pair (p, w - r); second entry 0 when (p) itself."""
        f = self.field
        if f.is_rational or self.r is None:
            return (f.elem(self.p), f.zero())
        return (f.elem(self.p), f.omega() - self.r)

    def ideal(self) -> "Ideal":
        return Ideal.from_gens(self.field, [g for g in self.gens() if g])

    def sort_key(self):
        if self.kind == "finite":
            return (0, self.p, self.r if self.r is not None else -1)
        if self.kind == "real":
            return (1, -self.selector)
        return (2, 0)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Place)
            and self.field == other.field
            and self.kind == other.kind
            and (self.p, self.e, self.f, self.r, self.selector)
            == (other.p, other.e, other.f, other.r, other.selector)
        )

    def __hash__(self) -> int:
        return hash((self.field, self.kind, self.p, self.e, self.f, self.r, self.selector))

    def __str__(self) -> str:
        if self.kind == "real":
            if self.field.is_rational:
                return "oo"
            return "oo+" if self.selector == 1 else "oo-"
        if self.kind == "complex":
            return "oo_c"
        if self.field.is_rational:
            return str(self.p)
        if self.r is None:
            return f"({self.p})"
        gen2 = render_elem(self.field.omega() - self.r).replace(" ", "")
        return f"({self.p},{gen2})"

    def __repr__(self) -> str:
        return f"<place {self} of {self.field.spec}>"


@lru_cache(maxsize=None)
def factor_rational_prime(field: FieldCtx, p: int) -> Tuple[Tuple[Place, int, int], ...]:
    """Split/inert/ramified decomposition of (p), by the Kronecker symbol."""
    assert isprime(p), f"{p} is not prime"
    if field.is_rational:
        return ((Place.finite(field, p, 1, 1), 1, 1),)
    sym = _kronecker_disc(field.disc, p)
    t, n = field.omega_trace, field.omega_norm
    if sym == -1:
        return ((Place.finite(field, p, 1, 2), 1, 2),)
    if sym == 0:
        # double root of x^2 - t x + n mod p
        if p == 2:
            r = field.d % 2
        else:
            r = (t * pow(2, -1, p)) % p
        assert (r * r - t * r + n) % p == 0
        pl = Place.finite(field, p, 2, 1, r=r)
        return ((pl, 2, 1),)
    # split
    if p == 2:
        roots = [0, 1]
    else:
        disc_poly = (t * t - 4 * n) % p
        s = sqrt_mod(disc_poly, p)
        inv2 = pow(2, -1, p)
        roots = sorted({(t + s) * inv2 % p, (t - s) * inv2 % p})
    assert len(roots) == 2
    out = []
    for r in roots:
        assert (r * r - t * r + n) % p == 0
        out.append((Place.finite(field, p, 1, 1, r=r), 1, 1))
    return tuple(out)


def places_above(field: FieldCtx, p: int) -> List[Place]:
    return [pl for pl, _, _ in factor_rational_prime(field, p)]


def real_places(field: FieldCtx) -> List[Place]:
    return [Place.real(field, s) for s in field.real_embedding_selectors()]


def all_dyadic_places(field: FieldCtx) -> List[Place]:
    return places_above(field, 2)


def prime_places_up_to(field: FieldCtx, bound: int) -> List[Place]:
    """All finite places of norm <= bound, sorted by (norm, p, root)."""
    out = []
    for p in primerange(2, bound + 1):
        for pl in places_above(field, p):
            if pl.residue_size <= bound:
                out.append(pl)
    return sorted(out, key=lambda v: (v.residue_size, v.sort_key()))


_PLACE_FINITE_RE = re.compile(r"^\((\d+)(?:,(.+))?\)$")


def parse_place(field: FieldCtx, text: str) -> Place:
    """Parse a place name as rendered by str(): "5", "(5,-3+w)", "(3)", "oo+"."""
    s = text.strip().replace(" ", "")
    if s in ("oo", "oo+", "oo-"):
        sels = field.real_embedding_selectors()
        if not sels:
            raise ValueError(f"{field.spec} has no real places")
        if s == "oo":
            if len(sels) > 1:
                raise ValueError("ambiguous real place; use oo+ or oo-")
            return Place.real(field, sels[0])
        sel = 1 if s == "oo+" else -1
        if sel not in sels:
            raise ValueError(f"no real place {s} in {field.spec}")
        return Place.real(field, sel)
    m = _PLACE_FINITE_RE.match(s)
    if m:
        p = int(m.group(1))
        cands = places_above(field, p)
        if m.group(2) is None:
            if len(cands) > 1:
                raise ValueError(f"prime {p} splits; name the place as ({p},...)")
            return cands[0]
        gen2 = parse_elem(field, m.group(2))
        for pl in cands:
            if pl.r is not None and field.omega() - pl.r == gen2:
                return pl
        raise ValueError(f"no place of {field.spec} named {text!r}")
    if s.isdigit():
        p = int(s)
        cands = places_above(field, p)
        if len(cands) > 1:
            raise ValueError(f"prime {p} splits; name the place as ({p},...)")
        return cands[0]
    raise ValueError(f"cannot parse place {text!r}")


# ---- fractional ideals -----------------------------------------------------------

def _ext_combine(r1: Tuple[int, int], r2: Tuple[int, int]) -> Tuple[int, int]:
    """A row in the lattice spanned by r1, r2 whose second entry is
    gcd(r1[1], r2[1]) >= 0."""
    a, b = r1[1], r2[1]
    if b == 0:
        return r1 if a >= 0 else (-r1[0], -r1[1])
    g, u, v = _extgcd(a, b)
    return (u * r1[0] + v * r2[0], g)


def _extgcd(a: int, b: int) -> Tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _hnf_rows(rows: List[Tuple[int, int]]) -> Tuple[int, int, int]:
    """HNF basis {(A,0), (B,C)} of the lattice spanned by integer rows."""
    rows = [r for r in rows if r != (0, 0)]
    assert rows, "zero lattice"
    cur = (0, 0)
    for r in rows:
        cur = _ext_combine(cur, r)
    B0, C = cur
    assert C > 0, "lattice has rank < 2 in the w-direction"
    firsts = []
    for r in rows:
        k = r[1] // C
        firsts.append(r[0] - k * B0)
    A = 0
    for x in firsts:
        A = math.gcd(A, x)
    assert A > 0, "lattice has rank < 2"
    return A, B0 % A, C


class Ideal:
    """A nonzero fractional ideal: (1/den) * (integral HNF lattice {A, B + C*w}).

    For Q the lattice degenerates to a positive rational generator, stored
    as num/den with A = num, B = C = 0.
    """

    __slots__ = ("field", "den", "A", "B", "C")

    def __init__(self, field: FieldCtx, den: int, A: int, B: int, C: int):
        assert den >= 1 and A >= 1
        self.field = field
        if field.is_rational:
            g = math.gcd(A, den)
            self.den, self.A, self.B, self.C = den // g, A // g, 0, 0
        else:
            assert C >= 1
            g = math.gcd(math.gcd(A, math.gcd(B, C)), den)
            self.den, self.A, self.B, self.C = den // g, A // g, (B // g) % (A // g), C // g

    # -- constructors -------------------------------------------------------------

    @classmethod
    def unit_ideal(cls, field: FieldCtx) -> "Ideal":
        if field.is_rational:
            return cls(field, 1, 1, 0, 0)
        return cls(field, 1, 1, 0, 1)

    @classmethod
    def from_gens(cls, field: FieldCtx, gens) -> "Ideal":
        gens = [g if isinstance(g, NfElem) else field.elem(g) for g in gens]
        gens = [g for g in gens if g]
        assert gens, "zero ideal"
        if field.is_rational:
            den = math.lcm(*[g.c0.denominator for g in gens])
            nums = [abs(int(g.c0 * den)) for g in gens]
            return cls(field, den, math.gcd(*nums) if len(nums) > 1 else nums[0], 0, 0)
        den = 1
        for g in gens:
            den = math.lcm(den, g.c0.denominator, g.c1.denominator)
        rows = []
        w = field.omega()
        for g in gens:
            for h in (g * den, g * den * w):
                rows.append((int(h.c0), int(h.c1)))
        A, B, C = _hnf_rows(rows)
        # ideal lattices satisfy C | A and C | B
        assert A % C == 0 and B % C == 0, "generated lattice is not an ideal"
        return cls(field, den, A, B, C)

    @classmethod
    def from_elem(cls, x: NfElem) -> "Ideal":
        assert x, "zero ideal"
        return cls.from_gens(x.field, [x])

    # -- ring-ish operations ---------------------------------------------------------

    def basis(self) -> List[NfElem]:
        f = self.field
        if f.is_rational:
            return [f.elem(Fraction(self.A, self.den))]
        return [
            f.elem(Fraction(self.A, self.den)),
            f.elem(Fraction(self.B, self.den), Fraction(self.C, self.den)),
        ]

    def __mul__(self, other: "Ideal") -> "Ideal":
        assert self.field == other.field
        gens = [x * y for x in self.basis() for y in other.basis()]
        return Ideal.from_gens(self.field, gens)

    def __pow__(self, k: int) -> "Ideal":
        assert k >= 0
        res = Ideal.unit_ideal(self.field)
        base = self
        while k:
            if k & 1:
                res = res * base
            base = base * base
            k >>= 1
        return res

    def conj(self) -> "Ideal":
        return Ideal.from_gens(self.field, [x.conj() for x in self.basis()])

    def norm(self) -> Fraction:
        if self.field.is_rational:
            return Fraction(self.A, self.den)
        return Fraction(self.A * self.C, self.den**2)

    def contains(self, x: NfElem) -> bool:
        y = x * self.den
        if self.field.is_rational:
            return y.c0.denominator == 1 and int(y.c0) % self.A == 0
        if y.c0.denominator != 1 or y.c1.denominator != 1:
            return False
        u0, u1 = int(y.c0), int(y.c1)
        if u1 % self.C != 0:
            return False
        u0 -= (u1 // self.C) * self.B
        return u0 % self.A == 0

    def is_integral(self) -> bool:
        return self.den == 1

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Ideal)
            and self.field == other.field
            and (self.den, self.A, self.B, self.C) == (other.den, other.A, other.B, other.C)
        )

    def __hash__(self) -> int:
        return hash((self.field, self.den, self.A, self.B, self.C))

    def factor(self) -> List[Tuple[Place, int]]:
        """(self) = prod place^e, as a sorted association list (exact)."""
        out = []
        # support from the integral part's norm and the denominator separately:
        # conjugate-place valuations can cancel inside norm(self).
        support = sorted(set(factorint(self.A * max(self.C, 1))) | set(factorint(self.den)))
        for p in support:
            for pl in places_above(self.field, p):
                e = min(valuation(g, pl) for g in self.basis())
                if e:
                    out.append((pl, e))
        return sorted(out, key=lambda t: t[0].sort_key())

    def __str__(self) -> str:
        if self.field.is_rational:
            return f"({Fraction(self.A, self.den)})"
        gens = ", ".join(render_elem(g) for g in self.basis())
        return f"[{gens}]"

    def __repr__(self) -> str:
        return f"<ideal {self} of {self.field.spec}>"


def factor_ideal(x: NfElem) -> List[Tuple[Place, int]]:
    """Factor the principal fractional ideal (x); sorted, exact."""
    assert x, "zero element has no ideal factorization"
    f = x.field
    # scale to an integral element: conjugate-place valuations can cancel in
    # norm(x), so the support must include the coordinate denominator's primes
    a, b, c = x.coords_int()
    y = x * c
    support = sorted(set(factorint(abs(int(y.norm())))) | set(factorint(c)))
    out = []
    for p in support:
        for pl in places_above(f, p):
            e = valuation(x, pl)
            if e:
                out.append((pl, e))
    return sorted(out, key=lambda t: t[0].sort_key())


# ---- valuations and residues ---------------------------------------------------------

def valuation(x: NfElem, place: Place) -> int:
    """Exponent of the place in the fractional ideal (x); x != 0."""
    assert place.is_finite
    assert x, "valuation of zero"
    p = place.p
    if x.field.is_rational:
        return vp_frac(x.c0, p)
    typ = place.split_type
    if typ == "inert":
        vals = [vp_frac(c, p) for c in (x.c0, x.c1) if c != 0]
        return min(vals)
    if typ == "ramified":
        return vp_frac(x.norm(), p)
    # split
    m = min(vp_frac(c, p) for c in (x.c0, x.c1) if c != 0)
    y = x * Fraction(1, p) ** m if m >= 0 else x * p ** (-m)
    # y has p-integral coordinates, not both divisible by p
    a = (y.c0.numerator * pow(y.c0.denominator, -1, p)) % p
    b = (y.c1.numerator * pow(y.c1.denominator, -1, p)) % p
    if (a + b * place.r) % p != 0:
        return m
    return m + vp_frac(y.norm(), p)


@lru_cache(maxsize=None)
def residue_field(place: Place) -> GF:
    assert place.is_finite
    f = place.field
    if place.f == 2:
        t, n = f.omega_trace, f.omega_norm
        return GF(place.p, (n % place.p, (-t) % place.p, 1))
    r = 0 if place.r is None else place.r
    return GF(place.p, ((-r) % place.p, 1))


def reduce_elem(x: NfElem, place: Place) -> GFElem:
    """Reduction O_v cap K -> F_v; requires valuation(x, place) >= 0."""
    assert place.is_finite
    F = residue_field(place)
    p = place.p
    if not x:
        return F.zero()
    if valuation(x, place) < 0:
        raise ValueError(f"negative valuation at {place}; cannot reduce")
    if x.field.is_rational:
        return F.elem(x.c0.numerator * pow(x.c0.denominator, -1, p))
    if place.split_type == "inert":
        a = x.c0.numerator * pow(x.c0.denominator, -1, p)
        b = x.c1.numerator * pow(x.c1.denominator, -1, p)
        return F.elem((a % p, b % p))
    # f = 1 with a root: use the deep local reduction at precision 1
    val = local_ring(place, 1).reduce(x)
    return F.elem(val[0])


def hensel_root(place: Place, precision: int) -> int:
    """The root of w's minimal polynomial mod p^precision lifting place.r.

    Only split places admit the lift (simple root); precision 1 works for
    ramified places too.
    """
    assert place.is_finite and place.r is not None
    p, t, n = place.p, place.field.omega_trace, place.field.omega_norm
    target = p**precision
    if precision == 1 or place.e == 2:
        assert precision == 1, "ramified double roots do not lift"
        return place.r
    r = place.r
    mod = p
    while mod < target:
        mod = min(mod * mod, target)
        deriv = (2 * r - t) % mod
        r = (r - (r * r - t * r + n) * pow(deriv, -1, mod)) % mod
    assert (r * r - t * r + n) % target == 0
    return r % target


@lru_cache(maxsize=None)
def uniformizer(place: Place) -> NfElem:
    """A global element g with v_place(g) = 1; for split places additionally
    v(g) = 0 at the conjugate place."""
    assert place.is_finite
    f = place.field
    if f.is_rational or place.split_type == "inert":
        return f.elem(place.p)
    g = f.omega() - place.r
    if place.split_type == "ramified":
        assert valuation(g, place) == 1
        return g
    if valuation(g, place) > 1:
        g = g - place.p
    assert valuation(g, place) == 1
    return g


# ---- local rings O/p^k ------------------------------------------------------------

class LocalRing:
    """The finite ring O/p^k at a finite place, with canonical box representatives.

    Representatives are pairs (i, j), 0 <= i < A, 0 <= j < C, standing for
    i + j*w modulo the HNF lattice {A, B + C*w} of the ideal p^k.  For Q
    and for split places C = 1 and representatives are plain integers mod
    the norm.
    """

    def __init__(self, place: Place, k: int):
        assert place.is_finite and k >= 1
        self.place = place
        self.k = k
        self.field = place.field
        if self.field.is_rational:
            self.A, self.B, self.C = place.p**k, 0, 1
        else:
            lat = place.ideal() ** k
            assert lat.den == 1
            self.A, self.B, self.C = lat.A, lat.B, lat.C
        self.size = self.A * self.C

    # -- representative plumbing ----------------------------------------------------

    def _box(self, u0: int, u1: int) -> Tuple[int, int]:
        j = u1 % self.C
        u0 -= ((u1 - j) // self.C) * self.B
        return (u0 % self.A, j)

    def reduce(self, x: NfElem) -> Tuple[int, int]:
        """Canonical representative of x in O/p^k; requires v(x) >= 0."""
        p, k = self.place.p, self.k
        if x.field.is_rational:
            num, den = x.c0.numerator, x.c0.denominator
            s = vp_int(den, p) if den % p == 0 else 0
            K = k + s
            t = pow(den // p**s, -1, p**K)
            z = num * t
            if s:
                if z % p**s:
                    raise ValueError("negative valuation; cannot reduce")
                z //= p**s
            return (z % p**k, 0)
        den = math.lcm(x.c0.denominator, x.c1.denominator)
        X, Y = int(x.c0 * den), int(x.c1 * den)
        s = vp_int(den, p) if den % p == 0 else 0
        nprime = den // p**s
        typ = self.place.split_type
        if typ == "split":
            K = k + s
            t = pow(nprime, -1, p**K)
            rK = hensel_root(self.place, K)
            val = (X + Y * rK) * t % p**K
            if s:
                if val % p**s:
                    raise ValueError("negative valuation; cannot reduce")
                val //= p**s
            return (val % p**k, 0)
        # inert or ramified: single place above p, so dividing by p^s is exact
        K = k + s * (2 if typ == "ramified" else 1)
        t = pow(nprime, -1, p ** (K + s))
        z0, z1 = X * t, Y * t
        if s:
            if z0 % p**s or z1 % p**s:
                raise ValueError("negative valuation; cannot reduce")
            z0, z1 = z0 // p**s, z1 // p**s
        return self._box(z0, z1)

    def elem_of(self, rep: Tuple[int, int]) -> NfElem:
        f = self.field
        if f.is_rational:
            return f.elem(rep[0])
        return f.elem(rep[0], rep[1])

    def elements(self) -> Iterator[Tuple[int, int]]:
        for i in range(self.A):
            for j in range(self.C):
                yield (i, j)

    def mul(self, r1: Tuple[int, int], r2: Tuple[int, int]) -> Tuple[int, int]:
        return self.reduce(self.elem_of(r1) * self.elem_of(r2))

    def add(self, r1: Tuple[int, int], r2: Tuple[int, int]) -> Tuple[int, int]:
        return self.reduce(self.elem_of(r1) + self.elem_of(r2))

    def is_unit(self, rep: Tuple[int, int]) -> bool:
        return valuation_of_rep(self, rep) == 0

    def __repr__(self) -> str:
        return f"<O/{self.place}^{self.k}, size {self.size}>"


def valuation_of_rep(ring: LocalRing, rep: Tuple[int, int]) -> int:
    """min(v(representative), k) — the valuation of the class, capped at k."""
    x = ring.elem_of(rep)
    if not x:
        return ring.k
    return min(valuation(x, ring.place), ring.k)


@lru_cache(maxsize=None)
def local_ring(place: Place, k: int) -> LocalRing:
    return LocalRing(place, k)


# ---- class group (desk scale) ----------------------------------------------------------

def _ceil_frac(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


@lru_cache(maxsize=None)
def _omega_upper(field: FieldCtx) -> Fraction:
    """A rational upper bound for the identity embedding of w (d > 0)."""
    assert field.is_real_quadratic
    s = math.isqrt(field.d) + 1  # > sqrt(d)
    if field.d % 4 == 1:
        return Fraction(1 + s, 2)
    return Fraction(s)


def is_principal(I: Ideal) -> Tuple[bool, Optional[NfElem]]:
    """Principality with certificate: (True, generator) or (False, None).

    Quadratic case scans the finitely many norm-form solutions in a box
    that is exhaustive: positive-definite for d < 0, fundamental-unit
    window for d > 0.  Exhausting the box certifies non-principality.
    """
    f = I.field
    if f.is_rational:
        return True, f.elem(Fraction(I.A, I.den))
    # reduce to the integral part
    J = Ideal(f, 1, I.A, I.B, I.C)
    N = int(J.norm())
    t, n = f.omega_trace, f.omega_norm
    targets = [N] if f.d < 0 else [N, -N]
    if f.d < 0:
        b_max = math.isqrt(4 * N // abs(f.disc))
    else:
        eps_up = f.fundamental_unit.c0 + f.fundamental_unit.c1 * _omega_upper(f)
        R = Fraction(math.isqrt(N) + 1) * eps_up
        b2 = 4 * R * R / f.disc
        b_max = math.isqrt(_ceil_frac(b2)) + 1
    for b in range(-b_max, b_max + 1):
        for tgt in targets:
            # a^2 + t a b + (n b^2 - tgt) = 0
            disc_a = t * t * b * b - 4 * (n * b * b - tgt)
            if disc_a < 0:
                continue
            s = math.isqrt(disc_a)
            if s * s != disc_a:
                continue
            for sgn in (1, -1):
                num = -t * b + sgn * s
                if num % 2:
                    continue
                x = f.elem(num // 2, b)
                if x and J.contains(x) and abs(x.norm()) == N:
                    if Ideal.from_elem(x) == J:
                        gen = x * Fraction(1, I.den)
                        assert Ideal.from_elem(gen) == I
                        return True, gen
    return False, None


@lru_cache(maxsize=None)
def ideal_class_representatives(field: FieldCtx) -> Tuple[Ideal, ...]:
    """Representatives of the ideal class group, unit class first.

    Generated by the prime ideals of norm <= the Minkowski bound and closed
    under multiplication, with principality decided by the certified
    norm-form scan.
    """
    reps = [Ideal.unit_ideal(field)]
    if field.is_rational:
        return tuple(reps)
    bound = int(field.minkowski_bound)
    gens = [pl.ideal() for pl in prime_places_up_to(field, bound)]

    def class_index(I: Ideal) -> Optional[int]:
        for idx, rep in enumerate(reps):
            if is_principal(I * rep.conj())[0]:
                return idx
        return None

    for g in gens:
        if class_index(g) is None:
            reps.append(g)
    # close under products (h is tiny at desk scale, but be thorough)
    for guard in range(10):
        added = False
        for a in list(reps):
            for b in list(reps):
                if class_index(a * b) is None:
                    reps.append(a * b)
                    added = True
        if not added:
            return tuple(reps)
    raise RuntimeError("class group closure did not stabilize")


def ideal_class_index(I: Ideal) -> int:
    """Index of I's ideal class among ideal_class_representatives."""
    reps = ideal_class_representatives(I.field)
    for idx, rep in enumerate(reps):
        if is_principal(I * rep.conj())[0]:
            return idx
    raise RuntimeError("ideal class not matched; class enumeration incomplete")
