"""Exact arithmetic in the rationals and in quadratic number fields.

Elements are pairs of ``Fraction`` coordinates over the integral basis
{1, w}, where w = sqrt(d) when d is not 1 mod 4 and w = (1+sqrt(d))/2
otherwise.  Completions are never materialized anywhere in this package:
every local statement is phrased as an exact valuation / residue / sign
predicate on these global elements, which keeps all arithmetic exact.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from functools import cached_property
from typing import Iterator, Optional

from sympy import factorint

__all__ = [
    "FieldCtx",
    "NfElem",
    "parse_elem",
    "render_elem",
    "sqrt_in_field",
    "fraction_sqrt",
    "enumerate_by_height",
    "integral_elements",
]


def _is_squarefree(n: int) -> bool:
    if n in (0, 1):
        return False
    return all(e == 1 for e in factorint(abs(n)).values())


def _ceil_sqrt(n: int) -> int:
    """Smallest integer s with s*s >= n (n >= 0)."""
    s = math.isqrt(n)
    return s if s * s == n else s + 1


class FieldCtx:
    """A number field K: either Q or Q(sqrt(d)) with d squarefree, d not 0 or 1.

    Carries the discriminant, the integral basis {1, w}, unit data (roots of
    unity, and the fundamental unit when d > 0) and a rational upper bound
    for the Minkowski constant.  Instances are immutable value objects.
    """

    def __init__(self, d: Optional[int] = None):
        if d is None:
            self.kind = "rational"
            self.d = None
            self.disc = 1
            self.degree = 1
            # w is absent; we keep the second coordinate identically zero.
            self.omega_trace = 0
            self.omega_norm = 0
        else:
            if not _is_squarefree(d):
                raise ValueError(f"d must be squarefree and not 0/1: {d}")
            self.kind = "quadratic"
            self.d = d
            if d % 4 == 1:
                self.disc = d
                # w = (1+sqrt(d))/2, minimal polynomial x^2 - x - (d-1)/4
                self.omega_trace = 1
                self.omega_norm = (1 - d) // 4
            else:
                self.disc = 4 * d
                # w = sqrt(d), minimal polynomial x^2 - d
                self.omega_trace = 0
                self.omega_norm = -d
            self.degree = 2

    # w^2 = omega_sq0 + omega_sq1 * w
    @property
    def omega_sq0(self) -> int:
        return -self.omega_norm

    @property
    def omega_sq1(self) -> int:
        return self.omega_trace

    @property
    def is_rational(self) -> bool:
        return self.kind == "rational"

    @property
    def is_real_quadratic(self) -> bool:
        return self.kind == "quadratic" and self.d > 0

    @property
    def is_imaginary_quadratic(self) -> bool:
        return self.kind == "quadratic" and self.d < 0

    @property
    def omega_desc(self) -> str:
        if self.is_rational:
            return "1"
        if self.d % 4 == 1:
            return f"(1+sqrt({self.d}))/2"
        return f"sqrt({self.d})"

    @classmethod
    def rational(cls) -> "FieldCtx":
        return cls(None)

    @classmethod
    def quadratic(cls, d: int) -> "FieldCtx":
        return cls(d)

    _SPEC_RE = re.compile(r"^Q\(sqrt,(-?\d+)\)$")

    @classmethod
    def parse(cls, spec: str) -> "FieldCtx":
        """Parse a field specification string: "Q" or "Q(sqrt,d)"."""
        spec = spec.strip()
        if spec == "Q":
            return cls.rational()
        m = cls._SPEC_RE.match(spec)
        if not m:
            raise ValueError(f"bad field spec {spec!r}; expected Q or Q(sqrt,d)")
        return cls.quadratic(int(m.group(1)))

    @property
    def spec(self) -> str:
        return "Q" if self.is_rational else f"Q(sqrt,{self.d})"

    # ---- element constructors -------------------------------------------

    def elem(self, c0, c1=0) -> "NfElem":
        return NfElem(self, Fraction(c0), Fraction(c1))

    def zero(self) -> "NfElem":
        return self.elem(0)

    def one(self) -> "NfElem":
        return self.elem(1)

    def omega(self) -> "NfElem":
        assert self.kind == "quadratic"
        return self.elem(0, 1)

    def sqrt_d(self) -> "NfElem":
        """The element sqrt(d) expressed over the integral basis."""
        assert self.kind == "quadratic"
        if self.d % 4 == 1:
            return self.elem(-1, 2)  # 2w - 1
        return self.elem(0, 1)

    # ---- archimedean structure ------------------------------------------

    def real_embedding_selectors(self) -> tuple:
        """Selectors for the real embeddings: () if none, else which sign
        sqrt(d) is sent to (+1 by the identity embedding)."""
        if self.is_rational:
            return (1,)
        if self.d > 0:
            return (1, -1)
        return ()

    # ---- units -----------------------------------------------------------

    @cached_property
    def roots_of_unity(self) -> tuple:
        one = self.one()
        if self.kind == "quadratic" and self.d == -1:
            i = self.omega()
            return (one, i, -one, -i)
        if self.kind == "quadratic" and self.d == -3:
            z = self.omega()  # primitive 6th root of unity
            return (one, z, z * z, -one, -z, -(z * z))
        return (one, -one)

    @cached_property
    def fundamental_unit(self) -> Optional["NfElem"]:
        """Fundamental unit > 1 for real quadratic fields, else None.

        Computed from the continued-fraction expansion of w: for each
        convergent p/q the candidate (p - q*t) + q*w is tested for norm
        +-1; the first hit is the fundamental unit of Z[w] = O_K.
        """
        if not self.is_real_quadratic:
            return None
        d, t, n = self.d, self.omega_trace, self.omega_norm
        # w = (P0 + sqrt(d)) / Q0
        P, Q = (1, 2) if d % 4 == 1 else (0, 1)
        s = math.isqrt(d)
        p_prev, q_prev = 1, 0
        p_cur, q_cur = 0, 1  # so that p_k = a_k p_{k-1} + p_{k-2} works
        for _ in range(100000):
            a = (P + s) // Q
            p_prev, p_cur = a * p_prev + p_cur, p_prev
            q_prev, q_cur = a * q_prev + q_cur, q_prev
            p, q = p_prev, q_prev
            if abs(p * p - t * p * q + n * q * q) == 1:
                u = self.elem(p - q * t, q)
                assert abs(u.norm()) == 1
                return u
            P = a * Q - P
            Q = (d - P * P) // Q
        raise RuntimeError(f"fundamental unit iteration cap exceeded for d={d}")

    @cached_property
    def minkowski_bound(self) -> Fraction:
        """A rational upper bound for the Minkowski constant of K."""
        if self.is_rational:
            return Fraction(1)
        s = _ceil_sqrt(abs(self.disc))
        if self.d > 0:
            return Fraction(s, 2)
        # (2/pi) sqrt(|disc|) <= (2/3) * ceil(sqrt(|disc|))
        return Fraction(2 * s, 3)

    # ---- value semantics ---------------------------------------------------

    def __eq__(self, other) -> bool:
        return isinstance(other, FieldCtx) and (self.kind, self.d) == (other.kind, other.d)

    def __hash__(self) -> int:
        return hash(("FieldCtx", self.kind, self.d))

    def __repr__(self) -> str:
        return f"FieldCtx({self.spec})"


class NfElem:
    """An exact element of K as coordinates (c0, c1) over the basis {1, w}."""

    __slots__ = ("field", "c0", "c1")

    def __init__(self, field: FieldCtx, c0: Fraction, c1: Fraction = Fraction(0)):
        if field.is_rational and c1 != 0:
            raise ValueError("rational field elements have no w-component")
        self.field = field
        self.c0 = Fraction(c0)
        self.c1 = Fraction(c1)

    # ---- ring operations ----------------------------------------------------

    def _coerce(self, other) -> "NfElem":
        if isinstance(other, NfElem):
            assert other.field == self.field, "mixed-field arithmetic"
            return other
        if isinstance(other, (int, Fraction)):
            return NfElem(self.field, Fraction(other))
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return NfElem(self.field, self.c0 + o.c0, self.c1 + o.c1)

    __radd__ = __add__

    def __neg__(self):
        return NfElem(self.field, -self.c0, -self.c1)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return NfElem(self.field, self.c0 - o.c0, self.c1 - o.c1)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        f = self.field
        a0, a1, b0, b1 = self.c0, self.c1, o.c0, o.c1
        cross = a1 * b1
        return NfElem(
            f,
            a0 * b0 + cross * f.omega_sq0,
            a0 * b1 + a1 * b0 + cross * f.omega_sq1,
        )

    __rmul__ = __mul__

    def conj(self) -> "NfElem":
        """The nontrivial Galois conjugate (identity on Q)."""
        t = self.field.omega_trace
        return NfElem(self.field, self.c0 + self.c1 * t, -self.c1)

    def norm(self) -> Fraction:
        f = self.field
        if f.is_rational:
            return self.c0
        return self.c0 * self.c0 + self.c0 * self.c1 * f.omega_trace + self.c1 * self.c1 * f.omega_norm

    def trace(self) -> Fraction:
        if self.field.is_rational:
            return self.c0
        return 2 * self.c0 + self.c1 * self.field.omega_trace

    def inverse(self) -> "NfElem":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        if self.field.is_rational:
            return NfElem(self.field, 1 / self.c0, Fraction(0))
        c = self.conj()
        return NfElem(self.field, c.c0 / n, c.c1 / n)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, k: int) -> "NfElem":
        assert isinstance(k, int)
        if k < 0:
            return self.inverse() ** (-k)
        res = self.field.one()
        base = self
        while k:
            if k & 1:
                res = res * base
            base = base * base
            k >>= 1
        return res

    # ---- predicates & views --------------------------------------------------

    def __bool__(self) -> bool:
        return self.c0 != 0 or self.c1 != 0

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            return self.c1 == 0 and self.c0 == other
        return (
            isinstance(other, NfElem)
            and self.field == other.field
            and self.c0 == other.c0
            and self.c1 == other.c1
        )

    def __hash__(self) -> int:
        return hash((self.field, self.c0, self.c1))

    @property
    def is_rational_value(self) -> bool:
        return self.c1 == 0

    def as_fraction(self) -> Fraction:
        assert self.c1 == 0, "element is not rational"
        return self.c0

    def coords_int(self) -> tuple:
        """(a, b, c) with self = (a + b*w)/c, gcd(a,b,c) = 1, c >= 1."""
        c = math.lcm(self.c0.denominator, self.c1.denominator)
        a = int(self.c0 * c)
        b = int(self.c1 * c)
        g = math.gcd(a, b, c)
        return a // g, b // g, c // g

    @property
    def height(self) -> int:
        a, b, c = self.coords_int()
        return max(abs(a), abs(b), c)

    def is_integral(self) -> bool:
        """Membership in O_K: integer coordinates over the integral basis."""
        return self.c0.denominator == 1 and self.c1.denominator == 1

    def embedding_sign(self, selector: int = 1) -> int:
        """Exact sign of the real embedding sending sqrt(d) to selector*|sqrt(d)|.

        Only meaningful when the field has real places (Q or d > 0).
        """
        f = self.field
        if f.is_rational:
            v = self.c0
            return (v > 0) - (v < 0)
        assert f.d > 0, "no real embeddings for imaginary quadratic fields"
        assert selector in (1, -1)
        # value = A + B*sqrt(d)
        if f.d % 4 == 1:
            A = self.c0 + self.c1 / 2
            B = selector * self.c1 / 2
        else:
            A = self.c0
            B = selector * self.c1
        if B == 0:
            return (A > 0) - (A < 0)
        if A == 0:
            return 1 if B > 0 else -1
        if A > 0 and B > 0:
            return 1
        if A < 0 and B < 0:
            return -1
        # mixed signs: compare A^2 with B^2 d (equality impossible: d nonsquare)
        if A > 0:
            return 1 if A * A > B * B * f.d else -1
        return -1 if A * A > B * B * f.d else 1

    def real_signs(self) -> tuple:
        return tuple(self.embedding_sign(s) for s in self.field.real_embedding_selectors())

    def is_totally_positive(self) -> bool:
        """Positive under every real embedding (vacuous for imaginary fields)."""
        assert self, "totally-positive test on zero"
        return all(s > 0 for s in self.real_signs())

    def __str__(self) -> str:
        return render_elem(self)

    def __repr__(self) -> str:
        return f"<{render_elem(self)} in {self.field.spec}>"


# ---- canonical text form ------------------------------------------------

def render_elem(x: NfElem) -> str:
    """Canonical text form "a/c + b/c*w" (pieces dropped when zero/unit)."""
    a, b, c = x.coords_int()

    def rat(n: int) -> str:
        return str(n) if c == 1 else f"{n}/{c}"

    def wpart(n: int) -> str:
        if n == 1 and c == 1:
            return "w"
        return f"{rat(n)}*w"

    if b == 0:
        return rat(a)
    if a == 0:
        return wpart(b) if b > 0 else "-" + wpart(-b)
    sep = " + " if b > 0 else " - "
    return rat(a) + sep + wpart(abs(b))


_RAT_RE = re.compile(r"^[+-]?\d+(?:/\d+)?$")
_W_RE = re.compile(r"^(?P<sign>[+-]?)(?:(?P<coef>\d+(?:/\d+)?)\*?)?w$")


def parse_elem(field: FieldCtx, text: str) -> NfElem:
    """Parse the canonical element form "a/c + b/c*w" (whitespace-tolerant)."""
    s = text.strip().replace(" ", "")
    if not s:
        raise ValueError("empty element text")
    # split into signed terms
    terms = []
    i = 0
    start = 0
    while i < len(s):
        if s[i] in "+-" and i > start:
            # sign begins a new term unless it directly follows '/' or '*'
            if s[i - 1] not in "/*":
                terms.append(s[start:i])
                start = i
        i += 1
    terms.append(s[start:])
    c0 = Fraction(0)
    c1 = Fraction(0)
    for term in terms:
        if _RAT_RE.match(term):
            c0 += Fraction(term)
            continue
        m = _W_RE.match(term)
        if not m:
            raise ValueError(f"cannot parse element term {term!r} in {text!r}")
        coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
        if m.group("sign") == "-":
            coef = -coef
        c1 += coef
    if field.is_rational and c1 != 0:
        raise ValueError(f"element {text!r} has a w-part but the field is Q")
    return NfElem(field, c0, c1)


# ---- squares ------------------------------------------------------------

def fraction_sqrt(r: Fraction) -> Optional[Fraction]:
    """Exact square root of a rational, or None."""
    if r < 0:
        return None
    pn = math.isqrt(r.numerator)
    pd = math.isqrt(r.denominator)
    if pn * pn == r.numerator and pd * pd == r.denominator:
        return Fraction(pn, pd)
    return None


def sqrt_in_field(x: NfElem) -> Optional[NfElem]:
    """A square root of x inside K, or None if x is not a square in K.

    For x = a + b*w with b != 0 the ansatz y = u + v*w reduces to a
    quadratic in T = v^2, solved exactly over the rationals.
    """
    f = x.field
    if not x:
        return f.zero()
    a, b = x.c0, x.c1
    if f.is_rational:
        s = fraction_sqrt(a)
        return f.elem(s) if s is not None else None
    D0, D1 = f.omega_sq0, f.omega_sq1
    if b == 0:
        s = fraction_sqrt(a)
        if s is not None:
            return f.elem(s)
        # y = v*sqrt(d) branch: v^2 * d = a
        s = fraction_sqrt(a / f.d)
        if s is not None:
            return f.sqrt_d() * f.elem(s)
        return None
    # (D1^2 + 4 D0) T^2 - (2 b D1 + 4 a) T + b^2 = 0 with T = v^2
    A = Fraction(D1 * D1 + 4 * D0)
    B = -(2 * b * D1 + 4 * a)
    C = b * b
    disc = B * B - 4 * A * C
    sd = fraction_sqrt(disc)
    if sd is None:
        return None
    for T in ((-B + sd) / (2 * A), (-B - sd) / (2 * A)):
        if T <= 0:
            continue
        v = fraction_sqrt(T)
        if v is None:
            continue
        u = (b - D1 * T) / (2 * v)
        y = f.elem(u, v)
        if y * y == x:
            return y
    return None


# ---- enumeration ----------------------------------------------------------

def enumerate_by_height(field: FieldCtx, bound: int) -> Iterator[NfElem]:
    """All x = (a + b*w)/c with |a|, |b|, c <= bound, gcd-reduced, each once.

    Deterministic order: increasing height shell, then (c, a, b).
    """
    assert bound >= 1
    for h in range(1, bound + 1):
        for c in range(1, h + 1):
            for a in range(-h, h + 1):
                b_range = range(-h, h + 1) if field.kind == "quadratic" else (0,)
                for b in b_range:
                    if max(abs(a), abs(b), c) != h:
                        continue
                    if math.gcd(a, b, c) != 1:
                        continue
                    yield NfElem(field, Fraction(a, c), Fraction(b, c))


def integral_elements(field: FieldCtx, bound: int) -> Iterator[NfElem]:
    """All elements of O_K with coordinate height <= bound, deterministic order."""
    assert bound >= 0
    for a in range(-bound, bound + 1):
        b_range = range(-bound, bound + 1) if field.kind == "quadratic" else (0,)
        for b in b_range:
            yield NfElem(field, Fraction(a), Fraction(b))
