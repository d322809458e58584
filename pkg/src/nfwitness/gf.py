"""Small finite fields F_{p^f} (f <= 3) as F_p[a]/(m(a)).

Used for residue fields of finite places and for the brute-force table
work over prime-power fields.  Everything here is desk-scale: element
counts stay in the hundreds, so inverses and square roots may scan.
"""

from __future__ import annotations

from functools import lru_cache
from itertools import product
from typing import Iterator, Optional, Tuple

from sympy import isprime

__all__ = ["GF", "GFElem", "canonical_gf"]


def _poly_mul_mod(u, v, m, p):
    """(u*v) mod the monic m in F_p[x]; coefficient lists low-to-high."""
    prod = [0] * (len(u) + len(v) - 1)
    for i, a in enumerate(u):
        if a:
            for j, b in enumerate(v):
                prod[i + j] = (prod[i + j] + a * b) % p
    deg_m = len(m) - 1
    for deg in range(len(prod) - 1, deg_m - 1, -1):
        c = prod[deg]
        if c:
            prod[deg] = 0
            for i in range(deg_m):
                prod[deg - deg_m + i] = (prod[deg - deg_m + i] - c * m[i]) % p
    out = prod[:deg_m]
    return out + [0] * (deg_m - len(out))


def _poly_rem(u, v, p):
    """Remainder of u by nonzero v in F_p[x]; coefficient lists low-to-high."""
    u = [c % p for c in u]
    while u and u[-1] == 0:
        u.pop()
    dv = len(v) - 1
    inv = pow(v[-1], p - 2, p)
    while len(u) - 1 >= dv:
        c = (u[-1] * inv) % p
        if c:
            for i in range(dv + 1):
                u[len(u) - 1 - dv + i] = (u[len(u) - 1 - dv + i] - c * v[i]) % p
        u.pop()
        while u and u[-1] == 0:
            u.pop()
    return u


def _poly_gcd(u, v, p):
    u = [c % p for c in u]
    v = [c % p for c in v]
    while u and u[-1] == 0:
        u.pop()
    while v and v[-1] == 0:
        v.pop()
    while v:
        u, v = v, _poly_rem(u, v, p)
    return u if u else [0]


def _poly_has_root(m, p):
    """Does the monic m of degree 2 or 3 (coeffs low-to-high) have a root mod p?

    For large p, a root exists iff gcd(x^p - x, m) is nonconstant; x^p mod m
    is computed by square-and-multiply, so the test is O(log p) ring ops
    rather than an O(p) scan.
    """
    if p <= 3:
        return any(
            sum(c * pow(r, i, p) for i, c in enumerate(m)) % p == 0
            for r in range(p))
    deg_m = len(m) - 1
    base = [0, 1] + [0] * (deg_m - 2)
    acc = [1] + [0] * (deg_m - 1)
    e = p
    while e:
        if e & 1:
            acc = _poly_mul_mod(acc, base, m, p)
        base = _poly_mul_mod(base, base, m, p)
        e >>= 1
    h = list(acc)
    h[1] = (h[1] - 1) % p
    g = _poly_gcd(h, list(m), p)
    return len(g) > 1


class GF:
    """F_{p^f} realized as F_p[a] modulo a monic irreducible polynomial.

    ``modpoly`` lists coefficients low-to-high including the leading 1,
    so f = len(modpoly) - 1.  For f = 1 the polynomial is x - r and
    elements behave as plain integers mod p.
    """

    def __init__(self, p: int, modpoly: Tuple[int, ...]):
        assert isprime(p)
        assert len(modpoly) >= 2 and modpoly[-1] == 1
        self.p = p
        self.f = len(modpoly) - 1
        self.modpoly = tuple(c % p for c in modpoly[:-1]) + (1,)
        assert self.f <= 3, "only f <= 3 supported"
        if self.f >= 2:
            # degree 2 or 3: irreducible over F_p iff no root
            assert not _poly_has_root(self.modpoly, p), \
                f"modpoly {modpoly} has a root mod {p}"

    @property
    def q(self) -> int:
        return self.p**self.f

    def elem(self, coeffs) -> "GFElem":
        if isinstance(coeffs, int):
            coeffs = (coeffs,) + (0,) * (self.f - 1)
        coeffs = tuple(c % self.p for c in coeffs)
        assert len(coeffs) == self.f
        return GFElem(self, coeffs)

    def from_int(self, n: int) -> "GFElem":
        return self.elem(n)

    def zero(self) -> "GFElem":
        return self.elem(0)

    def one(self) -> "GFElem":
        return self.elem(1)

    def gen(self) -> "GFElem":
        """The class of a (equals the root r when f = 1)."""
        if self.f == 1:
            return self.elem(-self.modpoly[0])
        return self.elem((0, 1) if self.f == 2 else (0, 1, 0))

    def elements(self) -> Iterator["GFElem"]:
        for tup in product(range(self.p), repeat=self.f):
            yield GFElem(self, tup)

    @lru_cache(maxsize=None)
    def _squares(self) -> frozenset:
        return frozenset(x * x for x in self.elements())

    def __eq__(self, other) -> bool:
        return isinstance(other, GF) and (self.p, self.modpoly) == (other.p, other.modpoly)

    def __hash__(self) -> int:
        return hash(("GF", self.p, self.modpoly))

    def __repr__(self) -> str:
        return f"GF({self.p}^{self.f})"


class GFElem:
    __slots__ = ("field", "coeffs")

    def __init__(self, field: GF, coeffs: Tuple[int, ...]):
        self.field = field
        self.coeffs = coeffs

    # ---- arithmetic ------------------------------------------------------

    def _coerce(self, other) -> "GFElem":
        if isinstance(other, GFElem):
            assert other.field == self.field
            return other
        if isinstance(other, int):
            return self.field.elem(other)
        return NotImplemented  # type: ignore[return-value]

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        p = self.field.p
        return GFElem(self.field, tuple((x + y) % p for x, y in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        p = self.field.p
        return GFElem(self.field, tuple((-x) % p for x in self.coeffs))

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        return -(self - other)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        f, p = self.field, self.field.p
        # polynomial product, then reduce by modpoly
        prod = [0] * (2 * f.f - 1)
        for i, x in enumerate(self.coeffs):
            if x:
                for j, y in enumerate(o.coeffs):
                    prod[i + j] = (prod[i + j] + x * y) % p
        m = f.modpoly
        for deg in range(len(prod) - 1, f.f - 1, -1):
            c = prod[deg]
            if c:
                prod[deg] = 0
                for i in range(f.f):
                    prod[deg - f.f + i] = (prod[deg - f.f + i] - c * m[i]) % p
        return GFElem(f, tuple(prod[: f.f]))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "GFElem":
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

    def inverse(self) -> "GFElem":
        assert self, "inverse of zero"
        return self ** (self.field.q - 2)

    def __truediv__(self, other):
        o = self._coerce(other)
        return self * o.inverse()

    # ---- predicates ------------------------------------------------------

    def __bool__(self) -> bool:
        return any(self.coeffs)

    def __eq__(self, other) -> bool:
        if isinstance(other, int):
            return self == self.field.elem(other)
        return isinstance(other, GFElem) and self.field == other.field and self.coeffs == other.coeffs

    def __hash__(self) -> int:
        return hash((self.field, self.coeffs))

    def is_square(self) -> bool:
        if self.field.p == 2:
            return True  # Frobenius is bijective in characteristic 2
        if not self:
            return True
        return self ** ((self.field.q - 1) // 2) == self.field.one()

    def sqrt(self) -> Optional["GFElem"]:
        if self in self.field._squares():
            for x in self.field.elements():
                if x * x == self:
                    return x
        return None

    @property
    def value(self):
        """Canonical representative: an integer for f = 1, a tuple mod p else."""
        return self.coeffs[0] if self.field.f == 1 else self.coeffs

    def __str__(self) -> str:
        # polynomial in a, highest degree first: "a^2+a", "2a+1", "0"
        parts = []
        for deg in range(self.field.f - 1, -1, -1):
            c = self.coeffs[deg]
            if c == 0:
                continue
            if deg == 0:
                parts.append(str(c))
            else:
                var = "a" if deg == 1 else f"a^{deg}"
                parts.append(var if c == 1 else f"{c}{var}")
        return "+".join(parts) if parts else "0"

    def __repr__(self) -> str:
        return f"<{self} in {self.field!r}>"


def canonical_gf(q: int) -> GF:
    """F_q with a fixed canonical modulus (used by the table-of-U_q work).

    q = p: x - 0; q = 4: x^2+x+1; q = 8: x^3+x+1; q = 9: x^2+1;
    other p^2: x^2+1 when p = 3 mod 4, else x^2 - (least nonresidue).
    """
    from sympy import factorint

    fac = factorint(q)
    assert len(fac) == 1, f"{q} is not a prime power"
    p, f = next(iter(fac.items()))
    if f == 1:
        return GF(p, (0, 1))
    if q == 4:
        return GF(2, (1, 1, 1))
    if q == 8:
        return GF(2, (1, 1, 0, 1))
    if f == 2:
        if p % 4 == 3:
            return GF(p, (1, 0, 1))  # x^2 + 1
        nr = next(n for n in range(2, p) if pow(n, (p - 1) // 2, p) == p - 1)
        return GF(p, (-nr % p, 0, 1))  # x^2 - nr
    raise ValueError(f"no canonical modulus recorded for q = {q}")
