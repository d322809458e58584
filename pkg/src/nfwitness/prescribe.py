"""Solving Hilbert-symbol prescriptions with self-certifying output.

A prescription fixes a finite family a_1, ..., a_n of nonzero field elements
and asks for a single nonzero x whose Hilbert symbol with every a_i equals a
chosen sign at every place, where all but finitely many signs are +1.  Such
an x exists exactly when two checkable conditions hold:

  (2) for each row i the product of the prescribed signs over all places
      is +1 (a reciprocity constraint), and
  (3) at each place v some local square class c satisfies the whole column,
      i.e. (a_i, c)_v matches the prescribed sign for every row i.

(Condition (1) of the classification -- only finitely many -1 entries -- is
built into the finite encoding used here.)  ``check_conditions`` verifies
both and names the offending row or place on failure; ``solve`` produces x
together with a full symbol table and re-derives every entry independently,
so a returned certificate never depends on the search that found it.

The solver pins the square class of x at every flagged place, forces x to be
a unit square at the other places that could influence a symbol (the support
of the family, the places over 2, the real embeddings), and then checks that
whatever extra primes appear in x are harmless.  Reciprocity makes a single
extra prime automatically harmless; when several appear with bad columns the
solver retries deterministically with a fresh auxiliary congruence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field as dc_field
from typing import Dict, FrozenSet, Iterator, List, Mapping, Optional, Sequence, Tuple

from nfwitness.approx import weak_approx
from nfwitness.errors import DomainError, InvariantFailure, SearchExhausted
from nfwitness.ideals import (
    Place,
    all_dyadic_places,
    factor_ideal,
    parse_place,
    prime_places_up_to,
    real_places,
    reduce_elem,
    uniformizer,
    valuation,
)
from nfwitness.qfield import FieldCtx, NfElem, enumerate_by_height, parse_elem, render_elem
from nfwitness.symbols import delta_set, hilbert_symbol, is_local_square, square_class_key

__all__ = [
    "Prescription",
    "ConditionReport",
    "Certificate",
    "check_conditions",
    "local_class_representatives",
    "solve",
    "DEFAULT_MAX_ATTEMPTS",
    "DEFAULT_AUX_BOUND",
]

DEFAULT_MAX_ATTEMPTS = 40
DEFAULT_AUX_BOUND = 10**4


# ---- prescriptions ---------------------------------------------------------------

@dataclass(frozen=True)
class Prescription:
    """A finite sign prescription on Hilbert symbols against a fixed family.

    ``family`` lists the rows a_1, ..., a_n (indices are 1-based, matching the
    text format).  ``flips`` records exactly the (row, place) pairs whose
    target sign is -1; every unlisted pair has target +1.
    """

    field: FieldCtx
    family: Tuple[NfElem, ...]
    flips: FrozenSet[Tuple[int, Place]]

    def __post_init__(self) -> None:
        for a in self.family:
            if not isinstance(a, NfElem) or a.field != self.field:
                raise DomainError("family entries must be elements of the prescription field")
            if not a:
                raise DomainError("family entries must be nonzero")
        for key in self.flips:
            i, pl = key
            if not (isinstance(i, int) and 1 <= i <= len(self.family)):
                raise DomainError(f"target row index {i!r} out of range")
            if not isinstance(pl, Place) or pl.field != self.field:
                raise DomainError(f"target place {pl} does not belong to {self.field.spec}")

    @classmethod
    def make(cls, field: FieldCtx, family: Sequence[NfElem],
             targets: Mapping[Tuple[int, Place], int] | Sequence[Tuple[int, Place]] = ()) -> "Prescription":
        """Build from a family and either a sign mapping or a bare -1 pair list."""
        if isinstance(targets, Mapping):
            flips = set()
            for (i, pl), s in targets.items():
                if s == 1:
                    continue
                if s != -1:
                    raise DomainError(f"target sign must be +1 or -1, got {s!r}")
                flips.add((i, pl))
        else:
            flips = set(targets)
        return cls(field, tuple(family), frozenset(flips))

    def target(self, i: int, place: Place) -> int:
        return -1 if (i, place) in self.flips else 1

    def flagged_places(self) -> Tuple[Place, ...]:
        """The places carrying at least one -1 target, in canonical order."""
        return tuple(sorted({pl for _, pl in self.flips}, key=lambda pl: pl.sort_key()))

    def column(self, place: Place) -> Tuple[int, ...]:
        """The target column at one place: one sign per row."""
        return tuple(self.target(i, place) for i in range(1, len(self.family) + 1))

    def flipped(self, i: int, place: Place) -> "Prescription":
        """A copy with one target sign toggled (handy for mutation tests)."""
        return Prescription(self.field, self.family, self.flips ^ {(i, place)})

    def to_text(self) -> str:
        lines = [f"field {self.field.spec}"]
        for i, a in enumerate(self.family, start=1):
            lines.append(f"a_{i} := {render_elem(a)}")
        for i, pl in sorted(self.flips, key=lambda key: (key[0], key[1].sort_key())):
            lines.append(f"({i}, {pl}) = -1")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Prescription":
        field: Optional[FieldCtx] = None
        family: List[NfElem] = []
        flips: List[Tuple[int, Place]] = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("field "):
                field = FieldCtx.parse(line[len("field "):].strip())
                continue
            if field is None:
                raise DomainError("prescription text must start with a field line")
            if line.startswith("a_"):
                head, _, rhs = line.partition(":=")
                idx = int(head[2:].strip())
                if idx != len(family) + 1:
                    raise DomainError(f"family rows must appear in order; got a_{idx}")
                family.append(parse_elem(field, rhs.strip()))
                continue
            if line.startswith("("):
                inner, _, sign_txt = line.partition("=")
                inner = inner.strip()
                if not (inner.startswith("(") and inner.endswith(")")):
                    raise DomainError(f"cannot parse target line {line!r}")
                row_txt, _, place_txt = inner[1:-1].partition(",")
                i = int(row_txt.strip())
                pl = parse_place(field, place_txt.strip())
                s = int(sign_txt.strip().lstrip("+"))
                if s == -1:
                    flips.append((i, pl))
                elif s != 1:
                    raise DomainError(f"target sign must be +1 or -1, got {s}")
                continue
            raise DomainError(f"cannot parse prescription line {line!r}")
        if field is None:
            raise DomainError("prescription text must contain a field line")
        return cls(field, tuple(family), frozenset(flips))


# ---- local square-class representatives ------------------------------------------

def _unit_candidates(place: Place) -> Iterator[NfElem]:
    """Deterministic stream of units at the place, useful as class generators.

    Order: -1 first; at an odd place with residue degree 1, the rational
    integers 2, 3, 4, ...; at a place over 2, elements 1 + 4n (n a positive
    integer, meeting 5 first so the classic representatives 1, -1, 5, -5 come
    out over the rationals), then 1 + 4z for small integral z, then generic
    small units.
    """
    f = place.field
    yield f.elem(-1)
    if not place.is_dyadic and place.f == 1:
        for n in itertools.count(2):
            if n % place.p:
                yield f.elem(n)
        return
    if place.is_dyadic:
        for n in range(1, 33):
            yield f.elem(1 + 4 * n)
    for z in _small_integral(f):
        if valuation(z, place) == 0:
            yield z


def _small_integral(field: FieldCtx) -> Iterator[NfElem]:
    """Nonzero integral elements in height order, without bound."""
    for bound in itertools.count(4, 4):
        for x in enumerate_by_height(field, bound):
            if x and x.is_integral() and x.height > bound - 4:
                yield x


def local_class_representatives(place: Place) -> Tuple[NfElem, ...]:
    """Representatives of the square classes of the completion at the place.

    Real: (1, -1).  Complex: (1,).  Odd finite: (1, u, pi, u*pi) with u a
    non-square unit and pi a uniformizer.  Place over 2: 2^(e*f+2) classes,
    built by closing a unit subgroup under deterministic generators and then
    adjoining the uniformizer.  Certified: the canonical class keys of the
    output are pairwise distinct and exhaust the expected count.
    """
    f = place.field
    if place.kind == "complex":
        return (f.one(),)
    if place.kind == "real":
        return (f.one(), f.elem(-1))
    expected_units = 2 ** (place.e * place.f + 1) if place.is_dyadic else 2
    reps: List[NfElem] = [f.one()]
    keys = {square_class_key(f.one(), place)}
    for c in _unit_candidates(place):
        if len(reps) >= expected_units:
            break
        if square_class_key(c, place) in keys:
            continue
        for r in list(reps):
            rc = r * c
            reps.append(rc)
            keys.add(square_class_key(rc, place))
    if len(reps) != expected_units:
        raise InvariantFailure(f"unit class closure stalled at {len(reps)} of {expected_units} at {place}")
    pi = uniformizer(place)
    out = tuple(reps) + tuple(r * pi for r in reps)
    all_keys = {square_class_key(x, place) for x in out}
    if len(all_keys) != 2 * expected_units:
        raise InvariantFailure(f"square-class representatives collide at {place}")
    return out


# ---- condition checking -----------------------------------------------------------

@dataclass(frozen=True)
class ConditionReport:
    """Outcome of check_conditions: violations name the condition and culprit."""

    ok: bool
    violations: Tuple[Tuple[int, str], ...]
    witnesses: Mapping[Place, NfElem]

    def violated_conditions(self) -> Tuple[int, ...]:
        return tuple(sorted({c for c, _ in self.violations}))


def _column_witness(pres: Prescription, place: Place) -> Optional[NfElem]:
    """A local square class matching the target column at the place, if any."""
    want = pres.column(place)
    for c in local_class_representatives(place):
        if all(hilbert_symbol(a, c, place) == w for a, w in zip(pres.family, want)):
            return c
    return None


def check_conditions(pres: Prescription) -> ConditionReport:
    """Verify solvability of a prescription, naming each violated condition.

    Condition 1: structural (finite -1 set, rows nonzero, indices in range).
    Condition 2: each row's sign product is +1.
    Condition 3: each flagged place admits a local square class matching its
    whole column; the witnesses found are returned for reuse by the solver.
    """
    violations: List[Tuple[int, str]] = []
    for i, a in enumerate(pres.family, start=1):
        if not a:
            violations.append((1, f"row {i} is zero"))
    for i, pl in sorted(pres.flips, key=lambda key: (key[0], key[1].sort_key())):
        if not (1 <= i <= len(pres.family)):
            violations.append((1, f"target row {i} out of range"))
        elif pl.field != pres.field:
            violations.append((1, f"target place {pl} is not a place of {pres.field.spec}"))
    if violations:
        return ConditionReport(False, tuple(violations), {})

    for i in range(1, len(pres.family) + 1):
        minus = sum(1 for j, _ in pres.flips if j == i)
        if minus % 2:
            violations.append((2, f"row {i}: product of targets is -1 ({minus} entries equal -1)"))

    witnesses: Dict[Place, NfElem] = {}
    for pl in pres.flagged_places():
        if pl.kind == "complex":
            violations.append((3, f"place {pl}: -1 target at a complex place"))
            continue
        c = _column_witness(pres, pl)
        if c is None:
            col = ",".join(f"{s:+d}" for s in pres.column(pl))
            violations.append((3, f"place {pl}: no local square class matches the column ({col})"))
        else:
            witnesses[pl] = c
    return ConditionReport(not violations, tuple(violations), witnesses)


# ---- the solver -------------------------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    """A solved prescription: x, the full symbol table, and the attempt log.

    The table covers every place where any symbol against the family could be
    nontrivial (family support, support of x, places over 2, real places,
    flagged places); all symbols outside it are +1 automatically.  ``verify``
    recomputes everything from scratch.
    """

    prescription: Prescription
    x: NfElem
    table: Mapping[Tuple[int, Place], int]
    attempts: Tuple[str, ...] = dc_field(default=())

    def places(self) -> Tuple[Place, ...]:
        return tuple(sorted({pl for _, pl in self.table}, key=lambda pl: pl.sort_key()))

    def verify(self) -> bool:
        """Recompute every symbol; raise InvariantFailure on any mismatch."""
        pres = self.prescription
        if not self.x or self.x.field != pres.field:
            raise InvariantFailure("certificate element is zero or from the wrong field")
        cover = set(self.places())
        for w in _relevant_places(pres, self.x):
            if w not in cover:
                raise InvariantFailure(f"certificate table misses the relevant place {w}")
        for i, a in enumerate(pres.family, start=1):
            row_minus = [pl for pl in delta_set(a, self.x)]
            for w in row_minus:
                if w not in cover:
                    raise InvariantFailure(f"row {i}: -1 symbol at uncovered place {w}")
            if len(row_minus) % 2:
                raise InvariantFailure(f"row {i}: odd number of -1 symbols")
            for w in cover:
                got = hilbert_symbol(a, self.x, w)
                if got != self.table.get((i, w)):
                    raise InvariantFailure(f"table entry ({i}, {w}) does not match the recomputed symbol")
                if got != pres.target(i, w):
                    raise InvariantFailure(f"row {i}: symbol at {w} is {got:+d}, target {pres.target(i, w):+d}")
        return True

    def to_text(self) -> str:
        lines = [self.prescription.to_text().rstrip("\n")]
        lines.append(f"x := {render_elem(self.x)}")
        lines.append(f"attempts {len(self.attempts)}")
        for (i, pl), s in sorted(self.table.items(), key=lambda kv: (kv[0][0], kv[0][1].sort_key())):
            lines.append(f"sym ({i}, {pl}) = {s:+d}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Certificate":
        pres_lines: List[str] = []
        x: Optional[NfElem] = None
        attempts = 0
        table: Dict[Tuple[int, Place], int] = {}
        field: Optional[FieldCtx] = None
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if line.startswith("field "):
                field = FieldCtx.parse(line[len("field "):].strip())
                pres_lines.append(line)
            elif line.startswith("x :="):
                assert field is not None
                x = parse_elem(field, line[len("x :="):].strip())
            elif line.startswith("attempts "):
                attempts = int(line[len("attempts "):].strip())
            elif line.startswith("sym "):
                assert field is not None
                inner, _, sign_txt = line[len("sym "):].partition("=")
                inner = inner.strip()
                row_txt, _, place_txt = inner[1:-1].partition(",")
                key = (int(row_txt.strip()), parse_place(field, place_txt.strip()))
                table[key] = int(sign_txt.strip().lstrip("+"))
            else:
                pres_lines.append(line)
        if x is None:
            raise DomainError("certificate text lacks an x line")
        pres = Prescription.from_text("\n".join(pres_lines))
        cert = cls(pres, x, table, tuple("recorded" for _ in range(attempts)))
        cert.verify()
        return cert


def _relevant_places(pres: Prescription, x: Optional[NfElem] = None) -> Tuple[Place, ...]:
    """Every place where some symbol against the family could differ from +1."""
    f = pres.field
    seen = set(all_dyadic_places(f)) | set(real_places(f))
    seen.update(pl for _, pl in pres.flips)
    for a in pres.family:
        seen.update(pl for pl, _ in factor_ideal(a))
    if x is not None:
        seen.update(pl for pl, _ in factor_ideal(x))
    return tuple(sorted(seen, key=lambda pl: pl.sort_key()))


def _class_constraints(place: Place, c: NfElem) -> List[tuple]:
    """weak_approx constraints forcing x into the square class of c at the place."""
    if place.kind == "real":
        return [("sign", place, c.embedding_sign(place.selector))]
    if place.is_dyadic:
        depth = valuation(c, place) + 2 * place.e + 1
        return [("cong", place, c, depth)]
    e = valuation(c, place)
    unit_part = c / uniformizer(place) ** e if e else c
    return [("val", place, e), ("res", place, reduce_elem(unit_part, place))]


def _aux_places(field: FieldCtx, used: set, bound: int) -> Iterator[Place]:
    for pl in prime_places_up_to(field, bound):
        if pl not in used and not pl.is_dyadic:
            yield pl


def _symbol_table(pres: Prescription, x: NfElem) -> Dict[Tuple[int, Place], int]:
    table: Dict[Tuple[int, Place], int] = {}
    for w in _relevant_places(pres, x):
        for i, a in enumerate(pres.family, start=1):
            table[(i, w)] = hilbert_symbol(a, x, w)
    return table


def solve(pres: Prescription, *, max_attempts: int = DEFAULT_MAX_ATTEMPTS,
          aux_bound: int = DEFAULT_AUX_BOUND) -> Certificate:
    """Produce x realizing the prescription, with a self-verified certificate.

    Raises DomainError when check_conditions rejects the prescription, and
    SearchExhausted (with the attempt log) if no clean solution appears within
    the attempt budget -- solvability itself is settled by check_conditions,
    so exhaustion only ever reflects the budget.
    """
    report = check_conditions(pres)
    if not report.ok:
        summary = "; ".join(f"({c}) {msg}" for c, msg in report.violations)
        raise DomainError(f"prescription is not solvable: {summary}")
    f = pres.field

    if not pres.flips:
        cert = Certificate(pres, f.one(), _symbol_table(pres, f.one()), ())
        cert.verify()
        return cert

    hot = pres.flagged_places()
    constraints: List[tuple] = []
    constrained: set = set()
    for pl in hot:
        constraints.extend(_class_constraints(pl, report.witnesses[pl]))
        constrained.add(pl)
    for pl in _relevant_places(pres):
        if pl in constrained:
            continue
        constrained.add(pl)
        if pl.kind == "real":
            constraints.append(("sign", pl, 1))
        elif pl.is_dyadic:
            constraints.append(("cong", pl, f.one(), 2 * pl.e + 1))
        else:
            constraints.append(("res", pl, 1))

    finite_constrained = {pl for pl in constrained if pl.is_finite}
    log: List[str] = []
    aux = _aux_places(f, finite_constrained, aux_bound)
    for attempt in range(max_attempts):
        extra: List[tuple] = []
        if attempt:
            try:
                extra = [("res", next(aux), 1)]
            except StopIteration:
                break
        x = weak_approx(f, constraints + extra)
        dirty = [
            w for w, k in factor_ideal(x)
            if w not in finite_constrained and k % 2
            and any(hilbert_symbol(a, x, w) == -1 for a in pres.family)
        ]
        if not dirty:
            cert = Certificate(pres, x, _symbol_table(pres, x), tuple(log))
            cert.verify()
            return cert
        log.append(f"attempt {attempt}: x = {render_elem(x)} has bad columns at "
                   + ", ".join(str(w) for w in dirty))
    raise SearchExhausted(
        f"no clean solution within {max_attempts} attempts (budget, not unsolvability); log: "
        + " | ".join(log))
