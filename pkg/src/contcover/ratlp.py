"""Exact rational linear feasibility with witnesses and Farkas certificates.

Decides systems of linear equalities, non-strict and strict
inequalities over implicitly non-negative variables.  Every SAT answer
carries a rational witness; every UNSAT answer carries row multipliers
that combine the system into `0 >= positive` (or `0 > 0`), checkable by
plain arithmetic.

Strict inequalities are handled symbolically: a row `a.x > b` becomes
`a.x >= b + delta` for an infinitesimal delta, and all simplex
arithmetic runs over values `standard + infinitesimal*delta` compared
lexicographically.  A concrete witness is recovered afterwards by
choosing delta small enough.

The solver is a phase-one simplex with Bland's pivoting rule, so it
terminates on every input.  Tableau rows are dense lists up to 64
columns and sparse maps above; both storages run the same pivot loop.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional

_ZERO = Fraction(0)
_ONE = Fraction(1)

DENSE_COLUMN_LIMIT = 64


class SolverTimeout(Exception):
    """Raised when a cooperative deadline expires inside the pivot loop."""


@dataclass(frozen=True)
class DeltaRational:
    """Exact value of the form standard + infinitesimal * delta.

    delta stands for an arbitrarily small positive rational, so
    comparisons are lexicographic on (standard, infinitesimal).
    """

    std: Fraction
    eps: Fraction = _ZERO

    def __add__(self, other):
        other = _delta(other)
        return DeltaRational(self.std + other.std, self.eps + other.eps)

    __radd__ = __add__

    def __sub__(self, other):
        other = _delta(other)
        return DeltaRational(self.std - other.std, self.eps - other.eps)

    def __rsub__(self, other):
        return _delta(other) - self

    def __neg__(self):
        return DeltaRational(-self.std, -self.eps)

    def __mul__(self, scalar):
        if isinstance(scalar, DeltaRational):
            raise TypeError("delta * delta products are not defined")
        return DeltaRational(self.std * scalar, self.eps * scalar)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        if isinstance(scalar, DeltaRational):
            raise TypeError("division by a delta value is not defined")
        return DeltaRational(self.std / scalar, self.eps / scalar)

    def _key(self):
        return (self.std, self.eps)

    def __lt__(self, other):
        return self._key() < _delta(other)._key()

    def __le__(self, other):
        return self._key() <= _delta(other)._key()

    def __gt__(self, other):
        return self._key() > _delta(other)._key()

    def __ge__(self, other):
        return self._key() >= _delta(other)._key()

    def __eq__(self, other):
        if isinstance(other, (DeltaRational, int, Fraction)):
            return self._key() == _delta(other)._key()
        return NotImplemented

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        if not self.eps:
            return f"{self.std}"
        return f"{self.std}{'+' if self.eps > 0 else ''}{self.eps}d"

    def concretize(self, delta: Fraction) -> Fraction:
        return self.std + self.eps * delta


def _delta(x) -> DeltaRational:
    if isinstance(x, DeltaRational):
        return x
    return DeltaRational(Fraction(x))


_FLIP = {"<=": ">=", "<": ">"}
_RELATIONS = ("=", ">=", ">")


@dataclass(frozen=True)
class Row:
    """One constraint `sum(coeffs[v] * v) rel rhs` with rel in =, >=, >."""

    coeffs: tuple[tuple[str, Fraction], ...]
    rel: str
    rhs: Fraction

    def coeff_map(self) -> dict[str, Fraction]:
        return dict(self.coeffs)


class LinearSystem:
    """Ordered-variable constraint system; all variables implicitly >= 0.

    Variables may be declared up front or are registered in first-use
    order; `<=` and `<` rows are normalised by negation on entry.
    """

    def __init__(self, variables: Iterable[str] = ()):
        self.variables: list[str] = []
        self._vset: set[str] = set()
        for v in variables:
            self.add_variable(v)
        self.rows: list[Row] = []

    def add_variable(self, name: str) -> None:
        if name not in self._vset:
            self._vset.add(name)
            self.variables.append(name)

    def add(self, coeffs: Mapping[str, object], rel: str, rhs) -> None:
        rhs = Fraction(rhs)
        items = []
        for v, c in coeffs.items():
            c = Fraction(c)
            if c:
                items.append((v, c))
                self.add_variable(v)
        if rel in _FLIP:
            items = [(v, -c) for v, c in items]
            rhs = -rhs
            rel = _FLIP[rel]
        if rel not in _RELATIONS:
            raise ValueError(f"unsupported relation {rel!r}")
        items.sort()
        self.rows.append(Row(tuple(items), rel, rhs))

    def key(self):
        """Canonical hashable form, used for memoisation."""
        return tuple(sorted((r.rel, r.rhs, r.coeffs) for r in self.rows))

    def __repr__(self):
        return f"LinearSystem({len(self.variables)} vars, {len(self.rows)} rows)"


@dataclass
class Feasibility:
    """Outcome of a feasibility query.

    Exactly one of `witness` (SAT: variable assignment satisfying every
    row, strict rows strictly) and `certificate` (UNSAT: one rational
    multiplier per row combining the system into a contradiction) is
    set.
    """

    sat: bool
    witness: Optional[dict[str, Fraction]] = None
    certificate: Optional[list[Fraction]] = None


# ---------------------------------------------------------------------------
# tableau row storages


class _DenseRow:
    __slots__ = ("data",)

    def __init__(self, ncols: int):
        self.data = [_ZERO] * ncols

    def get(self, j):
        return self.data[j]

    def set(self, j, v):
        self.data[j] = v

    def nonzero(self):
        return [(j, v) for j, v in enumerate(self.data) if v]

    def scale(self, factor):
        self.data = [v * factor if v else _ZERO for v in self.data]

    def axpy(self, factor, other: "_DenseRow"):
        data = self.data
        for j, v in enumerate(other.data):
            if v:
                data[j] += factor * v


class _SparseRow:
    __slots__ = ("data",)

    def __init__(self, ncols: int):
        self.data: dict[int, Fraction] = {}

    def get(self, j):
        return self.data.get(j, _ZERO)

    def set(self, j, v):
        if v:
            self.data[j] = v
        else:
            self.data.pop(j, None)

    def nonzero(self):
        return sorted(self.data.items())

    def scale(self, factor):
        self.data = {j: v * factor for j, v in self.data.items()}

    def axpy(self, factor, other: "_SparseRow"):
        data = self.data
        for j, v in other.data.items():
            new = data.get(j, _ZERO) + factor * v
            if new:
                data[j] = new
            else:
                data.pop(j, None)


# ---------------------------------------------------------------------------
# phase-one simplex


class _Simplex:
    def __init__(self, sys: LinearSystem, mode: Optional[str], pivot_rule: str):
        self.sys = sys
        n = len(sys.variables)
        m = len(sys.rows)
        slack_rows = [i for i, r in enumerate(sys.rows) if r.rel != "="]
        self.n_struct = n
        self.slack_of_row = {i: n + k for k, i in enumerate(slack_rows)}
        self.n_slack = len(slack_rows)
        self.art0 = n + self.n_slack
        self.ncols = self.art0 + m
        if mode is None:
            mode = "dense" if self.ncols <= DENSE_COLUMN_LIMIT else "sparse"
        self.row_cls = _DenseRow if mode == "dense" else _SparseRow
        self.mode = mode
        self.pivot_rule = pivot_rule
        self.vindex = {v: j for j, v in enumerate(sys.variables)}

        self.rows: list = []
        self.rhs: list[DeltaRational] = []
        self.flip: list[int] = []
        self.basis: list[int] = []
        for i, r in enumerate(sys.rows):
            row = self.row_cls(self.ncols)
            for v, c in r.coeffs:
                row.set(self.vindex[v], c)
            if r.rel != "=":
                row.set(self.slack_of_row[i], Fraction(-1))
            rhs = DeltaRational(r.rhs, _ONE if r.rel == ">" else _ZERO)
            if rhs < 0:
                for j, v in row.nonzero():
                    row.set(j, -v)
                rhs = -rhs
                self.flip.append(-1)
            else:
                self.flip.append(1)
            row.set(self.art0 + i, _ONE)
            self.rows.append(row)
            self.rhs.append(rhs)
            self.basis.append(self.art0 + i)

        # Reduced cost row for min(sum of artificials): with the
        # artificial basis, cbar_j = -sum_i a_ij on non-artificial
        # columns and 0 on artificial ones.
        self.cost = self.row_cls(self.ncols)
        for row in self.rows:
            for j, v in row.nonzero():
                if j < self.art0:
                    self.cost.set(j, self.cost.get(j) - v)

    def _entering(self) -> Optional[int]:
        candidates = [(j, v) for j, v in self.cost.nonzero() if v < 0]
        if not candidates:
            return None
        if self.pivot_rule == "dantzig":
            return min(candidates, key=lambda jv: (jv[1], jv[0]))[0]
        return min(j for j, _ in candidates)

    def _leaving(self, jc: int) -> Optional[int]:
        best = None
        best_ratio = None
        for i, row in enumerate(self.rows):
            a = row.get(jc)
            if a > 0:
                ratio = self.rhs[i] / a
                if best_ratio is None or ratio < best_ratio or (
                    ratio == best_ratio and self.basis[i] < self.basis[best]
                ):
                    best, best_ratio = i, ratio
        return best

    def _pivot(self, ir: int, jc: int) -> None:
        row = self.rows[ir]
        a = row.get(jc)
        row.scale(1 / a)
        self.rhs[ir] = self.rhs[ir] / a
        for i, other in enumerate(self.rows):
            if i == ir:
                continue
            f = other.get(jc)
            if f:
                other.axpy(-f, row)
                self.rhs[i] = self.rhs[i] - self.rhs[ir] * f
        f = self.cost.get(jc)
        if f:
            self.cost.axpy(-f, row)
        self.basis[ir] = jc

    def run(self, deadline: Optional[float]) -> None:
        pivots = 0
        fallback = 4 * (len(self.rows) + self.ncols)
        while True:
            if deadline is not None and pivots % 16 == 0 and time.monotonic() > deadline:
                raise SolverTimeout("feasibility check exceeded deadline")
            if self.pivot_rule == "dantzig" and pivots > fallback:
                self.pivot_rule = "bland"  # guaranteed-termination fallback
            jc = self._entering()
            if jc is None:
                return
            ir = self._leaving(jc)
            if ir is None:
                raise RuntimeError("phase-one objective unbounded; solver bug")
            self._pivot(ir, jc)
            pivots += 1

    def objective(self) -> DeltaRational:
        total = DeltaRational(_ZERO)
        for i, b in enumerate(self.basis):
            if b >= self.art0:
                total = total + self.rhs[i]
        return total

    def witness_delta(self) -> dict[str, DeltaRational]:
        values = {v: DeltaRational(_ZERO) for v in self.sys.variables}
        for i, b in enumerate(self.basis):
            if b < self.n_struct:
                values[self.sys.variables[b]] = self.rhs[i]
        return values

    def farkas(self) -> list[Fraction]:
        # y_i = 1 - cbar(artificial_i); multipliers for the original
        # (unflipped) rows are flip_i * y_i.
        lam = []
        for i in range(len(self.rows)):
            y = _ONE - self.cost.get(self.art0 + i)
            lam.append(self.flip[i] * y)
        return lam


def _concretize(values: dict[str, DeltaRational], sys: LinearSystem) -> dict[str, Fraction]:
    """Choose a concrete positive delta small enough for every constraint."""
    bounds: list[Fraction] = []

    def bound_from(expr: DeltaRational) -> None:
        # expr(delta) must stay >= 0; lexicographic validity is already
        # guaranteed, so only a negative infinitesimal slope at a
        # positive standard part constrains delta.
        if expr.eps < 0:
            if expr.std <= 0:
                raise RuntimeError("symbolic solution violates lexicographic order")
            bounds.append(expr.std / -expr.eps)

    for val in values.values():
        bound_from(val)
    for row in sys.rows:
        lhs = DeltaRational(_ZERO)
        for v, c in row.coeffs:
            lhs = lhs + values[v] * c
        diff = lhs - DeltaRational(row.rhs)
        if row.rel == "=":
            if diff.std or diff.eps:
                raise RuntimeError("symbolic witness breaks an equality row")
        else:
            if row.rel == ">" and diff.std == 0 and diff.eps <= 0:
                raise RuntimeError("symbolic witness breaks a strict row")
            bound_from(diff)
    delta = _ONE
    for b in bounds:
        delta = min(delta, b / 2)
    return {v: val.concretize(delta) for v, val in values.items()}


def feasible(
    sys: LinearSystem,
    deadline: Optional[float] = None,
    mode: Optional[str] = None,
    pivot_rule: str = "bland",
) -> Feasibility:
    """Decide the system; always returns a self-checking answer.

    SAT answers carry an exact witness (strict rows satisfied
    strictly), UNSAT answers a Farkas certificate.  Both are validated
    with `check_certificate` before being returned, so a bug in the
    pivoting can never leak a wrong answer silently.
    """
    if not sys.rows:
        result = Feasibility(True, witness={v: _ZERO for v in sys.variables})
        _audit(sys, result)
        return result
    simplex = _Simplex(sys, mode, pivot_rule)
    simplex.run(deadline)
    if simplex.objective() > 0:
        result = Feasibility(False, certificate=simplex.farkas())
    else:
        concrete = _concretize(simplex.witness_delta(), sys)
        result = Feasibility(True, witness=concrete)
    _audit(sys, result)
    return result


class AuditFailure(AssertionError):
    """A produced witness or certificate failed its arithmetic re-check."""


_audit_stats = {"checked": 0, "failed": 0}


def audit_counters() -> dict[str, int]:
    """Counts of self-checked and failed solver answers (for test reporting)."""
    return dict(_audit_stats)


def _audit(sys: LinearSystem, result: Feasibility) -> None:
    _audit_stats["checked"] += 1
    if not check_certificate(sys, result):
        _audit_stats["failed"] += 1
        raise AuditFailure(f"solver produced an invalid {'witness' if result.sat else 'certificate'}")


def check_certificate(sys: LinearSystem, result: Feasibility) -> bool:
    """Re-check a witness or certificate by direct arithmetic.

    A witness must satisfy every row (strict rows strictly) with all
    variables non-negative.  A certificate must be sign-correct
    (non-negative on inequality rows), combine the row left-hand sides
    into a vector that is componentwise <= 0, and combine the
    right-hand sides into a positive value - strictly positive, or zero
    reached only through a strict row with positive multiplier.
    """
    if result.sat:
        w = result.witness
        if w is None:
            return False
        for v in sys.variables:
            if w.get(v, _ZERO) < 0:
                return False
        for row in sys.rows:
            lhs = sum((w.get(v, _ZERO) * c for v, c in row.coeffs), _ZERO)
            if row.rel == "=" and lhs != row.rhs:
                return False
            if row.rel == ">=" and not lhs >= row.rhs:
                return False
            if row.rel == ">" and not lhs > row.rhs:
                return False
        return True

    lam = result.certificate
    if lam is None or len(lam) != len(sys.rows):
        raise ValueError("certificate length does not match the row count")
    combined: dict[str, Fraction] = {}
    rhs = DeltaRational(_ZERO)
    for mult, row in zip(lam, sys.rows):
        if row.rel != "=" and mult < 0:
            return False
        if not mult:
            continue
        for v, c in row.coeffs:
            combined[v] = combined.get(v, _ZERO) + mult * c
        rhs = rhs + DeltaRational(row.rhs, _ONE if row.rel == ">" else _ZERO) * mult
    if any(c > 0 for c in combined.values()):
        return False
    return rhs > 0
