"""Existential linear-rational-arithmetic encoding of continuous reachability.

The firing-set conditions of the continuous semantics are simulated by
order variables `z` over places and transitions: a fired transition
requires each input place to carry a positive index no larger than the
transition's own, and a positively-indexed place must be initially
marked or fed by a transition with a strictly smaller index.  Together
with the state equation this yields a formula, linear in the size of
the net, that holds at a marking pair exactly when the second marking
is continuously reachable from the first.

The module both emits these formulas as SMT-LIB2 scripts and decides
them internally: a depth-first case split over the disjunctive
structure, checking each accumulated conjunction with the exact
rational feasibility core, with memoised leaf systems and permanent
blocking clauses for incremental backward-coverability use.  The
conjunctive skeleton (state equation plus cover bounds) is checked
before any branching, so unsatisfiable queries usually die on a single
feasibility call.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence

from . import ratlp
from .petri import Marking, PetriNet, incidence, reverse_net

_ZERO = Fraction(0)
_ONE = Fraction(1)

KIND_ORDER = ("w", "x", "y", "zf", "zb", "xc")


@dataclass(frozen=True)
class Var:
    """Typed first-order variable, implicitly non-negative.

    Kinds: `w` initial marking (place), `x` final marking (place), `y`
    transition counts (transition), `zf`/`zb` forward and backward
    firing order (place or transition), `xc` free cover target (place).
    """

    kind: str
    name: str

    def __post_init__(self):
        if self.kind not in KIND_ORDER:
            raise ValueError(f"unknown variable kind {self.kind!r}")

    @property
    def smt_name(self) -> str:
        return f"{self.kind}_{self.name}"

    def sort_key(self):
        return (KIND_ORDER.index(self.kind), self.name)


class Formula:
    """Base class of the formula tree; nodes are immutable."""

    __slots__ = ()


@dataclass(frozen=True)
class Const(Formula):
    value: bool

    @property
    def size(self) -> int:
        return 1


TRUE = Const(True)
FALSE = Const(False)

_NEGATE_REL = {">=": "<", ">": "<=", "<=": ">", "<": ">="}


@dataclass(frozen=True)
class Atom(Formula):
    """Linear atom `sum(coeff * var) rel rhs`."""

    terms: tuple[tuple[Var, Fraction], ...]
    rel: str
    rhs: Fraction

    @property
    def size(self) -> int:
        return 1


@dataclass(frozen=True)
class And(Formula):
    children: tuple[Formula, ...]

    @cached_property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children)


@dataclass(frozen=True)
class Or(Formula):
    children: tuple[Formula, ...]

    @cached_property
    def size(self) -> int:
        return 1 + sum(c.size for c in self.children)


@dataclass(frozen=True)
class Implies(Formula):
    antecedent: Formula
    consequent: Formula

    @cached_property
    def size(self) -> int:
        return 1 + self.antecedent.size + self.consequent.size


@dataclass(frozen=True)
class Exists(Formula):
    variables: tuple[Var, ...]
    body: Formula

    @cached_property
    def size(self) -> int:
        return 1 + self.body.size


def atom(coeffs: Mapping[Var, object], rel: str, rhs) -> Formula:
    """Build an atom; a variable-free atom collapses to a constant."""
    terms = tuple(sorted(
        ((v, Fraction(c)) for v, c in coeffs.items() if Fraction(c)),
        key=lambda t: t[0].sort_key(),
    ))
    rhs = Fraction(rhs)
    if not terms:
        return TRUE if _compare(_ZERO, rel, rhs) else FALSE
    return Atom(terms, rel, rhs)


def _compare(lhs: Fraction, rel: str, rhs: Fraction) -> bool:
    if rel == "=":
        return lhs == rhs
    if rel == ">=":
        return lhs >= rhs
    if rel == ">":
        return lhs > rhs
    if rel == "<=":
        return lhs <= rhs
    if rel == "<":
        return lhs < rhs
    raise ValueError(f"unknown relation {rel!r}")


def conj(children: Iterable[Formula]) -> Formula:
    out: list[Formula] = []
    for c in children:
        if c is TRUE:
            continue
        if c is FALSE:
            return FALSE
        if isinstance(c, And):
            out.extend(c.children)
        else:
            out.append(c)
    if not out:
        return TRUE
    if len(out) == 1:
        return out[0]
    return And(tuple(out))


def disj(children: Iterable[Formula]) -> Formula:
    out: list[Formula] = []
    for c in children:
        if c is FALSE:
            continue
        if c is TRUE:
            return TRUE
        if isinstance(c, Or):
            out.extend(c.children)
        else:
            out.append(c)
    if not out:
        return FALSE
    if len(out) == 1:
        return out[0]
    return Or(tuple(out))


def implies(a: Formula, b: Formula) -> Formula:
    if a is TRUE:
        return b
    if a is FALSE or b is TRUE:
        return TRUE
    if b is FALSE:
        return negate(a)
    return Implies(a, b)


def exists(variables: Sequence[Var], body: Formula) -> Formula:
    if isinstance(body, Const) or not variables:
        return body
    return Exists(tuple(variables), body)


def negate(f: Formula) -> Formula:
    if isinstance(f, Const):
        return FALSE if f.value else TRUE
    if isinstance(f, Atom):
        if f.rel == "=":
            return disj([Atom(f.terms, "<", f.rhs), Atom(f.terms, ">", f.rhs)])
        return Atom(f.terms, _NEGATE_REL[f.rel], f.rhs)
    if isinstance(f, And):
        return disj([negate(c) for c in f.children])
    if isinstance(f, Or):
        return conj([negate(c) for c in f.children])
    if isinstance(f, Implies):
        return conj([f.antecedent, negate(f.consequent)])
    raise ValueError("cannot negate a quantified formula")


def all_vars(f: Formula) -> set[Var]:
    out: set[Var] = set()
    stack = [f]
    while stack:
        g = stack.pop()
        if isinstance(g, Atom):
            out.update(v for v, _ in g.terms)
        elif isinstance(g, (And, Or)):
            stack.extend(g.children)
        elif isinstance(g, Implies):
            stack.append(g.antecedent)
            stack.append(g.consequent)
        elif isinstance(g, Exists):
            out.update(g.variables)
            stack.append(g.body)
    return out


def substitute(f: Formula, assignment: Mapping[Var, Fraction]) -> Formula:
    """Replace variables by rational constants and simplify."""
    if isinstance(f, Const):
        return f
    if isinstance(f, Atom):
        kept: dict[Var, Fraction] = {}
        rhs = f.rhs
        for v, c in f.terms:
            if v in assignment:
                rhs -= c * Fraction(assignment[v])
            else:
                kept[v] = c
        return atom(kept, f.rel, rhs)
    if isinstance(f, And):
        return conj([substitute(c, assignment) for c in f.children])
    if isinstance(f, Or):
        return disj([substitute(c, assignment) for c in f.children])
    if isinstance(f, Implies):
        return implies(substitute(f.antecedent, assignment), substitute(f.consequent, assignment))
    if isinstance(f, Exists):
        kept_vars = tuple(v for v in f.variables if v not in assignment)
        return exists(kept_vars, substitute(f.body, assignment))
    raise TypeError(f"not a formula: {f!r}")


def evaluate(f: Formula, assignment: Mapping[Var, Fraction]) -> bool:
    """Evaluate under a total assignment (bound variables included)."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        lhs = sum((Fraction(assignment[v]) * c for v, c in f.terms), _ZERO)
        return _compare(lhs, f.rel, f.rhs)
    if isinstance(f, And):
        return all(evaluate(c, assignment) for c in f.children)
    if isinstance(f, Or):
        return any(evaluate(c, assignment) for c in f.children)
    if isinstance(f, Implies):
        return (not evaluate(f.antecedent, assignment)) or evaluate(f.consequent, assignment)
    if isinstance(f, Exists):
        return evaluate(f.body, assignment)
    raise TypeError(f"not a formula: {f!r}")


# ---------------------------------------------------------------------------
# construction


def build_fs_formula(
    net: PetriNet,
    marking_vars: Mapping[str, Var],
    parikh_vars: Mapping[str, Var],
    direction: str,
) -> Formula:
    """Firing-set membership formula for the support of the transition
    counts, relative to the given marking variables.

    `direction` ("fwd"/"bwd") selects a fresh order-variable family so
    the two instantiations of the formula quantify disjoint variables.
    """
    kind = {"fwd": "zf", "bwd": "zb"}[direction]
    zp = {p: Var(kind, p) for p in net.places}
    zt = {t: Var(kind, t) for t in net.transitions}

    ordering = []
    for ti, t in enumerate(net.transitions):
        inputs = [net.places[p] for p in sorted(net.pre[ti])]
        consequent = conj(
            [conj([atom({zp[p]: 1}, ">", 0), atom({zp[p]: 1, zt[t]: -1}, "<=", 0)])
             for p in inputs]
        )
        ordering.append(implies(atom({parikh_vars[t]: 1}, ">", 0), consequent))

    producers: dict[str, list[str]] = {p: [] for p in net.places}
    for ti, t in enumerate(net.transitions):
        for p in net.post[ti]:
            producers[net.places[p]].append(t)

    marked = []
    for p in net.places:
        sources = [atom({marking_vars[p]: 1}, ">", 0)]
        sources.extend(
            conj([atom({parikh_vars[t]: 1}, ">", 0), atom({zt[t]: 1, zp[p]: -1}, "<", 0)])
            for t in producers[p]
        )
        marked.append(implies(atom({zp[p]: 1}, ">", 0), disj(sources)))

    body = conj([conj(ordering), conj(marked)])
    zvars = [zp[p] for p in net.places] + [zt[t] for t in net.transitions]
    return exists(zvars, body)


def build_reach_formula(net: PetriNet) -> Formula:
    """Continuous reachability relation with free initial-marking (`w`)
    and final-marking (`x`) variables."""
    w = {p: Var("w", p) for p in net.places}
    x = {p: Var("x", p) for p in net.places}
    y = {t: Var("y", t) for t in net.transitions}
    cols = incidence(net)
    state_eqn = []
    for pi, p in enumerate(net.places):
        coeffs: dict[Var, Fraction] = {x[p]: _ONE, w[p]: -_ONE}
        for ti, t in enumerate(net.transitions):
            c = cols[ti].get(pi, 0)
            if c:
                coeffs[y[t]] = Fraction(-c)
        state_eqn.append(atom(coeffs, "=", 0))
    forward = build_fs_formula(net, w, y, "fwd")
    backward = build_fs_formula(reverse_net(net), x, y, "bwd")
    body = conj([conj(state_eqn), forward, backward])
    return exists([y[t] for t in net.transitions], body)


def build_cover_query(net: PetriNet, initial: Marking) -> Formula:
    """Continuous coverability of a free target marking (`xc` variables)
    from the fixed initial marking.

    Holds at a target exactly when some continuously reachable marking
    dominates it; the reached marking is existential (`x` variables).
    """
    reach = build_reach_formula(net)
    constants = {Var("w", p): Fraction(initial[i]) for i, p in enumerate(net.places)}
    grounded = substitute(reach, constants)
    cover = [
        atom({Var("x", p): 1, Var("xc", p): -1}, ">=", 0)
        for p in net.places
    ]
    return exists([Var("x", p) for p in net.places], conj([grounded] + cover))


def cover_bindings(net: PetriNet, target: Marking) -> dict[Var, Fraction]:
    """Bindings fixing the free cover-target variables to a marking."""
    return {Var("xc", p): Fraction(target[i]) for i, p in enumerate(net.places)}


# ---------------------------------------------------------------------------
# SMT-LIB emission


def _smt_num(q: Fraction) -> str:
    if q.denominator == 1:
        return str(q.numerator) if q >= 0 else f"(- {-q.numerator})"
    if q >= 0:
        return f"(/ {q.numerator} {q.denominator})"
    return f"(- (/ {-q.numerator} {q.denominator}))"


def _smt_term(v: Var, c: Fraction) -> str:
    if c == 1:
        return v.smt_name
    return f"(* {_smt_num(c)} {v.smt_name})"


def _smt_body(f: Formula) -> str:
    if isinstance(f, Const):
        return "true" if f.value else "false"
    if isinstance(f, Atom):
        parts = [_smt_term(v, c) for v, c in f.terms]
        lhs = parts[0] if len(parts) == 1 else f"(+ {' '.join(parts)})"
        rel = f.rel
        return f"({rel} {lhs} {_smt_num(f.rhs)})"
    if isinstance(f, And):
        return f"(and {' '.join(_smt_body(c) for c in f.children)})"
    if isinstance(f, Or):
        return f"(or {' '.join(_smt_body(c) for c in f.children)})"
    if isinstance(f, Implies):
        return f"(=> {_smt_body(f.antecedent)} {_smt_body(f.consequent)})"
    if isinstance(f, Exists):
        return _smt_body(f.body)  # bound variables are declared at top level
    raise TypeError(f"not a formula: {f!r}")


def emit_smtlib(f: Formula) -> str:
    """Render as a QF_LRA SMT-LIB2 script, byte-stable for a fixed input.

    Existential binders are flattened into top-level declarations and
    every variable carries an explicit non-negativity assertion.
    """
    variables = sorted(all_vars(f), key=Var.sort_key)
    lines = ["(set-logic QF_LRA)"]
    for v in variables:
        lines.append(f"(declare-fun {v.smt_name} () Real)")
    for v in variables:
        lines.append(f"(assert (>= {v.smt_name} 0))")
    lines.append(f"(assert {_smt_body(f)})")
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# internal solver


@dataclass
class SolveStats:
    queries: int = 0
    theory_checks: int = 0
    cache_hits: int = 0
    theory_time: float = 0.0


class SolveContext:
    """Solver state for repeated queries against one base formula.

    Blocking constraints are markings whose upward closure is excluded;
    they persist across queries (with `push`/`pop` snapshots available)
    and are tested before any theory reasoning, so a query at a blocked
    point costs no feasibility call.  Leaf feasibility results are
    memoised across queries.
    """

    def __init__(self, base: Formula, places: Sequence[str]):
        self.base = base
        self.places = tuple(places)
        self.blocking: list[tuple] = []
        self.stats = SolveStats()
        self._memo: dict = {}
        self._marks: list[int] = []

    def push(self) -> None:
        self._marks.append(len(self.blocking))

    def pop(self) -> None:
        self.blocking = self.blocking[: self._marks.pop()]


def add_blocking(ctx: SolveContext, marking: Marking) -> None:
    """Permanently exclude the upward closure of `marking` from the
    cover-target space."""
    if len(marking) != len(ctx.places):
        raise ValueError("blocking marking does not match the place count")
    ctx.blocking.append(tuple(marking))


def _blocking_clause(ctx: SolveContext, marking: tuple) -> Formula:
    # x(p) < v(p) is impossible for v(p) = 0 since variables are
    # non-negative, so only positive entries contribute disjuncts.
    return disj([
        atom({Var("xc", p): 1}, "<", marking[i])
        for i, p in enumerate(ctx.places)
        if marking[i] > 0
    ])


def _atom_holds(a: Atom, assignment: Mapping[Var, Fraction]) -> bool:
    lhs = sum((assignment.get(v, _ZERO) * c for v, c in a.terms), _ZERO)
    return _compare(lhs, a.rel, a.rhs)


def _holds_defaulted(f: Formula, assignment: Mapping[Var, Fraction]) -> bool:
    """Evaluate with absent variables defaulting to zero."""
    if isinstance(f, Const):
        return f.value
    if isinstance(f, Atom):
        return _atom_holds(f, assignment)
    if isinstance(f, And):
        return all(_holds_defaulted(c, assignment) for c in f.children)
    if isinstance(f, Or):
        return any(_holds_defaulted(c, assignment) for c in f.children)
    if isinstance(f, Implies):
        return (not _holds_defaulted(f.antecedent, assignment)) or _holds_defaulted(f.consequent, assignment)
    if isinstance(f, Exists):
        return _holds_defaulted(f.body, assignment)
    raise TypeError(f"not a formula: {f!r}")


def _bounds_conflict(atoms: list[Atom]) -> bool:
    """Cheap refutation: single-variable atoms with clashing bounds.

    Sound but incomplete; saves a feasibility call on the frequent
    `y > 0` versus `y <= 0` clash.
    """
    low: dict[Var, tuple[Fraction, bool]] = {}
    high: dict[Var, tuple[Fraction, bool]] = {}
    flipped = {">=": "<=", ">": "<", "<=": ">=", "<": ">", "=": "="}
    for a in atoms:
        if len(a.terms) != 1:
            continue
        v, c = a.terms[0]
        bound = a.rhs / c
        rel = a.rel if c > 0 else flipped[a.rel]
        if rel in ("=", ">=", ">"):
            strict = rel == ">"
            cur = low.get(v)
            if cur is None or bound > cur[0] or (bound == cur[0] and strict):
                low[v] = (bound, strict)
        if rel in ("=", "<=", "<"):
            strict = rel == "<"
            cur = high.get(v)
            if cur is None or bound < cur[0] or (bound == cur[0] and strict):
                high[v] = (bound, strict)
    for v, (hi, hi_strict) in high.items():
        lo, lo_strict = low.get(v, (_ZERO, False))  # variables are non-negative
        if lo > hi or (lo == hi and (lo_strict or hi_strict)):
            return True
    return False


class _Search:
    """Depth-first case split with relaxation-witness guidance.

    Every node first checks the accumulated conjunction; its witness is
    handed down and reused: alternatives the witness already satisfies
    are explored first and need no new feasibility call, and when the
    witness (zero-defaulted) satisfies every outstanding branch the
    search stops early with it as the model.
    """

    def __init__(self, ctx: SolveContext, deadline: Optional[float]):
        self.ctx = ctx
        self.deadline = deadline
        self._names: dict[str, Var] = {}

    def _feasibility(self, atoms: list[Atom]) -> ratlp.Feasibility:
        sys = ratlp.LinearSystem()
        for a in atoms:
            coeffs = {}
            for v, c in a.terms:
                self._names[v.smt_name] = v
                coeffs[v.smt_name] = c
            sys.add(coeffs, a.rel, a.rhs)
        key = sys.key()
        cached = self.ctx._memo.get(key)
        if cached is not None:
            self.ctx.stats.cache_hits += 1
            return cached
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise ratlp.SolverTimeout("formula query exceeded its deadline")
        self.ctx.stats.theory_checks += 1
        start = time.perf_counter()
        res = ratlp.feasible(sys, deadline=self.deadline)
        self.ctx.stats.theory_time += time.perf_counter() - start
        self.ctx._memo[key] = res
        return res

    def run(
        self,
        pending: list[Formula],
        atoms: list[Atom],
        witness: Optional[dict[Var, Fraction]],
    ) -> Optional[dict[Var, Fraction]]:
        pending = list(pending)
        atoms = list(atoms)
        fresh: list[Atom] = []
        branches: list[Formula] = []
        while pending:
            f = pending.pop()
            if f is TRUE:
                continue
            if f is FALSE:
                return None
            if isinstance(f, Atom):
                atoms.append(f)
                fresh.append(f)
            elif isinstance(f, And):
                pending.extend(f.children)
            elif isinstance(f, Exists):
                pending.append(f.body)
            elif isinstance(f, (Or, Implies)):
                branches.append(f)
            else:
                raise TypeError(f"not a formula: {f!r}")

        if witness is None or not all(_atom_holds(a, witness) for a in fresh):
            if _bounds_conflict(atoms):
                return None
            res = self._feasibility(atoms)
            if not res.sat:
                return None
            witness = {self._names[name]: val for name, val in (res.witness or {}).items()}
        if not branches:
            return witness
        if all(_holds_defaulted(b, witness) for b in branches):
            return witness

        node = branches[0]
        rest = branches[1:]
        if isinstance(node, Or):
            alternatives = list(node.children)
        else:
            alternatives = [negate(node.antecedent), node.consequent]
        preferred = [a for a in alternatives if _holds_defaulted(a, witness)]
        deferred = [a for a in alternatives if not _holds_defaulted(a, witness)]
        for alt in preferred + deferred:
            model = self.run(rest + [alt], atoms, witness)
            if model is not None:
                return model
        return None


def _rescale_order_vars(model: dict[Var, Fraction]) -> dict[Var, Fraction]:
    """Replace order-variable values by their ranks for readability.

    Order variables only ever compare against zero and against each
    other within one family, so the rank map preserves satisfaction.
    """
    out = dict(model)
    for kind in ("zf", "zb"):
        positives = sorted({val for v, val in model.items() if v.kind == kind and val > 0})
        ranks = {val: Fraction(i + 1) for i, val in enumerate(positives)}
        for v, val in model.items():
            if v.kind == kind and val > 0:
                out[v] = ranks[val]
    return out


def solve(
    ctx: SolveContext,
    bindings: Mapping[Var, Fraction],
    deadline: Optional[float] = None,
) -> Optional[dict[Var, Fraction]]:
    """Decide the context's formula under the given variable bindings.

    Returns a model (exact rationals, verified by substitution) for
    satisfiable queries and None for unsatisfiable ones.  Bound
    cover-target points dominating a blocked marking are rejected
    before any theory reasoning.
    """
    ctx.stats.queries += 1
    bindings = {v: Fraction(val) for v, val in bindings.items()}

    xc_bound = all(Var("xc", p) in bindings for p in ctx.places)
    clauses = []
    for blocked in ctx.blocking:
        if xc_bound and all(
            bindings[Var("xc", p)] >= blocked[i] for i, p in enumerate(ctx.places)
        ):
            return None
        clauses.append(_blocking_clause(ctx, blocked))

    full = conj([ctx.base] + clauses)
    grounded = substitute(full, bindings)
    if grounded is FALSE:
        return None
    search = _Search(ctx, deadline)
    if grounded is TRUE:
        model: Optional[dict[Var, Fraction]] = {}
    else:
        model = search.run([grounded], [])
    if model is None:
        return None

    for v in all_vars(full):
        if v not in bindings:
            model.setdefault(v, _ZERO)
    model = _rescale_order_vars(model)
    complete = dict(bindings)
    complete.update(model)
    if not evaluate(full, complete):
        raise AssertionError("solver model failed substitution check")
    return model
