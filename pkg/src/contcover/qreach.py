"""Decision procedures for the continuous (rational) Petri net semantics.

A marking is continuously reachable iff some non-negative rational
transition-count vector solves the state equation while its support is
a firing set both forward from the initial marking and backward from
the target.  Firing-set membership reduces to a saturation that adds a
transition once all of its input places are initially marked or fed by
already-added transitions; the saturation stabilises within one round
per transition.

`q_reachable` runs the polynomial decision loop: it repeatedly collects
the supports of state-equation solutions that use each candidate
transition, then shrinks the candidate set by forward and backward
saturation of the induced sub-net until it stabilises or empties.
Continuous coverability reduces to continuous reachability by adding a
token-discarding drain transition per place.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import ratlp
from .petri import (
    Marking,
    PetriNet,
    incidence,
    restrict_marking,
    reverse_net,
    subnet,
)


@dataclass
class QVerdict:
    """Answer of a continuous reachability or coverability query.

    A positive answer carries a witness transition-count vector (over
    the queried net's transitions, in order) whose support satisfies
    both firing-set conditions; `trace` records the candidate set and
    collected support of every loop round for diagnostics.
    """

    reachable: bool
    witness: Optional[tuple[Fraction, ...]] = None
    witness_support: Optional[frozenset[str]] = None
    trace: list[dict] = field(default_factory=list)
    net: Optional[PetriNet] = None


def _saturate(net: PetriNet, marked: set[int]) -> tuple[set[str], int]:
    """Least fixed point of the one-step firing-set growth; returns the
    set and the number of rounds taken."""
    fed = set(marked)
    added: set[str] = set()
    rounds = 0
    changed = True
    while changed:
        changed = False
        rounds += 1
        for ti, t in enumerate(net.transitions):
            if t in added:
                continue
            if all(p in fed for p in net.pre[ti]):
                added.add(t)
                fed.update(net.post[ti])
                changed = True
    return added, rounds - 1  # last round only confirms stability


def saturate_firing(net: PetriNet, marking: Marking) -> frozenset[str]:
    """All transitions firable in some continuous sequence from `marking`
    (the union of its firing sets)."""
    marked = {p for p, v in enumerate(marking) if v}
    sat, rounds = _saturate(net, marked)
    assert rounds <= len(net.transitions), "saturation overran its round bound"
    return frozenset(sat)


def in_firing_set(net: PetriNet, marking: Marking, transitions) -> bool:
    """Is `transitions` the support of some admissible continuous firing
    sequence from `marking`?

    Holds iff saturating the induced sub-net from the restricted
    marking recovers exactly the given set.
    """
    ts = frozenset(transitions)
    sub = subnet(net, ts)
    return saturate_firing(sub, restrict_marking(net, marking, sub)) == ts


def _support_lp(
    net: PetriNet,
    candidates: list[str],
    diff: list[Fraction],
    positive: str,
    deadline: Optional[float],
) -> Optional[dict[str, Fraction]]:
    """Solve the state equation over the candidate columns with one
    transition forced positive; returns the solution or None."""
    sys = ratlp.LinearSystem(candidates)
    cols = incidence(net)
    for p in range(len(net.places)):
        coeffs = {}
        for t in candidates:
            c = cols[net.transition_index(t)].get(p, 0)
            if c:
                coeffs[t] = Fraction(c)
        sys.add(coeffs, "=", diff[p])
    sys.add({positive: Fraction(1)}, ">", 0)
    res = ratlp.feasible(sys, deadline=deadline)
    return res.witness if res.sat else None


def q_reachable(
    net: PetriNet,
    initial: Marking,
    target: Marking,
    deadline: Optional[float] = None,
) -> QVerdict:
    """Decide continuous reachability of `target` from `initial`."""
    m0 = tuple(Fraction(v) for v in initial)
    m = tuple(Fraction(v) for v in target)
    if len(m0) != len(net.places) or len(m) != len(net.places):
        raise ValueError("marking does not match the net's places")
    if m == m0:
        zero = tuple(Fraction(0) for _ in net.transitions)
        return QVerdict(True, witness=zero, witness_support=frozenset(), net=net)
    diff = [m[p] - m0[p] for p in range(len(net.places))]
    verdict = QVerdict(False, net=net)
    tprime = list(net.transitions)
    while tprime:
        if deadline is not None and time.monotonic() > deadline:
            raise ratlp.SolverTimeout("continuous reachability check timed out")
        supp: set[str] = set()
        for t in tprime:
            if t in supp:
                continue  # already known to occur in some solution
            sol = _support_lp(net, tprime, diff, t, deadline)
            if sol is not None:
                supp.update(u for u in tprime if sol.get(u, 0))
        verdict.trace.append({"candidates": list(tprime), "support": sorted(supp)})
        if not supp:
            return verdict
        sub = subnet(net, supp)
        fwd = saturate_firing(sub, restrict_marking(net, m0, sub))
        bwd = saturate_firing(reverse_net(sub), restrict_marking(net, m, sub))
        new = [t for t in tprime if t in fwd and t in bwd]
        if set(new) == supp:
            verdict.reachable = True
            verdict.witness, verdict.witness_support = _witness(
                net, sorted(supp, key=net.transition_index), diff, deadline
            )
            return verdict
        tprime = new
    return verdict


def _witness(
    net: PetriNet,
    supp: list[str],
    diff: list[Fraction],
    deadline: Optional[float],
) -> tuple[tuple[Fraction, ...], frozenset[str]]:
    """Extract a single transition-count witness with full support.

    Solutions witnessing each individual transition can be averaged, so
    the state equation restricted to the final support admits a
    solution that is strictly positive everywhere on it.
    """
    sys = ratlp.LinearSystem(supp)
    cols = incidence(net)
    for p in range(len(net.places)):
        coeffs = {
            t: Fraction(cols[net.transition_index(t)].get(p, 0))
            for t in supp
            if cols[net.transition_index(t)].get(p, 0)
        }
        sys.add(coeffs, "=", diff[p])
    for t in supp:
        sys.add({t: Fraction(1)}, ">", 0)
    res = ratlp.feasible(sys, deadline=deadline)
    if not res.sat:
        raise RuntimeError("witness extraction failed on a positive verdict")
    values = {t: res.witness.get(t, Fraction(0)) for t in supp}
    full = tuple(values.get(t, Fraction(0)) for t in net.transitions)
    return full, frozenset(supp)


DRAIN_PREFIX = "drain__"


def augment_with_drains(net: PetriNet) -> tuple[PetriNet, tuple[str, ...]]:
    """Add one transition per place that consumes a single token and
    produces nothing; coverability of a marking in the original net is
    reachability of it in the augmented one."""
    names = []
    existing = set(net.places) | set(net.transitions)
    for p in net.places:
        name = DRAIN_PREFIX + p
        while name in existing:
            name += "_"
        existing.add(name)
        names.append(name)
    transitions = net.transitions + tuple(names)
    pre = list(net.pre) + [{i: 1} for i in range(len(net.places))]
    post = list(net.post) + [{} for _ in net.places]
    return PetriNet(net.places, transitions, tuple(pre), tuple(post)), tuple(names)


def q_coverable(
    net: PetriNet,
    initial: Marking,
    target: Marking,
    deadline: Optional[float] = None,
) -> QVerdict:
    """Decide continuous coverability of `target` from `initial`.

    The returned verdict (and any witness) refers to the
    drain-augmented net, exposed as `verdict.net`.
    """
    augmented, _ = augment_with_drains(net)
    return q_reachable(augmented, initial, target, deadline=deadline)
