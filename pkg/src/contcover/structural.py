"""Traps, siphons, and the state-equation safety check refined by traps.

A trap is a place set whose consumers all feed back into it: once
marked it stays marked under any discrete firing.  A siphon is the dual
(its producers all consume from it): once empty it stays empty.  A
marking is therefore unreachable whenever the state equation has no
non-negative solution, or some trap is marked initially but empty at
the target.  `trap_safety_check` runs this as a refinement loop: solve
the state equation, look for a violated trap among the target's empty
places, add the corresponding linear cut, and re-solve, answering Safe
on infeasibility and Inconclusive when no further trap exists.  It is a
semi-decision procedure kept as a comparison baseline; the backward
coverability algorithms never call it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from . import ratlp
from .petri import Marking, PetriNet, adjacency, incidence


class TrapVerdict(enum.Enum):
    SAFE = "safe"
    INCONCLUSIVE = "inconclusive"


@dataclass
class TrapReport:
    verdict: TrapVerdict
    rounds: int = 0
    traps: list[frozenset[str]] = field(default_factory=list)


def classify(net: PetriNet, places: Iterable[str]) -> tuple[bool, bool]:
    """(is_trap, is_siphon) flags of a non-empty place set."""
    ps = frozenset(places)
    if not ps:
        raise ValueError("the empty place set is neither a trap nor a siphon")
    consumers = adjacency(net, ps, "post")
    producers = adjacency(net, ps, "pre")
    return consumers <= producers, producers <= consumers


def marked(net: PetriNet, marking: Marking, places: Iterable[str]) -> bool:
    """Does the place set carry any tokens under the marking?"""
    return sum(marking[net.place_index(p)] for p in places) > 0


def max_trap_within(net: PetriNet, places: Iterable[str]) -> frozenset[str]:
    """Largest trap contained in the given place set (possibly empty).

    Greatest-fixed-point saturation: repeatedly delete any place with a
    consumer that does not produce into the remaining set.
    """
    current = {net.place_index(p) for p in places}
    producers_into: dict[int, set[int]] = {}
    for ti in range(len(net.transitions)):
        for p in net.post[ti]:
            producers_into.setdefault(ti, set()).add(p)
    changed = True
    while changed and current:
        changed = False
        for p in sorted(current):
            for ti in range(len(net.transitions)):
                if p in net.pre[ti] and not (producers_into.get(ti, set()) & current):
                    current.discard(p)
                    changed = True
                    break
    return frozenset(net.places[p] for p in current)


def _state_equation(net: PetriNet, initial: Marking, target: Marking) -> ratlp.LinearSystem:
    sys = ratlp.LinearSystem(net.transitions)
    cols = incidence(net)
    for p in range(len(net.places)):
        coeffs = {
            net.transitions[ti]: Fraction(cols[ti][p])
            for ti in range(len(net.transitions))
            if p in cols[ti]
        }
        sys.add(coeffs, "=", Fraction(target[p]) - Fraction(initial[p]))
    return sys


def trap_safety_check(
    net: PetriNet,
    initial: Marking,
    target: Marking,
    max_rounds: int = 64,
) -> TrapReport:
    """Prove the target unreachable via the state equation and trap cuts.

    Each round solves the state equation together with the cuts added
    so far; on feasibility it searches for a trap that is marked
    initially but empty at the target (the largest trap inside the
    target's zero places) and adds the cut requiring that trap to stay
    marked at the final marking expression.  Safe on infeasibility,
    Inconclusive when no new trap exists or the round cap is hit.
    """
    report = TrapReport(TrapVerdict.INCONCLUSIVE)
    sys = _state_equation(net, initial, target)
    cols = incidence(net)
    seen: set[frozenset[str]] = set()
    for _ in range(max_rounds):
        report.rounds += 1
        if not ratlp.feasible(sys).sat:
            report.verdict = TrapVerdict.SAFE
            return report
        zero_places = [p for i, p in enumerate(net.places) if target[i] == 0]
        trap = max_trap_within(net, zero_places)
        if not trap or trap in seen or not marked(net, initial, trap):
            return report
        seen.add(trap)
        report.traps.append(trap)
        # Cut: the trap stays marked at the final marking m0 + C.x,
        # i.e. sum over the trap of (m0(p) + sum_t C(p,t) x(t)) >= 1.
        indices = {net.place_index(p) for p in trap}
        coeffs: dict[str, Fraction] = {}
        for ti, t in enumerate(net.transitions):
            total = sum(cols[ti].get(p, 0) for p in indices)
            if total:
                coeffs[t] = Fraction(total)
        base = sum(Fraction(initial[p]) for p in indices)
        sys.add(coeffs, ">=", 1 - base)
    return report
