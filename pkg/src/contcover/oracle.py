"""Brute-force reference procedures for cross-checking the real deciders.

Nothing here is on any production path: `forward_cover_bounded`
explores the discrete reachability set breadth-first within an explicit
budget, and `q_reachable_bruteforce` decides continuous reachability
straight from its characterisation by enumerating every candidate
support.  Both are deliberately naive so that agreement with the
optimised algorithms is meaningful evidence.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Optional

from . import ratlp
from .petri import (
    Marking,
    PetriNet,
    fire_discrete,
    incidence,
    is_enabled,
    reverse_net,
)
from .qreach import in_firing_set
from .upward import dominates


@dataclass(frozen=True)
class Budget:
    """Exploration limits; exceeding either yields an inconclusive answer."""

    max_markings: int = 100_000
    max_token_sum: int = 10_000

    def __post_init__(self):
        if self.max_markings <= 0 or self.max_token_sum <= 0:
            raise ValueError("budget limits must be positive")


def forward_cover_bounded(
    net: PetriNet,
    initial: Marking,
    target: Marking,
    budget: Optional[Budget] = None,
) -> Optional[bool]:
    """Breadth-first forward search for a marking dominating the target.

    True on success; False only when the reachable set truly saturated
    within the budget without covering; None when a limit was hit, so a
    cut-off can never masquerade as a safety proof.
    """
    budget = budget or Budget()
    start = tuple(initial)
    if dominates(start, tuple(target)):
        return True
    seen = {start}
    frontier = deque([start])
    truncated = False
    while frontier:
        m = frontier.popleft()
        for t in net.transitions:
            if not is_enabled(net, m, t):
                continue
            nxt = fire_discrete(net, m, t)
            if nxt in seen:
                continue
            if dominates(nxt, tuple(target)):
                return True
            if sum(nxt) > budget.max_token_sum:
                truncated = True
                continue
            seen.add(nxt)
            if len(seen) > budget.max_markings:
                return None
            frontier.append(nxt)
    return None if truncated else False


def q_reachable_bruteforce(net: PetriNet, initial: Marking, target: Marking) -> bool:
    """Continuous reachability by support enumeration.

    The target is continuously reachable iff for some transition subset
    the state equation has a non-negative solution positive exactly on
    the subset, and the subset is an admissible firing support both
    forward from the initial marking and backward from the target.
    """
    if len(net.transitions) > 20:
        raise ValueError("support enumeration is capped at 20 transitions")
    m0 = tuple(Fraction(v) for v in initial)
    m = tuple(Fraction(v) for v in target)
    diff = [m[p] - m0[p] for p in range(len(net.places))]
    reverse = reverse_net(net)
    cols = incidence(net)
    for size in range(len(net.transitions) + 1):
        for supp in combinations(net.transitions, size):
            supp_set = frozenset(supp)
            if not in_firing_set(net, m0, supp_set):
                continue
            if not in_firing_set(reverse, m, supp_set):
                continue
            sys = ratlp.LinearSystem(net.transitions)
            for p in range(len(net.places)):
                coeffs = {
                    net.transitions[ti]: Fraction(cols[ti][p])
                    for ti in range(len(net.transitions))
                    if p in cols[ti]
                }
                sys.add(coeffs, "=", diff[p])
            for t in net.transitions:
                if t in supp_set:
                    sys.add({t: Fraction(1)}, ">", 0)
                else:
                    sys.add({t: Fraction(1)}, "=", 0)
            if ratlp.feasible(sys).sat:
                return True
    return False
