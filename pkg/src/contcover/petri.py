"""Petri nets with two firing semantics.

A net is a bipartite structure of places and transitions with
natural-weighted input (pre) and output (post) arcs.  Markings are
vectors over the places: natural-valued for the discrete semantics,
non-negative rational for the continuous one, where a transition may
fire by any fractional amount up to its enabling degree.

All arithmetic on continuous markings uses exact rationals
(`fractions.Fraction`); floating point never enters the semantics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Sequence

Marking = tuple  # tuple of int (discrete) or Fraction (continuous)


class NotEnabled(ValueError):
    """Raised when a discrete firing is attempted on a disabled transition."""


class AmountOutOfRange(ValueError):
    """Raised when a continuous firing amount exceeds the enabling degree."""


@dataclass(frozen=True)
class PetriNet:
    """Immutable Petri net.

    `places` and `transitions` are ordered name tuples; markings are
    positional with respect to `places`.  Arc weights are stored as
    sparse per-transition columns mapping place index to weight, with
    absent entries meaning zero.  Place and transition names must be
    pairwise disjoint.  An empty place set is tolerated so that
    sub-nets of isolated transition sets stay representable.
    """

    places: tuple[str, ...]
    transitions: tuple[str, ...]
    pre: tuple[Mapping[int, int], ...]
    post: tuple[Mapping[int, int], ...]

    def __post_init__(self):
        names = set(self.places) | set(self.transitions)
        if len(names) != len(self.places) + len(self.transitions):
            raise ValueError("place and transition names must be distinct")
        for cols in (self.pre, self.post):
            if len(cols) != len(self.transitions):
                raise ValueError("one arc column required per transition")
            for col in cols:
                for p, w in col.items():
                    if not 0 <= p < len(self.places):
                        raise ValueError(f"arc references unknown place index {p}")
                    if w < 0:
                        raise ValueError("arc weights must be non-negative")

    @cached_property
    def _place_index(self) -> dict[str, int]:
        return {p: i for i, p in enumerate(self.places)}

    @cached_property
    def _transition_index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(self.transitions)}

    def place_index(self, name: str) -> int:
        try:
            return self._place_index[name]
        except KeyError:
            raise KeyError(f"unknown place {name!r}") from None

    def transition_index(self, name: str) -> int:
        try:
            return self._transition_index[name]
        except KeyError:
            raise KeyError(f"unknown transition {name!r}") from None

    def pre_weight(self, place: str, transition: str) -> int:
        return self.pre[self.transition_index(transition)].get(self.place_index(place), 0)

    def post_weight(self, place: str, transition: str) -> int:
        return self.post[self.transition_index(transition)].get(self.place_index(place), 0)


def make_net(
    places: Sequence[str],
    transitions: Sequence[str],
    pre: Mapping[tuple[str, str], int] | None = None,
    post: Mapping[tuple[str, str], int] | None = None,
) -> PetriNet:
    """Build a net from (place, transition) -> weight arc maps.

    Zero-weight entries are dropped; weights must be non-negative.
    """
    places = tuple(places)
    transitions = tuple(transitions)
    pidx = {p: i for i, p in enumerate(places)}
    tidx = {t: i for i, t in enumerate(transitions)}
    pre_cols: list[dict[int, int]] = [{} for _ in transitions]
    post_cols: list[dict[int, int]] = [{} for _ in transitions]
    for cols, arcs in ((pre_cols, pre), (post_cols, post)):
        for (p, t), w in (arcs or {}).items():
            if p not in pidx:
                raise KeyError(f"unknown place {p!r}")
            if t not in tidx:
                raise KeyError(f"unknown transition {t!r}")
            if w < 0:
                raise ValueError("arc weights must be non-negative")
            if w:
                cols[tidx[t]][pidx[p]] = int(w)
    return PetriNet(places, transitions, tuple(pre_cols), tuple(post_cols))


def incidence(net: PetriNet) -> tuple[dict[int, int], ...]:
    """Sparse incidence columns: column t maps place index to post - pre."""
    cols = []
    for ti in range(len(net.transitions)):
        col: dict[int, int] = {}
        for p, w in net.post[ti].items():
            col[p] = col.get(p, 0) + w
        for p, w in net.pre[ti].items():
            col[p] = col.get(p, 0) - w
        cols.append({p: v for p, v in col.items() if v})
    return tuple(cols)


def incidence_column(net: PetriNet, transition: str) -> tuple[int, ...]:
    """Dense incidence column for one transition."""
    col = incidence(net)[net.transition_index(transition)]
    return tuple(col.get(p, 0) for p in range(len(net.places)))


def reverse_net(net: PetriNet) -> PetriNet:
    """Swap pre and post arcs; an involution."""
    return PetriNet(net.places, net.transitions, net.post, net.pre)


def adjacency(net: PetriNet, items: Iterable[str], side: str) -> frozenset[str]:
    """Pre-set, post-set, or neighborhood of a homogeneous name set.

    For a place p the pre-set is the set of transitions producing into
    p and the post-set the transitions consuming from p; for a
    transition t the pre-set is its input places and the post-set its
    output places.  `side` is one of "pre", "post", "both".
    """
    if side not in ("pre", "post", "both"):
        raise ValueError(f"side must be pre, post or both, got {side!r}")
    items = list(items)
    if not items:
        return frozenset()
    kinds = {("p" if x in net._place_index else "t" if x in net._transition_index else "?") for x in items}
    if "?" in kinds:
        unknown = [x for x in items if x not in net._place_index and x not in net._transition_index]
        raise KeyError(f"unknown name(s) {unknown!r}")
    if len(kinds) != 1:
        raise ValueError("mixed place/transition set")
    out: set[str] = set()
    if kinds == {"p"}:
        indices = {net.place_index(p) for p in items}
        for ti, t in enumerate(net.transitions):
            produces = any(p in indices for p in net.post[ti])
            consumes = any(p in indices for p in net.pre[ti])
            if side == "pre" and produces:
                out.add(t)
            elif side == "post" and consumes:
                out.add(t)
            elif side == "both" and (produces or consumes):
                out.add(t)
    else:
        for t in items:
            ti = net.transition_index(t)
            if side in ("pre", "both"):
                out.update(net.places[p] for p in net.pre[ti])
            if side in ("post", "both"):
                out.update(net.places[p] for p in net.post[ti])
    return frozenset(out)


def subnet(net: PetriNet, sub: Iterable[str]) -> PetriNet:
    """Restrict the net to transition set `sub` and its neighbor places.

    Place and transition order is inherited from the parent net; the
    empty transition set yields the empty net.
    """
    keep = set(sub)
    for t in keep:
        net.transition_index(t)
    neighbors = adjacency(net, keep, "both")
    places = tuple(p for p in net.places if p in neighbors)
    pmap = {net.place_index(p): i for i, p in enumerate(places)}
    transitions = tuple(t for t in net.transitions if t in keep)
    pre_cols = []
    post_cols = []
    for t in transitions:
        ti = net.transition_index(t)
        pre_cols.append({pmap[p]: w for p, w in net.pre[ti].items()})
        post_cols.append({pmap[p]: w for p, w in net.post[ti].items()})
    return PetriNet(places, transitions, tuple(pre_cols), tuple(post_cols))


def restrict_marking(net: PetriNet, marking: Marking, target: PetriNet) -> Marking:
    """Project a marking of `net` onto the places of `target` (by name)."""
    return tuple(marking[net.place_index(p)] for p in target.places)


def enabling_degree(net: PetriNet, marking: Marking, transition: str):
    """Maximal continuous firing amount: min over input places of
    marking(p)/pre(p,t), or +inf for a transition without inputs."""
    ti = net.transition_index(transition)
    if not net.pre[ti]:
        return math.inf
    return min(Fraction(marking[p]) / w for p, w in net.pre[ti].items())


def is_enabled(net: PetriNet, marking: Marking, transition: str) -> bool:
    ti = net.transition_index(transition)
    return all(marking[p] >= w for p, w in net.pre[ti].items())


def fire_discrete(net: PetriNet, marking: Marking, transition: str) -> tuple[int, ...]:
    """Fire one transition under the discrete semantics.

    Raises NotEnabled when some input place holds fewer tokens than the
    arc weight requires.
    """
    ti = net.transition_index(transition)
    if not is_enabled(net, marking, transition):
        raise NotEnabled(f"{transition} is not enabled at {tuple(marking)}")
    out = list(marking)
    for p, w in net.pre[ti].items():
        out[p] -= w
    for p, w in net.post[ti].items():
        out[p] += w
    return tuple(out)


def fire_continuous(net: PetriNet, marking: Marking, transition: str, amount) -> tuple[Fraction, ...]:
    """Fire a transition by a rational amount 0 <= amount <= enabling degree."""
    amount = Fraction(amount)
    if amount < 0:
        raise AmountOutOfRange("firing amount must be non-negative")
    degree = enabling_degree(net, marking, transition)
    if amount > degree:
        raise AmountOutOfRange(
            f"amount {amount} exceeds enabling degree {degree} of {transition}"
        )
    ti = net.transition_index(transition)
    out = [Fraction(v) for v in marking]
    for p, w in net.pre[ti].items():
        out[p] -= amount * w
    for p, w in net.post[ti].items():
        out[p] += amount * w
    return tuple(out)


def parikh(net: PetriNet, steps: Iterable[tuple]) -> tuple[Fraction, ...]:
    """Summed firing amounts per transition of a continuous firing sequence.

    `steps` is a sequence of (amount, transition) pairs; every amount
    must be positive.
    """
    counts = [Fraction(0)] * len(net.transitions)
    for amount, t in steps:
        amount = Fraction(amount)
        if amount <= 0:
            raise ValueError("firing amounts must be positive")
        counts[net.transition_index(t)] += amount
    return tuple(counts)


def support(vec: Sequence) -> frozenset[int]:
    """Indices of the non-zero entries of a vector."""
    return frozenset(i for i, v in enumerate(vec) if v)


def replay(net: PetriNet, marking: Marking, steps: Iterable[tuple]) -> tuple[Fraction, ...]:
    """Replay a continuous firing sequence, validating every step."""
    m = tuple(Fraction(v) for v in marking)
    for amount, t in steps:
        m = fire_continuous(net, m, t, amount)
    return m
