"""Upward-closed sets of discrete markings, represented by finite bases.

An upward-closed set is stored as the antichain of its minimal
elements.  The predecessor-basis operator `pre_basis` yields, for each
basis element and transition, the least marking that enables the
transition and covers the element after firing it; this is the single
step of the backward coverability loop.
"""

from __future__ import annotations

from typing import Iterable, Sequence

from .petri import PetriNet, incidence


def dominates(a: Sequence[int], b: Sequence[int]) -> bool:
    """Componentwise a >= b."""
    return all(x >= y for x, y in zip(a, b))


class Basis:
    """Immutable antichain of pairwise-incomparable markings.

    Elements are kept sorted lexicographically so that iteration order,
    and hence every downstream run, is reproducible.
    """

    __slots__ = ("elements",)

    def __init__(self, elements: Iterable[tuple[int, ...]]):
        self.elements: tuple[tuple[int, ...], ...] = tuple(sorted(set(elements)))
        for i, v in enumerate(self.elements):
            for w in self.elements[i + 1:]:
                if dominates(v, w) or dominates(w, v):
                    raise ValueError(f"not an antichain: {v} and {w} are comparable")

    def __iter__(self):
        return iter(self.elements)

    def __len__(self):
        return len(self.elements)

    def __eq__(self, other):
        return isinstance(other, Basis) and self.elements == other.elements

    def __hash__(self):
        return hash(self.elements)

    def __repr__(self):
        return f"Basis({list(self.elements)!r})"


def minimize(markings: Iterable[Sequence[int]]) -> Basis:
    """Keep exactly the minimal elements; the upward closure is preserved."""
    ms = [tuple(m) for m in markings]
    if len({len(m) for m in ms}) > 1:
        raise ValueError("markings have mixed dimensions")
    ms = sorted(set(ms), key=lambda m: (sum(m), m))
    kept: list[tuple[int, ...]] = []
    for m in ms:
        if not any(dominates(m, v) for v in kept):
            kept.append(m)
    return Basis(kept)


def member_up(basis, marking: Sequence[int]) -> bool:
    """Is `marking` in the upward closure of the basis?"""
    marking = tuple(marking)
    for v in basis:
        if len(v) != len(marking):
            raise ValueError("dimension mismatch")
        if dominates(marking, v):
            return True
    return False


def pre_basis(net: PetriNet, markings: Iterable[Sequence[int]]) -> set[tuple[int, ...]]:
    """One-step backward cover set.

    For each marking m' and transition t the returned set contains the
    marking p -> max(pre(p,t), m'(p) - C(p,t)), the least marking that
    enables t and whose successor dominates m'.  Duplicates collapse.
    """
    cols = incidence(net)
    out: set[tuple[int, ...]] = set()
    for m in markings:
        m = tuple(m)
        if len(m) != len(net.places):
            raise ValueError("marking does not match the net's places")
        for ti in range(len(net.transitions)):
            col = cols[ti]
            pre_col = net.pre[ti]
            out.add(tuple(
                max(pre_col.get(p, 0), m[p] - col.get(p, 0))
                for p in range(len(net.places))
            ))
    return out


class BasisBuilder:
    """Mutable antichain accumulator for the backward loop.

    Insertion keeps the antichain invariant eagerly: a dominated
    candidate is rejected, and inserting a new minimal element evicts
    everything it dominates.  Elements are bucketed by token sum so
    that dominance queries only scan buckets that can matter; the
    semantics is identical to a linear scan.
    """

    def __init__(self, dimension: int):
        self.dimension = dimension
        self._buckets: dict[int, list[tuple[int, ...]]] = {}
        self._count = 0

    def __len__(self):
        return self._count

    def covers(self, marking: Sequence[int]) -> bool:
        """Is `marking` in the upward closure of the current antichain?

        Only buckets with token sum <= sum(marking) can hold a
        dominated element.
        """
        marking = tuple(marking)
        bound = sum(marking)
        for s, bucket in self._buckets.items():
            if s <= bound and any(dominates(marking, v) for v in bucket):
                return True
        return False

    def add(self, marking: Sequence[int]) -> bool:
        """Insert unless dominated; evict anything the new element dominates.

        Returns True when the element entered the antichain.
        """
        marking = tuple(marking)
        if len(marking) != self.dimension:
            raise ValueError("dimension mismatch")
        if self.covers(marking):
            return False
        low = sum(marking)
        for s in [s for s in self._buckets if s >= low]:
            bucket = self._buckets[s]
            remaining = [v for v in bucket if not dominates(v, marking)]
            if len(remaining) != len(bucket):
                self._count -= len(bucket) - len(remaining)
                if remaining:
                    self._buckets[s] = remaining
                else:
                    del self._buckets[s]
        self._buckets.setdefault(low, []).append(marking)
        self._count += 1
        return True

    def elements(self) -> list[tuple[int, ...]]:
        out: list[tuple[int, ...]] = []
        for bucket in self._buckets.values():
            out.extend(bucket)
        out.sort()
        return out

    def to_basis(self) -> Basis:
        return Basis(self.elements())
