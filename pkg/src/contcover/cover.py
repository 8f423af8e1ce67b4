"""Backward coverability, classical and with continuous-reachability pruning.

Both deciders grow the minimal basis of the markings that can cover the
target, one backward transition step at a time, until the initial
marking is covered (unsafe) or no new minimal element appears (safe).
The pruned variant first rejects targets that are not even continuously
coverable, then discards every new basis element whose continuous
coverability query is unsatisfiable: none of its predecessors could be
coverable either, so the basis stays small without losing precision.
Verdicts of the two algorithms always coincide.

Discarded elements are additionally asserted as blocking constraints on
the incremental formula context, and a bottleneck heuristic may defer
large-sum-norm elements to later iterations (they are kept in a side
pool and re-offered, so the accumulated upward-closed set is unchanged,
merely stabilising later).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from . import encode, qreach, ratlp
from .petri import Marking, PetriNet
from .upward import BasisBuilder, pre_basis


@dataclass
class Config:
    """Knobs for the backward loop.

    `c` and `k` parameterise the bottleneck heuristic, which keeps only
    the c + |B|/k smallest-sum-norm new elements per iteration.
    `prune` selects the continuous-coverability pruning loop when
    dispatching by configuration.
    """

    use_minbottle: bool = True
    c: int = 10
    k: int = 5
    max_iterations: Optional[int] = None
    timeout: Optional[float] = None
    prune: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.c < 0:
            raise ValueError("c must be non-negative")


@dataclass(frozen=True)
class Verdict:
    """Safe (not coverable), unsafe (coverable), or unknown with a reason."""

    value: str
    reason: Optional[str] = None

    SAFE = "safe"
    UNSAFE = "unsafe"
    UNKNOWN = "unknown"


@dataclass
class IterationStats:
    basis_candidates: int  # |B| after removing covered elements, before pruning
    pruned: int            # |D|, candidates discarded as not continuously coverable
    basis_size: int        # |M| after minimisation

    def as_dict(self) -> dict:
        return {
            "candidates": self.basis_candidates,
            "pruned": self.pruned,
            "basis_size": self.basis_size,
        }


@dataclass
class RunStats:
    algorithm: str
    verdict: str = Verdict.UNKNOWN
    unknown_reason: Optional[str] = None
    iterations: list[IterationStats] = field(default_factory=list)
    solver_queries: int = 0
    solver_time: float = 0.0
    wall_time: float = 0.0

    @property
    def pruned_total(self) -> int:
        return sum(i.pruned for i in self.iterations)

    @property
    def pruned_pct(self) -> float:
        total = sum(i.basis_candidates for i in self.iterations)
        if not total:
            return 0.0
        return float(100 * Fraction(self.pruned_total, total))

    def as_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "verdict": self.verdict,
            "unknown_reason": self.unknown_reason,
            "iterations": [i.as_dict() for i in self.iterations],
            "solver_queries": self.solver_queries,
            "solver_time_ms": round(self.solver_time * 1000, 3),
            "wall_time_ms": round(self.wall_time * 1000, 3),
            "pruned_total": self.pruned_total,
            "pruned_pct": round(self.pruned_pct, 2),
        }


def minbottle(markings, c: int, k: int) -> list[tuple[int, ...]]:
    """Keep the min(|B|, c + |B|//k) elements of smallest sum-norm.

    Ties break lexicographically so runs are reproducible.
    """
    if k < 1:
        raise ValueError("k must be at least 1")
    ordered = sorted(markings, key=lambda m: (sum(m), m))
    keep = min(len(ordered), c + len(ordered) // k)
    return ordered[:keep]


class _Deadline:
    def __init__(self, timeout: Optional[float]):
        self.at = time.monotonic() + timeout if timeout is not None else None

    def expired(self) -> bool:
        return self.at is not None and time.monotonic() > self.at


def backward_cover(
    net: PetriNet,
    initial: Marking,
    target: Marking,
    cfg: Optional[Config] = None,
) -> tuple[Verdict, RunStats]:
    """Classical backward coverability; complete, no pruning."""
    cfg = cfg or Config()
    return _backward_loop(net, initial, target, cfg, prune=False)


def backward_cover_q(
    net: PetriNet,
    initial: Marking,
    target: Marking,
    cfg: Optional[Config] = None,
) -> tuple[Verdict, RunStats]:
    """Backward coverability pruned by continuous coverability.

    Returns the same verdict as `backward_cover` on every input.
    """
    cfg = cfg or Config()
    return _backward_loop(net, initial, target, cfg, prune=True)


def _backward_loop(
    net: PetriNet,
    initial: Marking,
    target: Marking,
    cfg: Config,
    prune: bool,
) -> tuple[Verdict, RunStats]:
    start = time.perf_counter()
    stats = RunStats(algorithm="qcover" if prune else "backward")
    deadline = _Deadline(cfg.timeout)
    initial = tuple(initial)
    target = tuple(target)

    def finish(verdict: Verdict) -> tuple[Verdict, RunStats]:
        stats.verdict = verdict.value
        stats.unknown_reason = verdict.reason
        stats.wall_time = time.perf_counter() - start
        return verdict, stats

    ctx: Optional[encode.SolveContext] = None
    try:
        if prune:
            t0 = time.perf_counter()
            fast = qreach.q_coverable(net, initial, target, deadline=deadline.at)
            stats.solver_time += time.perf_counter() - t0
            stats.solver_queries += 1
            if not fast.reachable:
                return finish(Verdict(Verdict.SAFE))
            # The formula context is only needed once the loop runs.
            ctx = encode.SolveContext(encode.build_cover_query(net, initial), net.places)

        basis = BasisBuilder(len(net.places))
        basis.add(target)
        pool: list[tuple[int, ...]] = []
        iterations = 0
        while True:
            if deadline.expired():
                return finish(Verdict(Verdict.UNKNOWN, "timeout"))
            if cfg.max_iterations is not None and iterations >= cfg.max_iterations:
                return finish(Verdict(Verdict.UNKNOWN, "iteration-cap"))
            if basis.covers(initial):
                return finish(Verdict(Verdict.UNSAFE))

            candidates = pre_basis(net, basis.elements())
            candidates.update(pool)
            fresh = sorted(v for v in candidates if not basis.covers(v))
            iterations += 1
            pruned = 0
            if prune and ctx is not None:
                kept_after_prune = []
                discarded = []
                for v in fresh:
                    if deadline.expired():
                        return finish(Verdict(Verdict.UNKNOWN, "timeout"))
                    t0 = time.perf_counter()
                    model = encode.solve(ctx, encode.cover_bindings(net, v), deadline=deadline.at)
                    stats.solver_time += time.perf_counter() - t0
                    stats.solver_queries += 1
                    if model is None:
                        discarded.append(v)
                    else:
                        kept_after_prune.append(v)
                for v in discarded:
                    encode.add_blocking(ctx, v)
                pruned = len(discarded)
                new_elements = kept_after_prune
            else:
                new_elements = fresh

            if not new_elements:
                stats.iterations.append(IterationStats(len(fresh), pruned, len(basis)))
                return finish(Verdict(Verdict.SAFE))

            if cfg.use_minbottle and prune:
                kept = minbottle(new_elements, cfg.c, cfg.k)
                if not kept:  # degenerate c=0 bottleneck; keep one for progress
                    kept = new_elements[:1]
            else:
                kept = new_elements
            kept_set = set(kept)
            pool = [v for v in new_elements if v not in kept_set]
            for v in kept:
                basis.add(v)
            stats.iterations.append(IterationStats(len(fresh), pruned, len(basis)))
    except ratlp.SolverTimeout:
        return finish(Verdict(Verdict.UNKNOWN, "timeout"))
