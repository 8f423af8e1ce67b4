"""Seeded random coverability instances for benchmarking and testing."""

from __future__ import annotations

import random
from typing import Optional

from .mistio import Instance
from .petri import make_net


def random_instance(
    places: int,
    transitions: int,
    seed: int,
    max_weight: int = 2,
    max_tokens: int = 3,
    name: Optional[str] = None,
) -> Instance:
    """Generate a reproducible random instance.

    Every transition draws up to two input and two output arcs with
    weights in [1, max_weight]; initial marking and target entries lie
    in [0, max_tokens] with at least one positive target entry.  The
    same parameters and seed always give a structurally identical
    instance.
    """
    if places < 1 or transitions < 0:
        raise ValueError("need at least one place and a non-negative transition count")
    if max_weight < 1 or max_tokens < 0:
        raise ValueError("max_weight must be >= 1 and max_tokens >= 0")
    rng = random.Random(seed)
    pnames = [f"p{i}" for i in range(places)]
    tnames = [f"t{i + 1}" for i in range(transitions)]
    pre = {}
    post = {}
    for t in tnames:
        for store in (pre, post):
            for p in rng.sample(pnames, rng.randint(0, min(2, places))):
                store[(p, t)] = rng.randint(1, max_weight)
    initial = tuple(rng.randint(0, max_tokens) for _ in pnames)
    target = tuple(rng.randint(0, max_tokens) for _ in pnames)
    if not any(target) and max_tokens > 0:
        bumped = list(target)
        bumped[rng.randrange(places)] = rng.randint(1, max_tokens)
        target = tuple(bumped)
    net = make_net(pnames, tnames, pre, post)
    return Instance(
        name or f"gen_p{places}_t{transitions}_s{seed}",
        net,
        initial,
        (target,),
    )
