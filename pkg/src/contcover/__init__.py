"""Petri net coverability checking with continuous-reachability pruning.

The toolkit bundles a classical backward coverability decider, a
polynomial decision procedure for reachability in continuous Petri
nets, its linear-size existential linear-rational-arithmetic encoding
(solved internally or emitted as SMT-LIB2), and a backward decider that
uses continuous coverability to discard basis elements.  A trap-based
safety check and brute-force oracles are included for cross-checking.
"""

__version__ = "0.1.0"

from .cover import Config, RunStats, Verdict, backward_cover, backward_cover_q, minbottle
from .encode import (
    SolveContext,
    add_blocking,
    build_cover_query,
    build_fs_formula,
    build_reach_formula,
    cover_bindings,
    emit_smtlib,
    solve,
)
from .gen import random_instance
from .mistio import Instance, ParseError, parse, serialize
from .oracle import Budget, forward_cover_bounded, q_reachable_bruteforce
from .petri import (
    AmountOutOfRange,
    NotEnabled,
    PetriNet,
    adjacency,
    enabling_degree,
    fire_continuous,
    fire_discrete,
    incidence,
    make_net,
    parikh,
    reverse_net,
    subnet,
    support,
)
from .qreach import QVerdict, in_firing_set, q_coverable, q_reachable, saturate_firing
from .ratlp import DeltaRational, Feasibility, LinearSystem, check_certificate, feasible
from .structural import TrapVerdict, classify, max_trap_within, trap_safety_check
from .upward import Basis, BasisBuilder, member_up, minimize, pre_basis

__all__ = [name for name in dir() if not name.startswith("_")]
