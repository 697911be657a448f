"""Transition systems with Boolean obligations and parameters.

One representation covers the whole hierarchy: plain labelled transition
systems, modal transition systems (may/must), disjunctive systems (negation
free CNF obligations), Boolean systems (arbitrary obligations) and parametric
systems (obligations over global Boolean parameters).  ``classify`` reports
the most specific kind a system belongs to.

States are integer ids; display names live in ``state_names`` and matter only
to the textual format.  All values are immutable after construction and all
operations here are pure.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Dict, FrozenSet, Iterable, Optional, Tuple

from .errors import OutDegreeLimitError
from .formulas import (
    FF,
    TT,
    And,
    Formula,
    Not,
    TransAtom,
    and_all,
    conjuncts,
    evaluate,
    is_negation_free_cnf,
    is_positive_conjunction,
    map_trans_atoms,
    param_atoms,
    substitute_params,
    trans_atoms,
)

Valuation = FrozenSet[str]
AdmissibleSet = FrozenSet[Tuple[str, int]]

EMPTY_VALUATION: Valuation = frozenset()

DEFAULT_MAX_OUT_DEGREE = 20


class SystemKind(enum.IntEnum):
    """Nested system kinds, most specific first."""

    IMPLEMENTATION = 0
    MTS = 1
    DMTS = 2
    BMTS = 3
    PMTS = 4


@dataclass(frozen=True, eq=False)
class System:
    """A transition system with per-state Boolean obligations.

    ``transitions`` is a set of (source, action, target) triples; each
    obligation may only mention transition atoms matching an outgoing triple
    of its state, and parameter atoms drawn from ``params``.  ``initial`` may
    be None for systems whose initial state was pruned away.
    """

    states: FrozenSet[int]
    transitions: FrozenSet[Tuple[int, str, int]]
    params: FrozenSet[str]
    obligations: Dict[int, Formula]
    initial: Optional[int] = None
    state_names: Dict[int, str] = field(default_factory=dict)

    def __post_init__(self):
        for (src, _a, tgt) in self.transitions:
            if src not in self.states or tgt not in self.states:
                raise ValueError(f"transition endpoint outside state set: {(src, _a, tgt)}")
        if self.initial is not None and self.initial not in self.states:
            raise ValueError(f"initial state {self.initial} not in state set")
        for s in self.states:
            phi = self.obligations.get(s, TT)
            out = self.outgoing(s)
            for pair in trans_atoms(phi):
                if pair not in out:
                    raise ValueError(
                        f"obligation of state {s} mentions {pair} with no matching transition"
                    )
            extra = param_atoms(phi) - self.params
            if extra:
                raise ValueError(f"obligation of state {s} mentions unknown parameters {sorted(extra)}")

    @property
    def alphabet(self) -> FrozenSet[str]:
        """Action labels occurring in the transition relation."""
        return frozenset(a for (_s, a, _t) in self.transitions)

    def obligation(self, s: int) -> Formula:
        return self.obligations.get(s, TT)

    def outgoing(self, s: int) -> AdmissibleSet:
        return frozenset((a, t) for (src, a, t) in self.transitions if src == s)

    def name_of(self, s: int) -> str:
        return self.state_names.get(s, f"s{s}")

    def sorted_states(self) -> list[int]:
        return sorted(self.states)

    def canonical(self) -> tuple:
        """Comparable structural summary, used for identity checks in tests."""
        return (
            tuple(sorted(self.states)),
            tuple(sorted(self.transitions)),
            tuple(sorted(self.params)),
            tuple((s, self.obligation(s)) for s in sorted(self.states)),
            self.initial,
        )

    def structurally_equal(self, other: "System") -> bool:
        return self.canonical() == other.canonical()


def make_system(
    states: Iterable[int],
    transitions: Iterable[Tuple[int, str, int]],
    obligations: Dict[int, Formula] | None = None,
    params: Iterable[str] = (),
    initial: Optional[int] = None,
    state_names: Dict[int, str] | None = None,
) -> System:
    return System(
        states=frozenset(states),
        transitions=frozenset(transitions),
        params=frozenset(params),
        obligations=dict(obligations or {}),
        initial=initial,
        state_names=dict(state_names or {}),
    )


def tran_sets(
    sys: System,
    s: int,
    nu: Valuation = EMPTY_VALUATION,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> Tuple[AdmissibleSet, ...]:
    """All admissible transition sets of ``s`` under the valuation ``nu``.

    Enumerates every subset of the outgoing transitions and keeps those that
    satisfy the obligation together with ``nu``.  Deterministic order: subsets
    by increasing bitmask over the sorted outgoing pairs.
    """
    out = sorted(sys.outgoing(s))
    if len(out) > max_out_degree:
        raise OutDegreeLimitError(s, len(out), max_out_degree)
    phi = sys.obligation(s)
    result = []
    for mask in range(1 << len(out)):
        subset = frozenset(out[i] for i in range(len(out)) if mask >> i & 1)
        if evaluate(phi, subset, nu):
            result.append(subset)
    return tuple(result)


def tran_table(
    sys: System,
    nu: Valuation = EMPTY_VALUATION,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> Dict[int, Tuple[AdmissibleSet, ...]]:
    """Admissible sets for every state at once."""
    return {s: tran_sets(sys, s, nu, max_out_degree) for s in sys.sorted_states()}


def induce_valuation(sys: System, nu: Valuation) -> System:
    """Fix the parameters to ``nu``: substitute each parameter atom by tt/ff.

    The result has no parameters; its admissible sets coincide with the
    original's under ``nu``.
    """
    unknown = frozenset(nu) - sys.params
    if unknown:
        raise ValueError(f"valuation mentions unknown parameters {sorted(unknown)}")
    obligations = {s: substitute_params(sys.obligation(s), frozenset(nu)) for s in sys.states}
    return replace(sys, params=frozenset(), obligations=obligations)


def _is_full_conjunction(phi: Formula, out: AdmissibleSet) -> bool:
    parts = conjuncts(phi)
    if not all(isinstance(p, TransAtom) for p in parts):
        return False
    return {(p.action, p.target) for p in parts} == set(out)


def classify(sys: System) -> SystemKind:
    """Most specific kind of the system.

    Implementation: no parameters and each obligation is the conjunction of
    all outgoing transition atoms.  MTS: conjunction of some outgoing atoms.
    DMTS: negation-free CNF.  BMTS: any obligation without parameters.
    """
    if sys.params:
        return SystemKind.PMTS
    obligations = [(sys.obligation(s), sys.outgoing(s)) for s in sys.sorted_states()]
    if all(_is_full_conjunction(phi, out) for phi, out in obligations):
        return SystemKind.IMPLEMENTATION
    if all(is_positive_conjunction(phi) for phi, _ in obligations):
        return SystemKind.MTS
    if all(is_negation_free_cnf(phi) for phi, _ in obligations):
        return SystemKind.DMTS
    return SystemKind.BMTS


def all_valuations(params: FrozenSet[str]) -> Tuple[Valuation, ...]:
    """All subsets of the parameter set, in bitmask order over sorted names."""
    names = sorted(params)
    return tuple(
        frozenset(names[i] for i in range(len(names)) if mask >> i & 1)
        for mask in range(1 << len(names))
    )


def is_locally_consistent(
    sys: System, s: int, max_out_degree: int = DEFAULT_MAX_OUT_DEGREE
) -> bool:
    """True iff the obligation of ``s`` is satisfiable under some valuation."""
    for nu in all_valuations(sys.params):
        if tran_sets(sys, s, nu, max_out_degree):
            return True
    return False


def prune(
    sys: System, max_out_degree: int = DEFAULT_MAX_OUT_DEGREE
) -> Tuple[System, FrozenSet[int]]:
    """Remove locally inconsistent states until none remain.

    Incident transitions are dropped; transition atoms that lose their
    transition are rewritten to ff, which preserves the satisfaction
    semantics of "that transition cannot be taken".  Returns the pruned
    system and the set of removed state ids.  The surviving states keep
    their ids; the result may be empty.
    """
    current = sys
    removed: set[int] = set()
    while True:
        bad = [s for s in current.sorted_states() if not is_locally_consistent(current, s, max_out_degree)]
        if not bad:
            return current, frozenset(removed)
        removed.update(bad)
        gone = set(bad)
        keep = current.states - gone
        transitions = frozenset(
            (s, a, t) for (s, a, t) in current.transitions if s not in gone and t not in gone
        )
        still_out = {s: frozenset((a, t) for (src, a, t) in transitions if src == s) for s in keep}

        def drop_dangling(phi: Formula, out: AdmissibleSet) -> Formula:
            return map_trans_atoms(
                phi, lambda a, t: TransAtom(a, t) if (a, t) in out else FF
            )

        obligations = {s: drop_dangling(current.obligation(s), still_out[s]) for s in keep}
        current = System(
            states=frozenset(keep),
            transitions=transitions,
            params=current.params,
            obligations=obligations,
            initial=current.initial if current.initial in keep else None,
            state_names={s: n for s, n in current.state_names.items() if s in keep},
        )


def is_deterministic(sys: System) -> bool:
    """At most one target per (source, action)."""
    seen: dict[Tuple[int, str], int] = {}
    for (s, a, t) in sys.transitions:
        if (s, a) in seen and seen[(s, a)] != t:
            return False
        seen[(s, a)] = t
    return True


def reachable_states(sys: System, start: int) -> FrozenSet[int]:
    """States reachable from ``start`` along transitions."""
    succ: Dict[int, set[int]] = {s: set() for s in sys.states}
    for (s, _a, t) in sys.transitions:
        succ[s].add(t)
    seen = {start}
    frontier = [start]
    while frontier:
        s = frontier.pop()
        for t in succ[s]:
            if t not in seen:
                seen.add(t)
                frontier.append(t)
    return frozenset(seen)


def restrict_to(sys: System, keep: FrozenSet[int]) -> System:
    """Subsystem induced by ``keep``; obligations must not dangle outside."""
    transitions = frozenset((s, a, t) for (s, a, t) in sys.transitions if s in keep and t in keep)
    return System(
        states=frozenset(keep),
        transitions=transitions,
        params=sys.params,
        obligations={s: sys.obligation(s) for s in keep},
        initial=sys.initial if sys.initial in keep else None,
        state_names={s: n for s, n in sys.state_names.items() if s in keep},
    )


def is_acyclic(sys: System) -> bool:
    """True iff the transition graph has no directed cycle."""
    succ: Dict[int, set[int]] = {s: set() for s in sys.states}
    for (s, _a, t) in sys.transitions:
        succ[s].add(t)
    color: Dict[int, int] = {}

    def visit(s: int) -> bool:
        color[s] = 1
        for t in succ[s]:
            c = color.get(t, 0)
            if c == 1:
                return False
            if c == 0 and not visit(t):
                return False
        color[s] = 2
        return True

    return all(visit(s) for s in sys.sorted_states() if color.get(s, 0) == 0)


def mts_must_set(sys: System, s: int) -> AdmissibleSet:
    """Must transitions of an MTS state: the conjuncts of its obligation."""
    phi = sys.obligation(s)
    parts = conjuncts(phi)
    if not all(isinstance(p, TransAtom) for p in parts):
        raise ValueError(f"state {s} is not MTS-shaped: {phi!r}")
    return frozenset((p.action, p.target) for p in parts)
