"""System transformations: de-parameterization, de-negation and the two hulls.

* ``deparameterize`` removes parameters by making one copy of the system per
  valuation, with a fresh initial state whose obligation selects exactly one
  copy.  Implementation sets are preserved.
* ``denegate`` turns a Boolean system into a negation-free CNF system whose
  states are the admissible transition sets of the original; the result needs
  several initial states.
* ``deterministic_hull`` is the powerset construction with disjoined,
  retargeted obligations - the smallest deterministic overapproximation.
* ``parameter_free_hull`` disjoins the obligations over all parameter
  valuations - an overapproximation that drops the parameters without
  introducing nondeterminism.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, FrozenSet, Tuple

from .errors import ParamLimitError, StateLimitError
from .formulas import (
    Formula,
    Not,
    TransAtom,
    and_all,
    map_trans_atoms,
    or_all,
    simplify,
    substitute_params,
)
from .systems import (
    DEFAULT_MAX_OUT_DEGREE,
    System,
    Valuation,
    all_valuations,
    reachable_states,
    restrict_to,
    tran_sets,
)

DEFAULT_MAX_DEPARAM_PARAMS = 10
DEFAULT_MAX_HULL_PARAMS = 12
DEFAULT_MAX_HULL_STATES = 4096


@dataclass(frozen=True)
class MultiInitialSystem:
    """A system together with a nonempty set of initial states."""

    system: System
    initials: Tuple[int, ...]

    def __post_init__(self):
        if not self.initials:
            raise ValueError("a multi-initial system needs at least one initial state")
        for s in self.initials:
            if s not in self.system.states:
                raise ValueError(f"initial state {s} not in state set")


def _valuation_tag(nu: Valuation) -> str:
    return "{" + ",".join(sorted(nu)) + "}"


def deparameterize(
    sys: System,
    s0: int,
    trim: bool = False,
    max_params: int = DEFAULT_MAX_DEPARAM_PARAMS,
) -> Tuple[System, int]:
    """Parameter-free system with one copy per valuation plus a fresh initial.

    The fresh initial state's obligation is a disjunction with one branch per
    valuation: the substituted obligation of ``s0`` retargeted into that
    valuation's copy, conjoined with the negation of every initial transition
    atom leading into other copies.  The guards force every admissible set to
    live inside a single copy, which is what makes the implementation sets
    coincide with the original's.

    Untrimmed, the result has exactly 1 + |S| * 2^|P| states; with ``trim``
    only the part reachable from the fresh initial is kept.
    """
    if len(sys.params) > max_params:
        raise ParamLimitError(
            f"{len(sys.params)} parameters exceed the cap {max_params} for de-parameterization"
        )
    valuations = all_valuations(sys.params)
    states = sorted(sys.states)
    copy_id: Dict[Tuple[int, Valuation], int] = {}
    names: Dict[int, str] = {0: f"{sys.name_of(s0)}@B"}
    next_id = 1
    for nu in valuations:
        for s in states:
            copy_id[(s, nu)] = next_id
            names[next_id] = f"{sys.name_of(s)}@{_valuation_tag(nu)}"
            next_id += 1

    transitions = set()
    root_atoms: Dict[Valuation, list] = {nu: [] for nu in valuations}
    for nu in valuations:
        for (s, a, t) in sys.transitions:
            transitions.add((copy_id[(s, nu)], a, copy_id[(t, nu)]))
            if s == s0:
                root_atoms[nu].append((a, copy_id[(t, nu)]))
        for (a, tid) in root_atoms[nu]:
            transitions.add((0, a, tid))

    obligations: Dict[int, Formula] = {}
    for nu in valuations:
        for s in states:
            phi = substitute_params(sys.obligation(s), nu)
            phi = map_trans_atoms(phi, lambda a, t, nu=nu: TransAtom(a, copy_id[(t, nu)]))
            obligations[copy_id[(s, nu)]] = phi

    branches = []
    for nu in valuations:
        own = substitute_params(sys.obligation(s0), nu)
        own = map_trans_atoms(own, lambda a, t, nu=nu: TransAtom(a, copy_id[(t, nu)]))
        foreign = [
            Not(TransAtom(a, tid))
            for other in valuations
            if other != nu
            for (a, tid) in sorted(root_atoms[other], key=lambda p: (p[0], p[1]))
        ]
        branches.append(and_all([own] + foreign))
    obligations[0] = or_all(branches)

    result = System(
        states=frozenset(range(next_id)),
        transitions=frozenset(transitions),
        params=frozenset(),
        obligations=obligations,
        initial=0,
        state_names=names,
    )
    if trim:
        result = restrict_to(result, reachable_states(result, 0))
    return result, 0


def denegate(
    sys: System,
    s0: int,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> MultiInitialSystem:
    """Negation-free CNF system whose states are admissible transition sets.

    A state M requires, for each of its transitions (a, s'), at least one
    admissible set of s' to be reached under a.  The initial states are the
    admissible sets of ``s0``.  Requires a pruned Boolean system (every
    referenced state must have at least one admissible set).
    """
    if sys.params:
        raise ParamLimitError("de-negation expects a parameter-free system")
    tran: Dict[int, Tuple] = {s: tran_sets(sys, s, max_out_degree=max_out_degree) for s in sys.sorted_states()}
    distinct = sorted({m for sets in tran.values() for m in sets}, key=lambda m: sorted(m))
    if not tran.get(s0):
        raise ValueError(f"state {s0} has no admissible sets; prune first")
    ids = {m: i for i, m in enumerate(distinct)}
    names = {i: f"M#{i}" for i in range(len(distinct))}

    transitions = set()
    obligations: Dict[int, Formula] = {}
    for m in distinct:
        clauses = []
        for (a, s2) in sorted(m):
            options = tran[s2]
            if not options:
                raise ValueError(f"state {s2} has no admissible sets; prune first")
            clauses.append(or_all([TransAtom(a, ids[n]) for n in sorted(options, key=sorted)]))
            for n in options:
                transitions.add((ids[m], a, ids[n]))
        obligations[ids[m]] = and_all(clauses)

    system = System(
        states=frozenset(ids.values()),
        transitions=frozenset(transitions),
        params=frozenset(),
        obligations=obligations,
        initial=ids[sorted(tran[s0], key=sorted)[0]],
        state_names=names,
    )
    return MultiInitialSystem(system, tuple(ids[m] for m in sorted(tran[s0], key=sorted)))


def deterministic_hull(
    sys: System,
    s0: int,
    max_states: int = DEFAULT_MAX_HULL_STATES,
) -> Tuple[System, int]:
    """Reachable powerset construction with disjoined, retargeted obligations.

    Each macrostate Q gets, per action a, one transition to the set of all
    a-successors of Q's members; the obligation of Q disjoins the members'
    obligations with every atom (a, s') retargeted to (a, Q_a).  Parameters
    are kept.
    """
    succ: Dict[Tuple[int, str], set] = {}
    for (s, a, t) in sys.transitions:
        succ.setdefault((s, a), set()).add(t)

    def successors(macro: FrozenSet[int]) -> Dict[str, FrozenSet[int]]:
        by_action: Dict[str, set] = {}
        for s in macro:
            for a in sys.alphabet:
                targets = succ.get((s, a))
                if targets:
                    by_action.setdefault(a, set()).update(targets)
        return {a: frozenset(v) for a, v in by_action.items()}

    start = frozenset({s0})
    order = [start]
    seen = {start}
    idx = 0
    while idx < len(order):
        macro = order[idx]
        idx += 1
        for a in sorted(successors(macro)):
            nxt = successors(macro)[a]
            if nxt not in seen:
                if len(order) >= max_states:
                    raise StateLimitError(
                        f"deterministic hull exceeds the macrostate cap {max_states}"
                    )
                seen.add(nxt)
                order.append(nxt)

    ids = {macro: i for i, macro in enumerate(order)}
    names = {i: "{" + ",".join(sys.name_of(s) for s in sorted(macro)) + "}" for macro, i in ids.items()}
    transitions = set()
    obligations: Dict[int, Formula] = {}
    for macro in order:
        by_action = successors(macro)
        for a, nxt in by_action.items():
            transitions.add((ids[macro], a, ids[nxt]))
        parts = []
        for s in sorted(macro):
            phi = map_trans_atoms(
                sys.obligation(s), lambda a, t: TransAtom(a, ids[by_action[a]])
            )
            parts.append(phi)
        obligations[ids[macro]] = or_all(parts)

    result = System(
        states=frozenset(ids.values()),
        transitions=frozenset(transitions),
        params=sys.params,
        obligations=obligations,
        initial=ids[start],
        state_names=names,
    )
    return result, ids[start]


def parameter_free_hull(
    sys: System,
    max_params: int = DEFAULT_MAX_HULL_PARAMS,
) -> System:
    """Disjunction of each obligation over all parameter valuations.

    States and transitions are unchanged; the admissible sets of each state
    become the union over all valuations of the original's.
    """
    if len(sys.params) > max_params:
        raise ParamLimitError(
            f"{len(sys.params)} parameters exceed the cap {max_params} for the parameter-free hull"
        )
    valuations = all_valuations(sys.params)
    obligations = {
        s: or_all([substitute_params(sys.obligation(s), nu) for nu in valuations])
        for s in sys.states
    }
    return System(
        states=sys.states,
        transitions=sys.transitions,
        params=frozenset(),
        obligations=obligations,
        initial=sys.initial,
        state_names=dict(sys.state_names),
    )


def simplify_obligations(sys: System) -> System:
    """Constant-fold every obligation; verdict-preserving cosmetic cleanup."""
    return System(
        states=sys.states,
        transitions=sys.transitions,
        params=sys.params,
        obligations={s: simplify(sys.obligation(s)) for s in sys.states},
        initial=sys.initial,
        state_names=dict(sys.state_names),
    )
