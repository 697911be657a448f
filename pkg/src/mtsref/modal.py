"""Decision procedures for modal refinement.

Four checkers, all computing greatest fixpoints over state pairs:

* ``refines_mts`` - the classic may/must condition for MTS.
* ``refines_bmts`` - the admissible-set condition for Boolean systems,
  via a worklist fixpoint (equivalently the limit of the bounded rounds
  computed by ``bounded_refines``).
* ``refines_pmts`` - the parametric definition: for every left valuation
  there must exist a right valuation under which the induced Boolean
  systems refine.
* ``refines_pmts_fixed_relation`` - the older, stronger parametric
  definition requiring one relation that works for all valuations.

On Boolean systems all parametric variants agree with ``refines_bmts``;
on MTS all agree with ``refines_mts``.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, FrozenSet, Optional, Tuple

from .errors import InconsistentInputError, KindError, ParamLimitError
from .systems import (
    DEFAULT_MAX_OUT_DEGREE,
    AdmissibleSet,
    System,
    SystemKind,
    Valuation,
    all_valuations,
    classify,
    induce_valuation,
    is_locally_consistent,
    mts_must_set,
    tran_table,
)
from .transform import parameter_free_hull

DEFAULT_MAX_PARAMS = 12

Pair = Tuple[int, int]
Relation = FrozenSet[Pair]


@dataclass(frozen=True)
class ModalVerdict:
    """Outcome of a modal refinement check.

    When the check holds, ``witness`` is a refinement relation containing
    the queried pair (for the parametric definition, ``witness_map`` maps
    each left valuation to its chosen right valuation and relation).  When
    it fails, ``counterexample`` is the last pair deleted by the fixpoint
    (for the parametric definition, ``failing_valuation`` is a left
    valuation admitting no right counterpart).
    """

    holds: bool
    witness: Optional[Relation] = None
    witness_map: Optional[Dict[Valuation, Tuple[Valuation, Relation]]] = None
    counterexample: Optional[Pair] = None
    failing_valuation: Optional[Valuation] = None


def _require_pruned(sys: System, which: str, max_out_degree: int) -> None:
    for s in sys.sorted_states():
        if not is_locally_consistent(sys, s, max_out_degree):
            raise InconsistentInputError(
                f"{which} system has a locally inconsistent state {s}; prune first"
            )


class _PairChecker:
    """Shared worklist fixpoint over S1 x S2 for a per-pair condition."""

    def __init__(self, left: System, right: System):
        self.left = left
        self.right = right
        self.lsucc: Dict[int, set] = defaultdict(set)
        self.rsucc: Dict[int, set] = defaultdict(set)
        self.lpred: Dict[int, set] = defaultdict(set)
        self.rpred: Dict[int, set] = defaultdict(set)
        for (s, _a, t) in left.transitions:
            self.lsucc[s].add(t)
            self.lpred[t].add(s)
        for (s, _a, t) in right.transitions:
            self.rsucc[s].add(t)
            self.rpred[t].add(s)

    def greatest_fixpoint(self, condition) -> Tuple[Relation, Optional[Pair]]:
        """Largest relation closed under ``condition``; also the last removal."""
        pairs = [(s, t) for s in self.left.sorted_states() for t in self.right.sorted_states()]
        rel = set(pairs)
        pending = list(pairs)
        queued = set(pairs)
        last_removed: Optional[Pair] = None
        while pending:
            pair = pending.pop()
            queued.discard(pair)
            if pair not in rel:
                continue
            if condition(pair, rel):
                continue
            rel.discard(pair)
            last_removed = pair
            s, t = pair
            for ps in self.lpred[s]:
                for pt in self.rpred[t]:
                    dep = (ps, pt)
                    if dep in rel and dep not in queued:
                        pending.append(dep)
                        queued.add(dep)
        return frozenset(rel), last_removed


def _two_sided_match(m: AdmissibleSet, n: AdmissibleSet, rel) -> bool:
    """Every element of each set has a same-action related partner in the other."""
    for (a, s2) in m:
        if not any(a == b and (s2, t2) in rel for (b, t2) in n):
            return False
    for (b, t2) in n:
        if not any(a == b and (s2, t2) in rel for (a, s2) in m):
            return False
    return True


def bmts_pair_condition(ltran, rtran):
    """Refinement condition on a pair, parameterized by admissible-set tables."""

    def condition(pair: Pair, rel) -> bool:
        s, t = pair
        for m in ltran[s]:
            if not any(_two_sided_match(m, n, rel) for n in rtran[t]):
                return False
        return True

    return condition


def refines_bmts(
    left: System,
    s0: int,
    right: System,
    t0: int,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
    check_pruned: bool = True,
) -> ModalVerdict:
    """Modal refinement between states of Boolean systems."""
    for sys, which in ((left, "left"), (right, "right")):
        if classify(sys) > SystemKind.BMTS:
            raise KindError(f"{which} system is parametric; fix a valuation first")
    if check_pruned:
        _require_pruned(left, "left", max_out_degree)
        _require_pruned(right, "right", max_out_degree)
    ltran = tran_table(left, max_out_degree=max_out_degree)
    rtran = tran_table(right, max_out_degree=max_out_degree)
    checker = _PairChecker(left, right)
    rel, last = checker.greatest_fixpoint(bmts_pair_condition(ltran, rtran))
    if (s0, t0) in rel:
        return ModalVerdict(holds=True, witness=rel)
    return ModalVerdict(holds=False, counterexample=last)


def refines_mts(
    left: System,
    s0: int,
    right: System,
    t0: int,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> ModalVerdict:
    """Modal refinement on MTS: may transitions simulate forward, musts backward."""
    for sys, which in ((left, "left"), (right, "right")):
        if classify(sys) > SystemKind.MTS:
            raise KindError(f"{which} system is not an MTS")
    lmust = {s: mts_must_set(left, s) for s in left.states}
    rmust = {t: mts_must_set(right, t) for t in right.states}
    lmay = {s: left.outgoing(s) for s in left.states}
    rmay = {t: right.outgoing(t) for t in right.states}

    def condition(pair: Pair, rel) -> bool:
        s, t = pair
        for (a, s2) in lmay[s]:
            if not any(a == b and (s2, t2) in rel for (b, t2) in rmay[t]):
                return False
        for (b, t2) in rmust[t]:
            if not any(a == b and (s2, t2) in rel for (a, s2) in lmust[s]):
                return False
        return True

    checker = _PairChecker(left, right)
    rel, last = checker.greatest_fixpoint(condition)
    if (s0, t0) in rel:
        return ModalVerdict(holds=True, witness=rel)
    return ModalVerdict(holds=False, counterexample=last)


def bounded_refines(
    left: System,
    s0: int,
    right: System,
    t0: int,
    rounds: int,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> bool:
    """Membership of the pair after ``rounds`` synchronous refinement rounds.

    Round zero is the full pair space; each round keeps the pairs whose
    condition holds against the previous round.  For ``rounds`` at least
    |S1 x S2| this coincides with the full fixpoint.
    """
    for sys, which in ((left, "left"), (right, "right")):
        if classify(sys) > SystemKind.BMTS:
            raise KindError(f"{which} system is parametric; fix a valuation first")
    ltran = tran_table(left, max_out_degree=max_out_degree)
    rtran = tran_table(right, max_out_degree=max_out_degree)
    condition = bmts_pair_condition(ltran, rtran)
    rel = {(s, t) for s in left.states for t in right.states}
    for _ in range(rounds):
        nxt = {pair for pair in rel if condition(pair, rel)}
        if nxt == rel:
            break
        rel = nxt
    return (s0, t0) in rel


def _check_param_limit(left: System, right: System, max_params: int) -> None:
    total = len(left.params) + len(right.params)
    if total > max_params:
        raise ParamLimitError(
            f"{total} parameters exceed the cap {max_params} for exhaustive valuation search"
        )


class _InducedCache:
    """Induced Boolean systems and their verdict-relevant tables, per valuation."""

    def __init__(self, sys: System, max_out_degree: int):
        self.sys = sys
        self.max_out_degree = max_out_degree
        self._induced: Dict[Valuation, System] = {}

    def induced(self, nu: Valuation) -> System:
        if nu not in self._induced:
            self._induced[nu] = induce_valuation(self.sys, nu)
        return self._induced[nu]


def refines_pmts(
    left: System,
    s0: int,
    right: System,
    t0: int,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
    max_params: int = DEFAULT_MAX_PARAMS,
) -> ModalVerdict:
    """Parametric modal refinement: every left valuation has a right match.

    The right valuations are searched in bitmask order over sorted parameter
    names.  Before searching, each left valuation is screened against a
    parameter-free weakening of the right side; failing that screen refutes
    the whole search for the valuation at once.
    """
    _check_param_limit(left, right, max_params)
    _require_pruned(left, "left", max_out_degree)
    _require_pruned(right, "right", max_out_degree)
    left_cache = _InducedCache(left, max_out_degree)
    right_cache = _InducedCache(right, max_out_degree)
    # Parameter-free weakening of the right side: its admissible sets are the
    # union over all valuations, so failing against it refutes every valuation.
    relaxed = parameter_free_hull(right, max_params=max_params)
    right_valuations = all_valuations(right.params)
    witness_map: Dict[Valuation, Tuple[Valuation, Relation]] = {}
    for mu in all_valuations(left.params):
        lsys = left_cache.induced(mu)
        if right.params:
            screen = refines_bmts(lsys, s0, relaxed, t0,
                                  max_out_degree=max_out_degree, check_pruned=False)
            if not screen.holds:
                return ModalVerdict(holds=False, counterexample=(s0, t0), failing_valuation=mu)
        found = None
        for nu in right_valuations:
            verdict = refines_bmts(lsys, s0, right_cache.induced(nu), t0,
                                   max_out_degree=max_out_degree, check_pruned=False)
            if verdict.holds:
                found = (nu, verdict.witness)
                break
        if found is None:
            return ModalVerdict(holds=False, counterexample=(s0, t0), failing_valuation=mu)
        witness_map[mu] = found
    return ModalVerdict(holds=True, witness_map=witness_map)


def refines_pmts_fixed_relation(
    left: System,
    s0: int,
    right: System,
    t0: int,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
    max_params: int = DEFAULT_MAX_PARAMS,
    max_selector_space: int = 1 << 16,
) -> ModalVerdict:
    """The stronger parametric definition with one relation for all valuations.

    Enumerates selector functions from left valuations to right valuations;
    for each selector the greatest relation simultaneously closed under every
    (mu, selector(mu)) condition is computed, seeded by the intersection of
    the per-valuation fixpoints (memoized across selectors).
    """
    _check_param_limit(left, right, max_params)
    _require_pruned(left, "left", max_out_degree)
    _require_pruned(right, "right", max_out_degree)
    left_vals = all_valuations(left.params)
    right_vals = all_valuations(right.params)
    selector_space = len(right_vals) ** len(left_vals)
    if selector_space > max_selector_space:
        raise ParamLimitError(
            f"selector space {selector_space} exceeds the cap {max_selector_space}"
        )
    left_cache = _InducedCache(left, max_out_degree)
    right_cache = _InducedCache(right, max_out_degree)
    checker = _PairChecker(left, right)

    conditions: Dict[Tuple[Valuation, Valuation], object] = {}
    relations: Dict[Tuple[Valuation, Valuation], Relation] = {}

    def building_blocks(mu: Valuation, nu: Valuation):
        key = (mu, nu)
        if key not in conditions:
            ltran = tran_table(left_cache.induced(mu), max_out_degree=max_out_degree)
            rtran = tran_table(right_cache.induced(nu), max_out_degree=max_out_degree)
            conditions[key] = bmts_pair_condition(ltran, rtran)
            relations[key], _ = checker.greatest_fixpoint(conditions[key])
        return conditions[key], relations[key]

    import itertools

    for choice in itertools.product(range(len(right_vals)), repeat=len(left_vals)):
        selector = {mu: right_vals[i] for mu, i in zip(left_vals, choice)}
        seed: Optional[set] = None
        conds = []
        for mu in left_vals:
            cond, base = building_blocks(mu, selector[mu])
            conds.append(cond)
            seed = set(base) if seed is None else seed & set(base)
        if seed is None:
            seed = {(s, t) for s in left.states for t in right.states}
        if (s0, t0) not in seed:
            continue
        rel = seed
        while True:
            nxt = {pair for pair in rel if all(cond(pair, rel) for cond in conds)}
            if nxt == rel:
                break
            rel = nxt
        if (s0, t0) in rel:
            return ModalVerdict(holds=True, witness=frozenset(rel))
    return ModalVerdict(holds=False, counterexample=(s0, t0))


def audit_bmts_witness(
    left: System, right: System, rel: Relation,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> bool:
    """One-pass re-check that a relation is closed under the Boolean condition."""
    ltran = tran_table(left, max_out_degree=max_out_degree)
    rtran = tran_table(right, max_out_degree=max_out_degree)
    condition = bmts_pair_condition(ltran, rtran)
    return all(condition(pair, rel) for pair in rel)
