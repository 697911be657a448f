"""Thorough refinement: implementation-set inclusion.

Two routes are provided.  The exact route computes the least fixpoint of
"avoid sets": pairs (s, T) of a state and a set of states admitting an
implementation that refines s but none of T.  A state s thoroughly refines t
exactly when (s, {t}) is not avoidable in the disjoint union of the pruned
systems.  The oracle route, valid for acyclic systems only, enumerates every
implementation of a state as a canonical finite tree, deduplicated up to
bisimilarity, and decides inclusion extensionally; it exists to validate the
exact route at desk scale.

Canonical trees are nested frozensets of (action, subtree) pairs, so
bisimilarity of trees is plain equality.
"""

from __future__ import annotations

from itertools import product
from typing import Dict, FrozenSet, List, Optional, Tuple

from .errors import (
    CyclicInputError,
    InconsistentInputError,
    KindError,
    SizeLimitError,
    StateLimitError,
)
from .formulas import and_all, TransAtom
from .systems import (
    DEFAULT_MAX_OUT_DEGREE,
    System,
    Valuation,
    is_acyclic,
    is_locally_consistent,
    prune,
    reachable_states,
    restrict_to,
    tran_table,
)
from .transform import deparameterize

DEFAULT_MAX_AVOID_STATES = 10
DEFAULT_MAX_IMPLEMENTATIONS = 100_000

Tree = FrozenSet[Tuple[str, "Tree"]]
AvoidPair = Tuple[int, FrozenSet[int]]

DEADLOCK: Tree = frozenset()


def tree_depth(tree: Tree) -> int:
    return 0 if not tree else 1 + max(tree_depth(child) for _a, child in tree)


def tree_as_system(tree: Tree) -> Tuple[System, int]:
    """Concrete labelled transition system equivalent to the canonical tree.

    Identical subtrees share one state, so the result is a DAG bisimilar to
    the tree; its obligations are full conjunctions of the outgoing atoms.
    """
    ids: Dict[Tree, int] = {}
    transitions = []

    def visit(node: Tree) -> int:
        if node in ids:
            return ids[node]
        ids[node] = len(ids)
        me = ids[node]
        for (a, child) in sorted(node, key=lambda p: (p[0], _tree_key(p[1]))):
            transitions.append((me, a, visit(child)))
        return me

    root = visit(tree)
    obligations = {}
    for node, sid in ids.items():
        atoms = [TransAtom(a, ids[child]) for (a, child) in node]
        obligations[sid] = and_all(sorted(atoms, key=lambda x: (x.action, x.target)))
    return (
        System(
            states=frozenset(ids.values()),
            transitions=frozenset(transitions),
            params=frozenset(),
            obligations=obligations,
            initial=root,
        ),
        root,
    )


def _tree_key(tree: Tree):
    return tuple(sorted((a, _tree_key(child)) for (a, child) in tree))


def enumerate_implementations(
    sys: System,
    s: int,
    depth_bound: Optional[int] = None,
    max_results: int = DEFAULT_MAX_IMPLEMENTATIONS,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> FrozenSet[Tree]:
    """All implementations of an acyclic state, up to bisimilarity.

    For each admissible set of the state, every transition (a, s') in it may
    fan out to any nonempty subset of the recursively enumerated
    implementations of s'; the resulting trees are collected as a set, which
    deduplicates bisimilar results for free.  Exact for acyclic systems:
    any implementation is matched transition-wise into the spec, so its
    depth is bounded and its children realize exactly such subsets.
    """
    if sys.params:
        raise KindError("implementation enumeration expects a parameter-free system")
    region = reachable_states(sys, s)
    sub = restrict_to(sys, region)
    if not is_acyclic(sub):
        raise CyclicInputError(f"state {s} reaches a cycle; the oracle handles acyclic systems only")
    tran = tran_table(sub, max_out_degree=max_out_degree)
    for state in sorted(region):
        if not tran[state]:
            raise InconsistentInputError(f"state {state} has no admissible sets; prune first")
    if depth_bound is not None:
        longest = _longest_path(sub, s)
        if depth_bound < longest:
            raise ValueError(f"depth bound {depth_bound} below the longest path {longest} from {s}")

    memo: Dict[int, FrozenSet[Tree]] = {}

    def sem(state: int) -> FrozenSet[Tree]:
        if state in memo:
            return memo[state]
        results: set = set()
        for m in tran[state]:
            elements = sorted(m)
            option_counts = 1
            for (_a, s2) in elements:
                option_counts *= (1 << len(sem(s2))) - 1
                if option_counts > max_results:
                    raise SizeLimitError(
                        f"implementation set of state {state} exceeds the cap {max_results}"
                    )
            child_options: List[List[FrozenSet[Tree]]] = []
            for (_a, s2) in elements:
                subsets = _nonempty_subsets(sorted(sem(s2), key=_tree_key))
                child_options.append(subsets)
            for combo in product(*child_options):
                edges = set()
                for (a, _s2), chosen in zip(elements, combo):
                    for child in chosen:
                        edges.add((a, child))
                results.add(frozenset(edges))
                if len(results) > max_results:
                    raise SizeLimitError(
                        f"implementation set of state {state} exceeds the cap {max_results}"
                    )
        memo[state] = frozenset(results)
        return memo[state]

    return sem(s)


def _nonempty_subsets(items: list) -> List[FrozenSet]:
    return [
        frozenset(items[i] for i in range(len(items)) if mask >> i & 1)
        for mask in range(1, 1 << len(items))
    ]


def _longest_path(sys: System, start: int) -> int:
    succ: Dict[int, list] = {s: [] for s in sys.states}
    for (s, _a, t) in sys.transitions:
        succ[s].append(t)
    memo: Dict[int, int] = {}

    def depth(s: int) -> int:
        if s not in memo:
            memo[s] = 1 + max((depth(t) for t in succ[s]), default=-1)
        return memo[s]

    return depth(start)


def compute_avoid(
    sys: System,
    max_states: int = DEFAULT_MAX_AVOID_STATES,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> FrozenSet[AvoidPair]:
    """Least fixpoint of avoidable pairs (s, T) of a consistent Boolean system.

    A pair enters the set when T is empty, or when some admissible set M of s
    and some assignment of "later" sets satisfy the avoidance conditions
    against the current set: every admissible set of every member of T is
    beaten either by a required transition it cannot match or by a transition
    of M whose targets avoid all its same-action targets, and all the later
    sets are themselves avoidable from the respective targets of M.

    Kleene iteration over the full pair space; the set is downward closed in
    T, and closure is materialized so membership queries are constant-time.
    Later-set candidates are restricted per action to the targets occurring
    in the admissible sets of T's members, which is complete by downward
    closure.
    """
    if sys.params:
        raise KindError("avoid-set computation expects a parameter-free system")
    states = sys.sorted_states()
    if len(states) > max_states:
        raise StateLimitError(
            f"{len(states)} states exceed the cap {max_states} for avoid-set computation"
        )
    tran = tran_table(sys, max_out_degree=max_out_degree)
    for s in states:
        if not tran[s]:
            raise InconsistentInputError(f"state {s} has no admissible sets; prune first")

    avoid: Dict[int, set] = {s: {frozenset()} for s in states}

    def targets_by_action(pairs) -> Dict[str, frozenset]:
        out: Dict[str, set] = {}
        for (a, t) in pairs:
            out.setdefault(a, set()).add(t)
        return {a: frozenset(v) for a, v in out.items()}

    def candidate_holds(s: int, group: FrozenSet[int]) -> bool:
        distinct_ns = sorted({n for t in group for n in tran[t]}, key=sorted)
        ns_by_action = [targets_by_action(n) for n in distinct_ns]
        for m in tran[s]:
            m_by_action = targets_by_action(m)
            if _later_assignment_exists(m_by_action, distinct_ns, ns_by_action):
                return True
        return False

    def _later_assignment_exists(m_by_action, distinct_ns, ns_by_action) -> bool:
        # Options per admissible set N of a member of the avoided group:
        #   free  - some action is required by exactly one side;
        #   (a, t_a) - t_a must land in every later set under a, so it joins
        #              the shared demand set I[a];
        #   (a, s_a) - N's a-targets must all be avoidable from s_a together
        #              with I[a] (a commitment, rechecked as I[a] grows).
        pending = []
        for n_by_action in ns_by_action:
            actions = set(m_by_action) | set(n_by_action)
            free = any(
                bool(m_by_action.get(a)) != bool(n_by_action.get(a)) for a in actions
            )
            if free:
                continue
            options = []
            for a in sorted(set(m_by_action) & set(n_by_action)):
                for t_a in sorted(n_by_action[a]):
                    options.append(("demand", a, t_a))
                for s_a in sorted(m_by_action[a]):
                    options.append(("commit", a, s_a, n_by_action[a]))
            if not options:
                return False
            pending.append(options)
        pending.sort(key=len)

        demands: Dict[str, frozenset] = {a: frozenset() for a in m_by_action}
        commitments: List[Tuple[str, int, frozenset]] = []

        def demand_ok(a: str, new_i: frozenset) -> bool:
            for s_a in m_by_action[a]:
                if new_i not in avoid[s_a]:
                    return False
            for (ca, cs, cn) in commitments:
                if ca == a and (new_i | cn) not in avoid[cs]:
                    return False
            return True

        def solve(idx: int) -> bool:
            if idx == len(pending):
                return True
            for option in pending[idx]:
                if option[0] == "demand":
                    _kind, a, t_a = option
                    if t_a in demands[a]:
                        if solve(idx + 1):
                            return True
                        continue
                    new_i = demands[a] | {t_a}
                    if not demand_ok(a, new_i):
                        continue
                    demands[a] = new_i
                    if solve(idx + 1):
                        return True
                    demands[a] = new_i - {t_a}
                else:
                    _kind, a, s_a, n_targets = option
                    if (demands[a] | n_targets) not in avoid[s_a]:
                        continue
                    commitments.append((a, s_a, n_targets))
                    if solve(idx + 1):
                        return True
                    commitments.pop()
            return False

        return solve(0)

    def add_with_closure(s: int, group: FrozenSet[int]) -> None:
        members = sorted(group)
        for mask in range(1 << len(members)):
            subset = frozenset(members[i] for i in range(len(members)) if mask >> i & 1)
            avoid[s].add(subset)

    changed = True
    while changed:
        changed = False
        for s in states:
            candidates = sorted(
                (frozenset(g) for g in _subsets(tuple(x for x in states if x != s))),
                key=lambda g: (len(g), sorted(g)),
            )
            for group in candidates:
                if group in avoid[s]:
                    continue
                if candidate_holds(s, group):
                    add_with_closure(s, group)
                    changed = True

    return frozenset((s, group) for s, groups in avoid.items() for group in groups)


def _subsets(items: tuple):
    for mask in range(1 << len(items)):
        yield tuple(items[i] for i in range(len(items)) if mask >> i & 1)


def disjoint_union(left: System, right: System) -> Tuple[System, Dict[int, int], Dict[int, int]]:
    """Side-by-side union; returns the system and both id translation maps."""
    lmap = {s: i for i, s in enumerate(left.sorted_states())}
    offset = len(lmap)
    rmap = {s: offset + i for i, s in enumerate(right.sorted_states())}

    def remap(phi, table):
        from .formulas import map_trans_atoms

        return map_trans_atoms(phi, lambda a, t: TransAtom(a, table[t]))

    states = frozenset(lmap.values()) | frozenset(rmap.values())
    transitions = frozenset(
        {(lmap[s], a, lmap[t]) for (s, a, t) in left.transitions}
        | {(rmap[s], a, rmap[t]) for (s, a, t) in right.transitions}
    )
    obligations = {}
    names = {}
    for s in left.states:
        obligations[lmap[s]] = remap(left.obligation(s), lmap)
        names[lmap[s]] = "L." + left.name_of(s)
    for s in right.states:
        obligations[rmap[s]] = remap(right.obligation(s), rmap)
        names[rmap[s]] = "R." + right.name_of(s)
    union = System(
        states=states,
        transitions=transitions,
        params=frozenset(),
        obligations=obligations,
        state_names=names,
    )
    return union, lmap, rmap


def thorough_refines_bmts(
    left: System,
    s0: int,
    right: System,
    t0: int,
    max_states: int = DEFAULT_MAX_AVOID_STATES,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> bool:
    """Implementation-set inclusion between Boolean system states.

    Both sides are pruned first.  An inconsistent left state refines anything
    (it has no implementations); an inconsistent right state is refined by
    nothing consistent.  Otherwise the pair is checked against the avoid sets
    of the disjoint union.
    """
    for sys, which in ((left, "left"), (right, "right")):
        if sys.params:
            raise KindError(f"{which} system is parametric; de-parameterize first")
    left_p, removed_l = prune(left, max_out_degree)
    right_p, removed_r = prune(right, max_out_degree)
    if s0 in removed_l:
        return True
    if t0 in removed_r:
        return False
    left_p = restrict_to(left_p, reachable_states(left_p, s0))
    right_p = restrict_to(right_p, reachable_states(right_p, t0))
    union, lmap, rmap = disjoint_union(left_p, right_p)
    avoid = compute_avoid(union, max_states=max_states, max_out_degree=max_out_degree)
    return (lmap[s0], frozenset({rmap[t0]})) not in avoid


def thorough_refines(
    left: System,
    s0: int,
    right: System,
    t0: int,
    max_states: int = DEFAULT_MAX_AVOID_STATES,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
    max_params: int = 10,
) -> bool:
    """Thorough refinement for any system kinds.

    Parametric sides are de-parameterized (reachable part only) first; the
    state blowup is exponential in the parameter count and unavoidable.
    """
    if left.params:
        left, s0 = deparameterize(left, s0, trim=True, max_params=max_params)
    if right.params:
        right, t0 = deparameterize(right, t0, trim=True, max_params=max_params)
    return thorough_refines_bmts(
        left, s0, right, t0, max_states=max_states, max_out_degree=max_out_degree
    )


def thorough_refines_pmts(
    left: System,
    s0: int,
    right: System,
    t0: int,
    max_states: int = DEFAULT_MAX_AVOID_STATES,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
    max_params: int = 10,
) -> bool:
    """Thorough refinement for parametric systems via de-parameterization."""
    left_b, s0_b = deparameterize(left, s0, trim=True, max_params=max_params)
    right_b, t0_b = deparameterize(right, t0, trim=True, max_params=max_params)
    return thorough_refines_bmts(
        left_b, s0_b, right_b, t0_b, max_states=max_states, max_out_degree=max_out_degree
    )


def find_distinguishing_implementation(
    sys: System,
    s: int,
    group: FrozenSet[int],
    max_results: int = DEFAULT_MAX_IMPLEMENTATIONS,
    max_out_degree: int = DEFAULT_MAX_OUT_DEGREE,
) -> Optional[Tree]:
    """Oracle counterpart of avoid membership, for acyclic systems.

    Returns an implementation of ``s`` refining none of ``group``, or None.
    """
    own = enumerate_implementations(sys, s, max_results=max_results, max_out_degree=max_out_degree)
    others = [
        enumerate_implementations(sys, t, max_results=max_results, max_out_degree=max_out_degree)
        for t in sorted(group)
    ]
    for tree in sorted(own, key=_tree_key):
        if all(tree not in other for other in others):
            return tree
    return None
