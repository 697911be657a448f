"""Seeded random system generation for benchmarks and property tests.

Two topologies: a random spanning tree padded with noise edges until every
state reaches the requested branching degree, and a clustered layout where
densely connected clusters talk to each other only through designated
interface states.  Obligations are drawn to match the requested kind and
redrawn when unsatisfiable, so generated systems are always locally
consistent and classify exactly as requested.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Tuple

from .errors import GenFailureError
from .formulas import (
    TT,
    And,
    Formula,
    Not,
    Or,
    ParamAtom,
    TransAtom,
    and_all,
    iff,
    implies,
    or_all,
    xor,
)
from .rng import Rng
from .systems import System, SystemKind, classify, is_locally_consistent

OBLIGATION_ATTEMPTS = 100


@dataclass(frozen=True)
class GenConfig:
    kind: SystemKind
    num_states: int
    alphabet_size: int
    branching_degree: int
    num_params: int = 0
    topology: str = "tree-noise"  # or "clusters"
    cluster_size: int = 5
    interface_count: int = 2
    formula_depth: int = 3
    seed: int = 0

    def __post_init__(self):
        if self.branching_degree < 1:
            raise ValueError("branching degree must be at least 1")
        if self.num_params and self.kind != SystemKind.PMTS:
            raise ValueError("only parametric systems may have parameters")
        if self.branching_degree > self.alphabet_size * self.num_states:
            raise ValueError("branching degree exceeds the number of distinct edges")
        if self.topology not in ("tree-noise", "clusters"):
            raise ValueError(f"unknown topology {self.topology!r}")

    def action_names(self) -> List[str]:
        return [_action_name(i) for i in range(self.alphabet_size)]

    def param_names(self) -> List[str]:
        return [f"p{i}" for i in range(self.num_params)]


def _action_name(i: int) -> str:
    if i < 26:
        return chr(ord("a") + i)
    return f"a{i}"


def _tree_noise_edges(cfg: GenConfig, rng: Rng) -> set:
    n = cfg.num_states
    actions = cfg.action_names()
    edges = set()
    degree = [0] * n
    for child in range(1, n):
        eligible = [s for s in range(child) if degree[s] < cfg.branching_degree]
        parent = rng.choice(eligible)
        edges.add((parent, rng.choice(actions), child))
        degree[parent] += 1
    for s in range(n):
        guard = 0
        while degree[s] < cfg.branching_degree:
            edge = (s, rng.choice(actions), rng.randrange(n))
            if edge not in edges:
                edges.add(edge)
                degree[s] += 1
            guard += 1
            if guard > 1000 * cfg.branching_degree:
                raise GenFailureError("could not place noise edges without duplicates")
    return edges


def _cluster_edges(cfg: GenConfig, rng: Rng) -> set:
    n = cfg.num_states
    actions = cfg.action_names()
    size = max(2, cfg.cluster_size)
    clusters = [list(range(i, min(i + size, n))) for i in range(0, n, size)]
    interfaces = []
    for cluster in clusters:
        count = min(max(1, cfg.interface_count), len(cluster))
        interfaces.append(cluster[:count])
    all_interfaces = [s for group in interfaces for s in group]

    edges = set()
    degree = [0] * n
    # Local spanning trees keep each cluster connected from its head.
    for cluster in clusters:
        for idx in range(1, len(cluster)):
            eligible = [s for s in cluster[:idx] if degree[s] < cfg.branching_degree]
            parent = rng.choice(eligible) if eligible else cluster[idx - 1]
            edges.add((parent, rng.choice(actions), cluster[idx]))
            degree[parent] += 1
    # A chain of interface edges makes every cluster reachable from the first.
    for i in range(len(clusters) - 1):
        src = rng.choice(interfaces[i])
        edge = (src, rng.choice(actions), interfaces[i + 1][0])
        if edge not in edges:
            edges.add(edge)
            degree[src] += 1
    # Noise: interfaces may target interfaces anywhere, others stay local.
    member_cluster = {}
    for ci, cluster in enumerate(clusters):
        for s in cluster:
            member_cluster[s] = ci
    for s in range(n):
        guard = 0
        while degree[s] < cfg.branching_degree:
            if s in set(all_interfaces) and rng.chance(1, 2) and len(all_interfaces) > 1:
                target = rng.choice(all_interfaces)
            else:
                target = rng.choice(clusters[member_cluster[s]])
            edge = (s, rng.choice(actions), target)
            if edge not in edges:
                edges.add(edge)
                degree[s] += 1
            guard += 1
            if guard > 2000 * cfg.branching_degree:
                raise GenFailureError("could not place cluster noise edges without duplicates")
    return edges


def draw_formula(
    rng: Rng,
    outgoing: List[Tuple[str, int]],
    params: List[str],
    depth: int,
) -> Formula:
    """Random formula tree over the given atoms, depth-bounded."""
    if depth <= 0 or (rng.chance(1, 4) and depth < 2):
        roll = rng.randrange(10)
        if params and roll < 3:
            return ParamAtom(rng.choice(params))
        if outgoing and roll < 9:
            a, t = rng.choice(outgoing)
            return TransAtom(a, t)
        return TT
    op = rng.randrange(12)
    if op < 3:
        return And(draw_formula(rng, outgoing, params, depth - 1),
                   draw_formula(rng, outgoing, params, depth - 1))
    if op < 6:
        return Or(draw_formula(rng, outgoing, params, depth - 1),
                  draw_formula(rng, outgoing, params, depth - 1))
    if op < 8:
        return Not(draw_formula(rng, outgoing, params, depth - 1))
    if op < 10:
        return xor(draw_formula(rng, outgoing, params, depth - 1),
                   draw_formula(rng, outgoing, params, depth - 1))
    if op < 11:
        return implies(draw_formula(rng, outgoing, params, depth - 1),
                       draw_formula(rng, outgoing, params, depth - 1))
    return iff(draw_formula(rng, outgoing, params, depth - 1),
               draw_formula(rng, outgoing, params, depth - 1))


def draw_obligation(
    rng: Rng,
    outgoing: List[Tuple[str, int]],
    params: List[str],
    kind: SystemKind,
    depth: int,
) -> Formula:
    """One obligation of the requested kind over the given outgoing pairs."""
    if kind == SystemKind.MTS:
        chosen = [pair for pair in outgoing if rng.chance(1, 2)]
        return and_all(TransAtom(a, t) for (a, t) in chosen)
    if kind == SystemKind.DMTS:
        if not outgoing:
            return TT
        num_clauses = rng.randint(1, max(1, min(3, len(outgoing))))
        clauses = []
        for _ in range(num_clauses):
            width = rng.randint(1, min(3, len(outgoing)))
            pool = list(outgoing)
            rng.shuffle(pool)
            clauses.append(or_all(TransAtom(a, t) for (a, t) in pool[:width]))
        return and_all(clauses)
    return draw_formula(rng, outgoing, params, depth)


def generate(cfg: GenConfig) -> System:
    """Deterministic random system for the configuration; seed decides all."""
    rng = Rng(cfg.seed)
    structure_rng = rng.substream("structure")
    if cfg.topology == "tree-noise":
        edges = _tree_noise_edges(cfg, structure_rng)
    else:
        edges = _cluster_edges(cfg, structure_rng)
    outgoing: Dict[int, List[Tuple[str, int]]] = {s: [] for s in range(cfg.num_states)}
    for (s, a, t) in sorted(edges):
        outgoing[s].append((a, t))
    params = cfg.param_names()

    for attempt in range(OBLIGATION_ATTEMPTS):
        phi_rng = rng.substream(f"obligations-{attempt}")
        system = _draw_all_obligations(cfg, phi_rng, edges, outgoing, params)
        if system is not None and classify(system) == cfg.kind:
            return system
    raise GenFailureError(
        f"no consistent {cfg.kind.name} obligation assignment found in "
        f"{OBLIGATION_ATTEMPTS} attempts (seed {cfg.seed})"
    )


def _draw_all_obligations(cfg, phi_rng, edges, outgoing, params):
    obligations: Dict[int, Formula] = {}
    for s in range(cfg.num_states):
        state_rng = phi_rng.substream(f"state-{s}")
        for inner in range(OBLIGATION_ATTEMPTS):
            phi = draw_obligation(
                state_rng.substream(str(inner)), outgoing[s], params, cfg.kind, cfg.formula_depth
            )
            candidate = System(
                states=frozenset(range(cfg.num_states)),
                transitions=frozenset(edges),
                params=frozenset(params),
                obligations={s: phi},
                initial=0,
            )
            if is_locally_consistent(candidate, s):
                obligations[s] = phi
                break
        else:
            return None
    return System(
        states=frozenset(range(cfg.num_states)),
        transitions=frozenset(edges),
        params=frozenset(params),
        obligations=obligations,
        initial=0,
        state_names={s: f"s{s}" for s in range(cfg.num_states)},
    )
