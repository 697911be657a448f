"""Quantified Boolean formula route for modal refinement.

``encode_bmts`` reduces refinement between Boolean-system states to a
prenex formula: existentially guess the relation variables, universally
range over the left transition choices, existentially answer with right
transition choices (indexed per left state so one quantifier block
suffices).  ``encode_pmts`` prepends a universal block for the left
parameters and an existential one for the right.

``evaluate_qbf`` is an exact expansion-based evaluator used as the
reference oracle: it splits on prefix variables outermost-first, with
constant folding, forced-literal propagation, connected-component
decomposition and memoization on hash-consed subformulas - all standard,
semantics-preserving steps.

``to_qdimacs`` emits standard prenex CNF via a Tseitin transformation with
the auxiliary variables appended as an innermost existential block.
"""

from __future__ import annotations

import shlex
import subprocess
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, FrozenSet, List, Optional, Tuple

from .errors import (
    KindError,
    SolverProtocolError,
    SolverTimeoutError,
    SolverUnavailableError,
    VarLimitError,
)
from .formulas import And, Formula, Not, Or, ParamAtom, TransAtom, Tt
from .systems import System, SystemKind, classify

DEFAULT_MAX_QBF_VARS = 24

# Matrix nodes are plain nested tuples:
#   True | False | ('var', id) | ('not', node) | ('and', (nodes...)) | ('or', (nodes...))
Node = object

Block = Tuple[str, Tuple[int, ...]]  # ('e' | 'a', variable ids)


@dataclass(frozen=True)
class QbfInstance:
    prefix: Tuple[Block, ...]
    matrix: Node
    var_roles: Dict[int, tuple]

    def num_vars(self) -> int:
        return sum(len(block) for _q, block in self.prefix)

    def matrix_node_count(self) -> int:
        seen: Dict[int, int] = {}

        def count(node) -> int:
            if isinstance(node, bool):
                return 1
            key = id(node)
            if key in seen:
                return seen[key]
            if node[0] == "var":
                result = 1
            elif node[0] == "not":
                result = 1 + count(node[1])
            else:
                result = 1 + sum(count(child) for child in node[1])
            seen[key] = result
            return result

        return count(self.matrix)


def normalize_prefix(blocks: List[Block]) -> Tuple[Block, ...]:
    """Drop empty blocks and merge adjacent blocks with the same quantifier."""
    out: List[Block] = []
    for quant, ids in blocks:
        if not ids:
            continue
        if out and out[-1][0] == quant:
            out[-1] = (quant, out[-1][1] + tuple(ids))
        else:
            out.append((quant, tuple(ids)))
    return tuple(out)


def _conj(parts: List[Node]) -> Node:
    flat = []
    for p in parts:
        if p is True:
            continue
        if p is False:
            return False
        flat.append(p)
    if not flat:
        return True
    if len(flat) == 1:
        return flat[0]
    return ("and", tuple(flat))


def _disj(parts: List[Node]) -> Node:
    flat = []
    for p in parts:
        if p is False:
            continue
        if p is True:
            return True
        flat.append(p)
    if not flat:
        return False
    if len(flat) == 1:
        return flat[0]
    return ("or", tuple(flat))


def _neg(node: Node) -> Node:
    if node is True:
        return False
    if node is False:
        return True
    if not isinstance(node, bool) and node[0] == "not":
        return node[1]
    return ("not", node)


class _VarPool:
    def __init__(self):
        self.roles: Dict[int, tuple] = {}
        self.by_role: Dict[tuple, int] = {}

    def add(self, role: tuple) -> int:
        vid = len(self.roles) + 1
        self.roles[vid] = role
        self.by_role[role] = vid
        return vid

    def var(self, role: tuple) -> Node:
        return ("var", self.by_role[role])


def _obligation_to_node(phi: Formula, atom_map) -> Node:
    if isinstance(phi, Tt):
        return True
    if isinstance(phi, TransAtom):
        return atom_map(phi)
    if isinstance(phi, ParamAtom):
        return atom_map(phi)
    if isinstance(phi, Not):
        return _neg(_obligation_to_node(phi.child, atom_map))
    if isinstance(phi, And):
        return _conj([
            _obligation_to_node(phi.left, atom_map),
            _obligation_to_node(phi.right, atom_map),
        ])
    if isinstance(phi, Or):
        return _disj([
            _obligation_to_node(phi.left, atom_map),
            _obligation_to_node(phi.right, atom_map),
        ])
    raise TypeError(f"not a formula node: {phi!r}")


def _encode(left: System, s0: int, right: System, t0: int, parametric: bool) -> QbfInstance:
    pool = _VarPool()
    lstates = left.sorted_states()
    rstates = right.sorted_states()
    ltrans = sorted(left.transitions)
    rtrans = sorted(right.transitions)

    lparam_ids = [pool.add(("lparam", p)) for p in sorted(left.params)] if parametric else []
    rparam_ids = [pool.add(("rparam", p)) for p in sorted(right.params)] if parametric else []
    rel_ids = [pool.add(("rel", u, v)) for u in lstates for v in rstates]
    lt_ids = [pool.add(("ltrans",) + e) for e in ltrans]
    rt_ids = [pool.add(("rtrans", u) + e) for u in lstates for e in rtrans]

    conjuncts: List[Node] = [pool.var(("rel", s0, t0))]
    for u in lstates:
        t1u = [e for e in ltrans if e[0] == u]
        for v in rstates:
            t2v = [e for e in rtrans if e[0] == v]
            # Left obligation mapped over left transition variables.
            phi1 = _obligation_to_node(
                left.obligation(u),
                lambda atom, u=u: (
                    pool.var(("ltrans", u, atom.action, atom.target))
                    if isinstance(atom, TransAtom)
                    else pool.var(("lparam", atom.name))
                ),
            )
            # Right obligation mapped over u-indexed right transition variables.
            phi2 = _obligation_to_node(
                right.obligation(v),
                lambda atom, u=u, v=v: (
                    pool.var(("rtrans", u, v, atom.action, atom.target))
                    if isinstance(atom, TransAtom)
                    else pool.var(("rparam", atom.name))
                ),
            )
            match_parts: List[Node] = []
            for (_u, a, u2) in t1u:
                choices = [
                    _conj([
                        pool.var(("rtrans", u, v, a2, v2)),
                        pool.var(("rel", u2, v2)),
                    ])
                    for (_v, a2, v2) in t2v
                    if a2 == a
                ]
                match_parts.append(_disj([_neg(pool.var(("ltrans", u, a, u2)))] + choices))
            for (_v, a, v2) in t2v:
                choices = [
                    _conj([
                        pool.var(("ltrans", u, a2, u2)),
                        pool.var(("rel", u2, v2)),
                    ])
                    for (_u, a2, u2) in t1u
                    if a2 == a
                ]
                match_parts.append(_disj([_neg(pool.var(("rtrans", u, v, a, v2)))] + choices))
            psi = _disj([_neg(phi1), _conj([phi2] + match_parts)])
            conjuncts.append(_disj([_neg(pool.var(("rel", u, v))), psi]))

    blocks = []
    if parametric:
        blocks.append(("a", tuple(lparam_ids)))
        blocks.append(("e", tuple(rparam_ids)))
    blocks.append(("e", tuple(rel_ids)))
    blocks.append(("a", tuple(lt_ids)))
    blocks.append(("e", tuple(rt_ids)))
    return QbfInstance(normalize_prefix(blocks), _conj(conjuncts), pool.roles)


def encode_bmts(left: System, s0: int, right: System, t0: int) -> QbfInstance:
    """Refinement formula for Boolean systems: exists-rel forall-left exists-right."""
    for sys, which in ((left, "left"), (right, "right")):
        if classify(sys) > SystemKind.BMTS:
            raise KindError(f"{which} system is parametric; use the parametric encoding")
    return _encode(left, s0, right, t0, parametric=False)


def encode_pmts(left: System, s0: int, right: System, t0: int) -> QbfInstance:
    """Parametric refinement formula: the prefix fixes both valuations first."""
    return _encode(left, s0, right, t0, parametric=True)


class _Interned:
    __slots__ = ("kind", "payload", "serial", "support")

    def __init__(self, kind, payload, serial, support):
        self.kind = kind
        self.payload = payload
        self.serial = serial
        self.support = support


class _Space:
    """Hash-consed matrix nodes with cached variable support."""

    def __init__(self):
        self.table: Dict[tuple, _Interned] = {}
        self.counter = 0

    def _make(self, kind, payload, support) -> _Interned:
        key = (
            kind,
            payload if kind == "v" else (
                payload.serial if kind == "n" else tuple(c.serial for c in payload)
            ),
        )
        node = self.table.get(key)
        if node is None:
            self.counter += 1
            node = _Interned(kind, payload, self.counter, support)
            self.table[key] = node
        return node

    def var(self, vid: int) -> _Interned:
        return self._make("v", vid, frozenset((vid,)))

    def neg(self, child):
        if child is True:
            return False
        if child is False:
            return True
        if child.kind == "n":
            return child.payload
        return self._make("n", child, child.support)

    def _nary(self, kind, children, absorb, kill):
        flat = []
        seen = set()
        negated = set()
        plain = set()
        for c in children:
            if c is absorb:
                continue
            if c is kill:
                return kill
            stack = [c]
            while stack:
                x = stack.pop()
                if isinstance(x, bool):
                    if x is kill:
                        return kill
                    continue
                if x.kind == kind:
                    stack.extend(x.payload)
                    continue
                if x.serial in seen:
                    continue
                seen.add(x.serial)
                if x.kind == "n":
                    negated.add(x.payload.serial)
                else:
                    plain.add(x.serial)
                flat.append(x)
        if plain & negated:
            return kill
        if not flat:
            return absorb
        if len(flat) == 1:
            return flat[0]
        flat.sort(key=lambda n: n.serial)
        support = frozenset().union(*(n.support for n in flat))
        return self._make(kind, tuple(flat), support)

    def conj(self, children):
        return self._nary("a", children, True, False)

    def disj(self, children):
        return self._nary("o", children, False, True)

    def intern(self, node) -> object:
        if isinstance(node, bool):
            return node
        tag = node[0]
        if tag == "var":
            return self.var(node[1])
        if tag == "not":
            return self.neg(self.intern(node[1]))
        if tag == "and":
            return self.conj([self.intern(c) for c in node[1]])
        if tag == "or":
            return self.disj([self.intern(c) for c in node[1]])
        raise TypeError(f"not a matrix node: {node!r}")

    def substitute(self, node, assignment: Dict[int, bool], cache: Dict[int, object]):
        if isinstance(node, bool):
            return node
        if not (node.support & assignment.keys()):
            return node
        hit = cache.get(node.serial)
        if hit is not None:
            return hit
        if node.kind == "v":
            result = assignment[node.payload]
        elif node.kind == "n":
            result = self.neg(self.substitute(node.payload, assignment, cache))
        elif node.kind == "a":
            result = self.conj([self.substitute(c, assignment, cache) for c in node.payload])
        else:
            result = self.disj([self.substitute(c, assignment, cache) for c in node.payload])
        cache[node.serial] = result
        return result


def evaluate_qbf(inst: QbfInstance, max_vars: int = DEFAULT_MAX_QBF_VARS) -> bool:
    """Exact truth value by quantifier expansion.

    The default variable cap keeps accidental use on large encodings from
    running away; callers that know their instances are tractable may raise
    it.
    """
    total = inst.num_vars()
    if total > max_vars:
        raise VarLimitError(f"{total} variables exceed the evaluator cap {max_vars}")
    quant: Dict[int, str] = {}
    position: Dict[int, int] = {}
    pos = 0
    for q, ids in inst.prefix:
        for vid in ids:
            quant[vid] = q
            position[vid] = pos
            pos += 1
    space = _Space()
    matrix = space.intern(inst.matrix)
    for vid in _free_vars(inst.matrix):
        if vid not in quant:
            raise ValueError(f"matrix variable {vid} is not quantified by the prefix")
    memo: Dict[int, bool] = {}

    def outermost(support) -> int:
        return min(support, key=lambda v: position[v])

    def ev(node) -> bool:
        if isinstance(node, bool):
            return node
        hit = memo.get(node.serial)
        if hit is not None:
            return hit
        result = _ev_inner(node)
        memo[node.serial] = result
        return result

    def _ev_inner(node) -> bool:
        if node.kind == "v":
            return quant[node.payload] == "e"
        if node.kind == "n":
            child = node.payload
            if child.kind == "v":
                return quant[child.payload] == "e"
            # Expand through the negation by splitting on a variable.
            return _split(node)
        if node.kind == "a":
            forced: Dict[int, bool] = {}
            for c in node.payload:
                if c.kind == "v":
                    if quant[c.payload] == "a":
                        return False
                    forced[c.payload] = True
                elif c.kind == "n" and c.payload.kind == "v":
                    if quant[c.payload.payload] == "a":
                        return False
                    forced[c.payload.payload] = False
            if forced:
                return ev(space.substitute(node, forced, {}))
            parts = _components(node.payload)
            if len(parts) > 1:
                return all(ev(space.conj(group)) for group in parts)
            return _split(node)
        if node.kind == "o":
            forced = {}
            for c in node.payload:
                if c.kind == "v":
                    if quant[c.payload] == "e":
                        return True
                    forced[c.payload] = False
                elif c.kind == "n" and c.payload.kind == "v":
                    if quant[c.payload.payload] == "e":
                        return True
                    forced[c.payload.payload] = True
            if forced:
                return ev(space.substitute(node, forced, {}))
            parts = _components(node.payload)
            if len(parts) > 1:
                return any(ev(space.disj(group)) for group in parts)
            return _split(node)
        raise TypeError(node)

    def _components(children) -> List[List[object]]:
        groups: List[Tuple[set, List[object]]] = []
        for c in children:
            mine = set(c.support)
            merged = [c]
            rest = []
            for vars_, members in groups:
                if vars_ & mine:
                    mine |= vars_
                    merged.extend(members)
                else:
                    rest.append((vars_, members))
            rest.append((mine, merged))
            groups = rest
        return [members for _vars, members in groups]

    def _split(node) -> bool:
        vid = outermost(node.support)
        if quant[vid] == "e":
            return ev(space.substitute(node, {vid: True}, {})) or ev(
                space.substitute(node, {vid: False}, {})
            )
        return ev(space.substitute(node, {vid: False}, {})) and ev(
            space.substitute(node, {vid: True}, {})
        )

    return ev(matrix)


def _free_vars(node) -> FrozenSet[int]:
    out: set = set()
    stack = [node]
    while stack:
        x = stack.pop()
        if isinstance(x, bool):
            continue
        if x[0] == "var":
            out.add(x[1])
        elif x[0] == "not":
            stack.append(x[1])
        else:
            stack.extend(x[1])
    return frozenset(out)


def _fold_constants(node) -> Node:
    if isinstance(node, bool):
        return node
    tag = node[0]
    if tag == "var":
        return node
    if tag == "not":
        return _neg(_fold_constants(node[1]))
    children = [_fold_constants(c) for c in node[1]]
    return _conj(children) if tag == "and" else _disj(children)


def to_qdimacs(inst: QbfInstance) -> str:
    """Standard QDIMACS text: prenex blocks, then Tseitin clauses.

    Auxiliary variables form an innermost existential block, which preserves
    the truth value.  A comment header maps variable ids to their roles.
    """
    matrix = _fold_constants(inst.matrix)
    lines = [f"c {vid} = {role}" for vid, role in sorted(inst.var_roles.items())]

    if isinstance(matrix, bool):
        lines.append("p cnf 1 " + ("1" if matrix else "2"))
        lines.append("e 1 0")
        lines.extend(["1 -1 0"] if matrix else ["1 0", "-1 0"])
        return "\n".join(lines) + "\n"

    next_var = max((vid for _q, ids in inst.prefix for vid in ids), default=0)
    clauses: List[Tuple[int, ...]] = []
    aux_ids: List[int] = []
    memo: Dict[int, int] = {}

    def literal(node) -> int:
        nonlocal next_var
        if node[0] == "var":
            return node[1]
        if node[0] == "not":
            return -literal(node[1])
        key = id(node)
        if key in memo:
            return memo[key]
        parts = [literal(c) for c in node[1]]
        next_var += 1
        aux = next_var
        aux_ids.append(aux)
        if node[0] == "and":
            for p in parts:
                clauses.append((-aux, p))
            clauses.append(tuple([aux] + [-p for p in parts]))
        else:
            clauses.append(tuple([-aux] + parts))
            for p in parts:
                clauses.append((aux, -p))
        memo[key] = aux
        return aux

    root = literal(matrix)
    clauses.append((root,))

    blocks = [(q, tuple(ids)) for q, ids in inst.prefix]
    blocks.append(("e", tuple(aux_ids)))
    blocks = list(normalize_prefix(blocks))

    lines.append(f"p cnf {next_var} {len(clauses)}")
    for q, ids in blocks:
        lines.append(q + " " + " ".join(str(v) for v in ids) + " 0")
    for clause in clauses:
        lines.append(" ".join(str(lit) for lit in clause) + " 0")
    return "\n".join(lines) + "\n"


def parse_qdimacs(text: str) -> QbfInstance:
    """Small reader for round-trip checks: QDIMACS back into an instance."""
    blocks: List[Block] = []
    clauses: List[Node] = []
    declared = 0
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("c"):
            continue
        if line.startswith("p"):
            declared = int(line.split()[2])
            continue
        if line[0] in "ea":
            ids = [int(tok) for tok in line[1:].split()]
            if ids and ids[-1] == 0:
                ids = ids[:-1]
            blocks.append(("e" if line[0] == "e" else "a", tuple(ids)))
            continue
        lits = [int(tok) for tok in line.split()]
        if lits and lits[-1] == 0:
            lits = lits[:-1]
        clauses.append(
            _disj([("var", lit) if lit > 0 else ("not", ("var", -lit)) for lit in lits])
        )
    prefix = normalize_prefix(blocks)
    quantified = {vid for _q, ids in prefix for vid in ids}
    missing = tuple(v for v in range(1, declared + 1) if v not in quantified)
    if missing:
        prefix = normalize_prefix([("e", missing)] + list(prefix))
    return QbfInstance(prefix, _conj(clauses), {})


def solve_external(
    inst: QbfInstance,
    solver_cmd: str,
    timeout_secs: Optional[float] = None,
) -> bool:
    """Run an external QDIMACS solver; exit 10 means true, 20 means false.

    ``solver_cmd`` is a shell-style template with a ``{file}`` placeholder
    for the QDIMACS path (appended if missing).  Each call writes a fresh
    temporary file.
    """
    text = to_qdimacs(inst)
    with tempfile.NamedTemporaryFile(
        "w", suffix=".qdimacs", prefix="mtsref-", delete=False
    ) as handle:
        handle.write(text)
        path = handle.name
    try:
        parts = shlex.split(solver_cmd)
        if any("{file}" in p for p in parts):
            parts = [p.replace("{file}", path) for p in parts]
        else:
            parts.append(path)
        try:
            proc = subprocess.run(
                parts,
                stdout=subprocess.DEVNULL,
                stderr=subprocess.DEVNULL,
                timeout=timeout_secs,
            )
        except FileNotFoundError as exc:
            raise SolverUnavailableError(f"solver not found: {parts[0]}") from exc
        except subprocess.TimeoutExpired as exc:
            raise SolverTimeoutError(timeout_secs) from exc
        if proc.returncode == 10:
            return True
        if proc.returncode == 20:
            return False
        raise SolverProtocolError(proc.returncode)
    finally:
        Path(path).unlink(missing_ok=True)
