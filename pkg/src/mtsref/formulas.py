"""Boolean obligation formulas over transition atoms and parameter atoms.

The core grammar is deliberately small: truth, transition atoms ``(a, t)``,
parameter atoms, negation, conjunction and disjunction.  Derived connectives
(xor, implication, biconditional) are desugared at construction time, so
evaluation and CNF translation only ever see the core shapes.  Falsity is
represented as ``Not(TT)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, FrozenSet, Iterable, Tuple

TransPair = Tuple[str, int]


class Formula:
    __slots__ = ()


@dataclass(frozen=True, slots=True)
class Tt(Formula):
    pass


@dataclass(frozen=True, slots=True)
class TransAtom(Formula):
    action: str
    target: int


@dataclass(frozen=True, slots=True)
class ParamAtom(Formula):
    name: str


@dataclass(frozen=True, slots=True)
class Not(Formula):
    child: Formula


@dataclass(frozen=True, slots=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or(Formula):
    left: Formula
    right: Formula


TT = Tt()
FF = Not(TT)


def xor(left: Formula, right: Formula) -> Formula:
    """Exclusive or, desugared as (l & !r) | (!l & r)."""
    return Or(And(left, Not(right)), And(Not(left), right))


def implies(left: Formula, right: Formula) -> Formula:
    """Implication, desugared as !l | r."""
    return Or(Not(left), right)


def iff(left: Formula, right: Formula) -> Formula:
    """Biconditional, desugared as (!l | r) & (l | !r)."""
    return And(Or(Not(left), right), Or(left, Not(right)))


def and_all(parts: Iterable[Formula]) -> Formula:
    """Left-folded conjunction; the empty conjunction is truth."""
    result = None
    for part in parts:
        result = part if result is None else And(result, part)
    return TT if result is None else result


def or_all(parts: Iterable[Formula]) -> Formula:
    """Left-folded disjunction; the empty disjunction is falsity."""
    result = None
    for part in parts:
        result = part if result is None else Or(result, part)
    return FF if result is None else result


def evaluate(phi: Formula, chosen: FrozenSet[TransPair] | set, true_params: FrozenSet[str] | set) -> bool:
    """Evaluate under a chosen transition set and a parameter valuation.

    A transition atom is true iff its (action, target) pair is in ``chosen``;
    a parameter atom is true iff its name is in ``true_params``.
    """
    if isinstance(phi, Tt):
        return True
    if isinstance(phi, TransAtom):
        return (phi.action, phi.target) in chosen
    if isinstance(phi, ParamAtom):
        return phi.name in true_params
    if isinstance(phi, Not):
        return not evaluate(phi.child, chosen, true_params)
    if isinstance(phi, And):
        return evaluate(phi.left, chosen, true_params) and evaluate(phi.right, chosen, true_params)
    if isinstance(phi, Or):
        return evaluate(phi.left, chosen, true_params) or evaluate(phi.right, chosen, true_params)
    raise TypeError(f"not a formula node: {phi!r}")


def trans_atoms(phi: Formula) -> FrozenSet[TransPair]:
    """All (action, target) pairs occurring in the formula."""
    out: set[TransPair] = set()

    def walk(node: Formula) -> None:
        if isinstance(node, TransAtom):
            out.add((node.action, node.target))
        elif isinstance(node, Not):
            walk(node.child)
        elif isinstance(node, (And, Or)):
            walk(node.left)
            walk(node.right)

    walk(phi)
    return frozenset(out)


def param_atoms(phi: Formula) -> FrozenSet[str]:
    """All parameter names occurring in the formula."""
    out: set[str] = set()

    def walk(node: Formula) -> None:
        if isinstance(node, ParamAtom):
            out.add(node.name)
        elif isinstance(node, Not):
            walk(node.child)
        elif isinstance(node, (And, Or)):
            walk(node.left)
            walk(node.right)

    walk(phi)
    return frozenset(out)


def substitute_params(phi: Formula, true_params: FrozenSet[str] | set) -> Formula:
    """Replace each parameter atom by TT or ff according to the valuation."""
    if isinstance(phi, (Tt, TransAtom)):
        return phi
    if isinstance(phi, ParamAtom):
        return TT if phi.name in true_params else FF
    if isinstance(phi, Not):
        return Not(substitute_params(phi.child, true_params))
    if isinstance(phi, And):
        return And(substitute_params(phi.left, true_params),
                   substitute_params(phi.right, true_params))
    if isinstance(phi, Or):
        return Or(substitute_params(phi.left, true_params),
                  substitute_params(phi.right, true_params))
    raise TypeError(f"not a formula node: {phi!r}")


def map_trans_atoms(phi: Formula, fn: Callable[[str, int], Formula]) -> Formula:
    """Rewrite every transition atom through ``fn``; other nodes unchanged."""
    if isinstance(phi, (Tt, ParamAtom)):
        return phi
    if isinstance(phi, TransAtom):
        return fn(phi.action, phi.target)
    if isinstance(phi, Not):
        return Not(map_trans_atoms(phi.child, fn))
    if isinstance(phi, And):
        return And(map_trans_atoms(phi.left, fn), map_trans_atoms(phi.right, fn))
    if isinstance(phi, Or):
        return Or(map_trans_atoms(phi.left, fn), map_trans_atoms(phi.right, fn))
    raise TypeError(f"not a formula node: {phi!r}")


def size(phi: Formula) -> int:
    """Node count of the formula tree."""
    if isinstance(phi, (Tt, TransAtom, ParamAtom)):
        return 1
    if isinstance(phi, Not):
        return 1 + size(phi.child)
    if isinstance(phi, (And, Or)):
        return 1 + size(phi.left) + size(phi.right)
    raise TypeError(f"not a formula node: {phi!r}")


def simplify(phi: Formula) -> Formula:
    """Constant folding: !tt, x & tt, x | tt and their duals.

    Verdict-preserving; used only when callers explicitly ask for tidier
    output, never implicitly.
    """
    if isinstance(phi, (Tt, TransAtom, ParamAtom)):
        return phi
    if isinstance(phi, Not):
        child = simplify(phi.child)
        if isinstance(child, Not):
            return child.child
        return Not(child)
    if isinstance(phi, And):
        left = simplify(phi.left)
        right = simplify(phi.right)
        if left == TT:
            return right
        if right == TT:
            return left
        if left == FF or right == FF:
            return FF
        return And(left, right)
    if isinstance(phi, Or):
        left = simplify(phi.left)
        right = simplify(phi.right)
        if left == FF:
            return right
        if right == FF:
            return left
        if left == TT or right == TT:
            return TT
        return Or(left, right)
    raise TypeError(f"not a formula node: {phi!r}")


def conjuncts(phi: Formula) -> list[Formula]:
    """Flatten a conjunction tree into its conjunct list (TT gives [])."""
    if phi == TT:
        return []
    out: list[Formula] = []
    stack = [phi]
    while stack:
        node = stack.pop()
        if isinstance(node, And):
            stack.append(node.right)
            stack.append(node.left)
        else:
            out.append(node)
    return out


def disjuncts(phi: Formula) -> list[Formula]:
    """Flatten a disjunction tree into its disjunct list."""
    out: list[Formula] = []
    stack = [phi]
    while stack:
        node = stack.pop()
        if isinstance(node, Or):
            stack.append(node.right)
            stack.append(node.left)
        else:
            out.append(node)
    return out


def is_positive_conjunction(phi: Formula) -> bool:
    """True iff the formula is TT or a conjunction of transition atoms."""
    return all(isinstance(c, TransAtom) for c in conjuncts(phi))


def is_negation_free_cnf(phi: Formula) -> bool:
    """True iff the formula is TT or a conjunction of disjunctions of transition atoms."""
    return all(
        all(isinstance(d, TransAtom) for d in disjuncts(clause))
        for clause in conjuncts(phi)
    )
