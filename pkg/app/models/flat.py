# app/models/flat.py

"""
Flat agent specifications: named states, one probability definition per
action name, and per-state lists of (action, target) summands.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Union


@dataclass(frozen=True)
class FNum:
    value: Fraction


@dataclass(frozen=True)
class FFrc:
    state: str


@dataclass(frozen=True)
class FSum:
    terms: tuple["FlatExpr", ...]


@dataclass(frozen=True)
class FProd:
    factors: tuple["FlatExpr", ...]


@dataclass(frozen=True)
class FSub:
    left: "FlatExpr"
    right: "FlatExpr"


@dataclass(frozen=True)
class FDiv:
    left: "FlatExpr"
    right: "FlatExpr"


@dataclass(frozen=True)
class FNeg:
    operand: "FlatExpr"


FlatExpr = Union[FNum, FFrc, FSum, FProd, FSub, FDiv, FNeg]

ZERO = FNum(Fraction(0))
ONE = FNum(Fraction(1))


def fsum(terms: Iterable[FlatExpr]) -> FlatExpr:
    """Sum with nested sums flattened, zeros dropped and constants merged."""
    flat: list[FlatExpr] = []
    constant = Fraction(0)
    for term in terms:
        parts = term.terms if isinstance(term, FSum) else (term,)
        for part in parts:
            if isinstance(part, FNum):
                constant += part.value
            else:
                flat.append(part)
    if constant != 0:
        flat.insert(0, FNum(constant))
    if not flat:
        return ZERO
    return flat[0] if len(flat) == 1 else FSum(tuple(flat))


def fprod(factors: Iterable[FlatExpr]) -> FlatExpr:
    """Product with constants merged to the front; any zero factor gives 0."""
    flat: list[FlatExpr] = []
    constant = Fraction(1)
    for factor in factors:
        parts = factor.factors if isinstance(factor, FProd) else (factor,)
        for part in parts:
            if isinstance(part, FNum):
                constant *= part.value
            else:
                flat.append(part)
    if constant == 0:
        return ZERO
    if constant != 1:
        flat.insert(0, FNum(constant))
    if not flat:
        return ONE
    return flat[0] if len(flat) == 1 else FProd(tuple(flat))


def fsub(left: FlatExpr, right: FlatExpr) -> FlatExpr:
    if right == ZERO:
        return left
    if isinstance(left, FNum) and isinstance(right, FNum):
        return FNum(left.value - right.value)
    return FSub(left, right)


def frc_states(expr: FlatExpr) -> set[str]:
    if isinstance(expr, FFrc):
        return {expr.state}
    if isinstance(expr, FNum):
        return set()
    if isinstance(expr, FSum):
        return set().union(*(frc_states(t) for t in expr.terms))
    if isinstance(expr, FProd):
        return set().union(*(frc_states(f) for f in expr.factors))
    if isinstance(expr, FNeg):
        return frc_states(expr.operand)
    return frc_states(expr.left) | frc_states(expr.right)


def drop_states(expr: FlatExpr, removed: set[str]) -> FlatExpr:
    """Replaces frc terms of removed states by 0 and re-simplifies."""
    if isinstance(expr, FFrc):
        return ZERO if expr.state in removed else expr
    if isinstance(expr, FNum):
        return expr
    if isinstance(expr, FSum):
        return fsum(drop_states(t, removed) for t in expr.terms)
    if isinstance(expr, FProd):
        return fprod(drop_states(f, removed) for f in expr.factors)
    if isinstance(expr, FSub):
        return fsub(drop_states(expr.left, removed), drop_states(expr.right, removed))
    if isinstance(expr, FDiv):
        return FDiv(drop_states(expr.left, removed), drop_states(expr.right, removed))
    return FNeg(drop_states(expr.operand, removed))


@dataclass
class FlatSpec:
    states: list[str]
    actions: dict[str, FlatExpr]
    equations: dict[str, list[tuple[str, str]]]
    init: dict[str, int] = field(default_factory=dict)

    @property
    def population(self) -> int:
        return sum(self.init.values())
