# app/models/formula.py

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union


@dataclass(frozen=True)
class TrueF:
    def __str__(self) -> str:
        return "true"


@dataclass(frozen=True)
class FalseF:
    def __str__(self) -> str:
        return "false"


@dataclass(frozen=True)
class AtomF:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class NotF:
    operand: "Formula"

    def __str__(self) -> str:
        return f"!{_wrap(self.operand)}"


@dataclass(frozen=True)
class AndF:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"{_wrap(self.left)} & {_wrap(self.right)}"


@dataclass(frozen=True)
class OrF:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"{_wrap(self.left)} | {_wrap(self.right)}"


@dataclass(frozen=True)
class NextF:
    operand: "Formula"

    def __str__(self) -> str:
        return f"X {_wrap(self.operand)}"


@dataclass(frozen=True)
class UntilF:
    left: "Formula"
    right: "Formula"
    bound: int

    def __str__(self) -> str:
        return f"{_wrap(self.left)} U<={self.bound} {_wrap(self.right)}"


@dataclass(frozen=True)
class ProbF:
    """P op bound [path]."""
    op: str
    bound: Fraction
    path: Union[NextF, UntilF]
    bound_text: str = field(default="", compare=False)

    def __str__(self) -> str:
        return f"P{self.op}{self.bound_text or self.bound} [{self.path}]"


Formula = Union[TrueF, FalseF, AtomF, NotF, AndF, OrF, ProbF]


def _wrap(formula) -> str:
    if isinstance(formula, (AndF, OrF)):
        return f"({formula})"
    return str(formula)
