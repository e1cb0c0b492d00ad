# app/models/ast.py

"""
Syntax tree of PiFF models.

Nodes are frozen dataclasses; source positions are carried in ``pos`` and
excluded from equality so that a re-parsed model compares equal to the
original.
"""

from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional, Union

Pos = Optional[tuple[int, int]]


def _pos() -> Pos:
    return field(default=None, compare=False, repr=False)


# --- Expressions ---
@dataclass(frozen=True)
class Num:
    value: Fraction
    text: Optional[str] = field(default=None, compare=False)
    pos: Pos = _pos()

    def __str__(self) -> str:
        if self.text is not None:
            return self.text
        return str(self.value)


@dataclass(frozen=True)
class Name:
    """A bare identifier: constant, enum value, parameter or remote attribute."""
    name: str
    pos: Pos = _pos()

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class MyAttr:
    attribute: str
    pos: Pos = _pos()

    def __str__(self) -> str:
        return f"my.{self.attribute}"


@dataclass(frozen=True)
class Call:
    function: str
    args: tuple["Expr", ...] = ()
    pos: Pos = _pos()

    def __str__(self) -> str:
        return f"{self.function}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()

    def __str__(self) -> str:
        return f"{_wrap(self.left)} {self.op} {_wrap(self.right)}"


@dataclass(frozen=True)
class FrcState:
    state: str
    pos: Pos = _pos()

    def __str__(self) -> str:
        return f"frc({self.state})"


@dataclass(frozen=True)
class FrcPred:
    predicate: "BoolExpr"
    pos: Pos = _pos()

    def __str__(self) -> str:
        return f"frc({self.predicate})"


@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: Pos = _pos()

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Compare:
    op: str  # one of = != < <= > >=
    left: "Expr"
    right: "Expr"
    pos: Pos = _pos()

    def __str__(self) -> str:
        return f"{self.left} {self.op} {self.right}"


@dataclass(frozen=True)
class Not:
    operand: "BoolExpr"
    pos: Pos = _pos()

    def __str__(self) -> str:
        return f"!({self.operand})"


@dataclass(frozen=True)
class And:
    left: "BoolExpr"
    right: "BoolExpr"
    pos: Pos = _pos()

    def __str__(self) -> str:
        return f"{_wrap(self.left)} & {_wrap(self.right)}"


@dataclass(frozen=True)
class Or:
    left: "BoolExpr"
    right: "BoolExpr"
    pos: Pos = _pos()

    def __str__(self) -> str:
        return f"{_wrap(self.left)} | {_wrap(self.right)}"


BoolExpr = Union[BoolLit, Compare, Not, And, Or]
Expr = Union[Num, Name, MyAttr, Call, BinOp, FrcState, FrcPred, BoolExpr]


def _wrap(expr: "Expr") -> str:
    if isinstance(expr, (BinOp, And, Or)):
        return f"({expr})"
    return str(expr)


# --- Declarations ---
@dataclass(frozen=True)
class AttrTypeDecl:
    name: str
    values: tuple[str, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class ConstDecl:
    name: str
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class AttributeDecl:
    name: str
    type_name: str
    pos: Pos = _pos()


@dataclass(frozen=True)
class Param:
    name: str
    type_name: str


@dataclass(frozen=True)
class CaseRow:
    key: tuple[str, ...]
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class CaseTable:
    args: tuple[str, ...]
    rows: tuple[CaseRow, ...]
    pos: Pos = _pos()


FLOAT = "float"


@dataclass(frozen=True)
class FuncDecl:
    name: str
    params: tuple[Param, ...]
    result_type: str
    body: Union[Expr, CaseTable]
    pos: Pos = _pos()

    @property
    def is_probability(self) -> bool:
        return self.result_type == FLOAT


@dataclass(frozen=True)
class Assignment:
    attribute: str
    expr: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class UpdateBranch:
    assignments: tuple[Assignment, ...]
    prob: Expr
    pos: Pos = _pos()


@dataclass(frozen=True)
class UpdateDecl:
    name: str
    branches: tuple[UpdateBranch, ...]
    pos: Pos = _pos()


OUTPUT = "output"
INPUT = "input"


@dataclass(frozen=True)
class Action:
    """
    ``label*[predicate]<> update`` (output) or ``label*[predicate]() update``
    (input). ``annotation`` is filled in by the annotation phase.
    """
    kind: str
    label: str
    predicate: BoolExpr
    update: Optional[str] = None
    annotation: Optional[int] = None
    pos: Pos = _pos()

    @property
    def is_output(self) -> bool:
        return self.kind == OUTPUT


@dataclass(frozen=True)
class Summand:
    guard: Optional[BoolExpr]
    prob: Optional[Expr]
    action: Action
    target: str
    is_rest: bool = False
    pos: Pos = _pos()


@dataclass(frozen=True)
class StateEquation:
    name: str
    summands: tuple[Summand, ...]
    pos: Pos = _pos()


@dataclass(frozen=True)
class InitEntry:
    state: str
    store: tuple[tuple[str, str], ...]
    count: int
    pos: Pos = _pos()


@dataclass(frozen=True)
class ModelAST:
    """
    A parsed model. Declarations are kept in source order so validation can
    report duplicates; the dictionary views assume names are unique.
    """
    attr_type_decls: tuple[AttrTypeDecl, ...] = ()
    const_decls: tuple[ConstDecl, ...] = ()
    attribute_decls: tuple[AttributeDecl, ...] = ()
    func_decls: tuple[FuncDecl, ...] = ()
    update_decls: tuple[UpdateDecl, ...] = ()
    state_eqs: tuple[StateEquation, ...] = ()
    init: tuple[InitEntry, ...] = ()

    @property
    def attr_types(self) -> dict[str, tuple[str, ...]]:
        return {d.name: d.values for d in self.attr_type_decls}

    @property
    def consts(self) -> dict[str, Expr]:
        return {d.name: d.expr for d in self.const_decls}

    @property
    def attributes(self) -> dict[str, str]:
        return {d.name: d.type_name for d in self.attribute_decls}

    @property
    def attr_funcs(self) -> dict[str, FuncDecl]:
        return {d.name: d for d in self.func_decls if not d.is_probability}

    @property
    def prob_funcs(self) -> dict[str, FuncDecl]:
        return {d.name: d for d in self.func_decls if d.is_probability}

    @property
    def updates(self) -> dict[str, UpdateDecl]:
        return {d.name: d for d in self.update_decls}

    @property
    def equations(self) -> dict[str, StateEquation]:
        return {d.name: d for d in self.state_eqs}

    def actions(self) -> list[Action]:
        """Every action occurrence in source order."""
        return [s.action for eq in self.state_eqs for s in eq.summands]

    def with_equations(self, state_eqs: tuple[StateEquation, ...]) -> "ModelAST":
        return replace(self, state_eqs=state_eqs)
