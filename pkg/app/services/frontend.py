# app/services/frontend.py

import logging
import os
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Union

from lark import Lark, Token as LarkToken, Transformer, v_args
from lark.exceptions import UnexpectedCharacters, UnexpectedEOF, UnexpectedInput, UnexpectedToken, VisitError

from app.errors import LexError, PiffError, PiffSyntaxError
from app.models.ast import (
    INPUT, OUTPUT, Action, And, Assignment, AttrTypeDecl, AttributeDecl, BinOp, BoolLit, Call, CaseRow,
    CaseTable, Compare, ConstDecl, Expr, FrcPred, FrcState, FuncDecl, InitEntry, ModelAST, MyAttr, Name,
    Not, Num, Or, Param, StateEquation, Summand, UpdateBranch, UpdateDecl,
)

logger = logging.getLogger(__name__)

_GRAMMAR_FILE = os.path.join(os.path.dirname(os.path.dirname(__file__)), "grammars", "piff.lark")

with open(_GRAMMAR_FILE, encoding="utf-8") as _f:
    _GRAMMAR = _f.read()

_lark_parser = Lark(
    _GRAMMAR,
    parser="lalr",
    lexer="basic",
    propagate_positions=True,
    maybe_placeholders=False,
)


@dataclass(frozen=True)
class Token:
    """
    A lexical token. ``kind`` is one of keyword, identifier, number, symbol;
    ``text`` is the verbatim source text.
    """
    kind: str
    text: str
    line: int
    column: int
    raw: LarkToken = field(compare=False, repr=False)

    def __str__(self) -> str:
        short = {"keyword": "kw", "identifier": "id", "number": "num", "symbol": "sym"}[self.kind]
        return f"{short}:{self.text}"


def _kind(token: LarkToken) -> str:
    if token.type == "NAME":
        return "identifier"
    if token.type == "DECIMAL":
        return "number"
    if token.value.isidentifier():
        return "keyword"
    return "symbol"


def tokenize(source: str) -> list[Token]:
    """
    Splits PiFF source into tokens.

    :param source: Model text.
    :return: Tokens with kind and 1-based position.
    :rtype: list[Token]
    :raises LexError: on a character no token can start with.
    """
    try:
        return [
            Token(_kind(tok), tok.value, tok.line, tok.column, tok)
            for tok in _lark_parser.lex(source)
        ]
    except UnexpectedCharacters as exc:
        raise LexError(f"illegal character {source[exc.pos_in_stream]!r}", exc.line, exc.column) from exc


def _describe(terminal: str) -> str:
    try:
        pattern = _lark_parser.get_terminal(terminal).pattern
    except KeyError:
        return terminal
    return repr(pattern.value) if pattern.type == "str" else terminal


def parse_model(tokens: list[Token]) -> ModelAST:
    """
    Builds the syntax tree of a model from its tokens.

    :raises PiffSyntaxError: with the expected tokens and the position.
    """
    if not tokens:
        return ModelAST()
    interactive = _lark_parser.parse_interactive()
    try:
        for token in tokens:
            interactive.feed_token(token.raw)
        tree = interactive.feed_eof(tokens[-1].raw)
    except UnexpectedToken as exc:
        found = "end of input" if exc.token.type == "$END" else repr(exc.token.value)
        expected = sorted(_describe(name) for name in exc.expected)
        raise PiffSyntaxError(
            f"unexpected {found}; expected one of: {', '.join(expected)}",
            getattr(exc.token, "line", None), getattr(exc.token, "column", None), expected,
        ) from exc
    except (UnexpectedEOF, UnexpectedInput) as exc:
        raise PiffSyntaxError(f"syntax error: {exc}", getattr(exc, "line", None), getattr(exc, "column", None)) from exc
    try:
        return ModelTransformer().transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, PiffError):
            raise exc.orig_exc from exc
        raise


def parse_source(source: str) -> ModelAST:
    return parse_model(tokenize(source))


# ---- Transformer ----

@dataclass(frozen=True)
class _Guard:
    expr: Expr


@dataclass(frozen=True)
class _UpdateRef:
    name: str


def _at(meta) -> Optional[tuple[int, int]]:
    if getattr(meta, "empty", True):
        return None
    return meta.line, meta.column


def _names(children) -> tuple[str, ...]:
    return tuple(str(c) for c in children if isinstance(c, LarkToken) and c.type == "NAME")


@v_args(meta=True)
class ModelTransformer(Transformer):
    """
    Transforms a Lark parse tree of a model into ``app.models.ast`` nodes.
    """

    def start(self, meta, children):
        groups: dict[type, list] = {}
        for decl in children:
            groups.setdefault(type(decl), []).append(decl)
        return ModelAST(
            attr_type_decls=tuple(groups.get(AttrTypeDecl, ())),
            const_decls=tuple(groups.get(ConstDecl, ())),
            attribute_decls=tuple(groups.get(AttributeDecl, ())),
            func_decls=tuple(groups.get(FuncDecl, ())),
            update_decls=tuple(groups.get(UpdateDecl, ())),
            state_eqs=tuple(groups.get(StateEquation, ())),
            init=tuple(entry for block in groups.get(tuple, ()) for entry in block),
        )

    # --- declarations ---
    def attype_decl(self, meta, children):
        names = _names(children)
        return AttrTypeDecl(names[0], names[1:], _at(meta))

    def const_decl(self, meta, children):
        return ConstDecl(str(children[0]), children[1], _at(meta))

    def attribute_decl(self, meta, children):
        return AttributeDecl(str(children[0]), str(children[1]), _at(meta))

    def func_decl(self, meta, children):
        name, params, result_type, body = children
        return FuncDecl(str(name), tuple(params), result_type, body, _at(meta))

    def params(self, meta, children):
        return list(children)

    def param(self, meta, children):
        return Param(str(children[0]), children[1])

    def type_name(self, meta, children):
        return str(children[0])

    def case_table(self, meta, children):
        return CaseTable(children[0], tuple(children[1:]), _at(meta))

    def case_row(self, meta, children):
        return CaseRow(children[0], children[1], _at(meta))

    def case_key(self, meta, children):
        return _names(children)

    def update_decl(self, meta, children):
        return UpdateDecl(str(children[0]), tuple(children[1:]), _at(meta))

    def update_branch(self, meta, children):
        return UpdateBranch(tuple(children[0]), children[1], _at(meta))

    def assignments(self, meta, children):
        return list(children)

    def assignment(self, meta, children):
        return Assignment(str(children[0]), children[1], _at(meta))

    def state_decl(self, meta, children):
        return StateEquation(str(children[0]), tuple(children[1:]), _at(meta))

    def summand(self, meta, children):
        guard = None
        if isinstance(children[0], _Guard):
            guard = children[0].expr
            children = children[1:]
        prob, action, target = children
        return Summand(guard, prob, action, str(target), False, _at(meta))

    def rest_summand(self, meta, children):
        action, target = children
        return Summand(None, None, action, str(target), True, _at(meta))

    def guard(self, meta, children):
        return _Guard(children[0])

    def _action(self, kind, meta, children):
        label = str(children[0])
        predicate = children[1]
        update = next((c.name for c in children if isinstance(c, _UpdateRef)), None)
        return Action(kind, label, predicate, update, None, _at(meta))

    def output_action(self, meta, children):
        return self._action(OUTPUT, meta, children)

    def input_action(self, meta, children):
        return self._action(INPUT, meta, children)

    def update_ref(self, meta, children):
        return _UpdateRef(str(children[0]))

    def init_decl(self, meta, children):
        return tuple(children)

    def init_entry(self, meta, children):
        state = str(children[0])
        bindings = tuple(c for c in children[1:-1])
        count = Fraction(str(children[-1]))
        if count.denominator != 1:
            raise PiffSyntaxError(f"multiplicity {children[-1]} is not an integer", *(_at(meta) or (None, None)))
        return InitEntry(state, bindings, int(count), _at(meta))

    def binding(self, meta, children):
        return str(children[0]), str(children[1])

    # --- expressions ---
    def _binop(self, op, meta, children):
        return BinOp(op, children[0], children[1], _at(meta))

    def add(self, meta, children):
        return self._binop("+", meta, children)

    def sub(self, meta, children):
        return self._binop("-", meta, children)

    def mul(self, meta, children):
        return self._binop("*", meta, children)

    def div(self, meta, children):
        return self._binop("/", meta, children)

    def number(self, meta, children):
        text = str(children[0])
        # Fraction parses decimal strings exactly.
        return Num(Fraction(text), text, _at(meta))

    def my_attr(self, meta, children):
        return MyAttr(str(children[0]), _at(meta))

    def call(self, meta, children):
        return Call(str(children[0]), tuple(children[1]), _at(meta))

    def name(self, meta, children):
        return Name(str(children[0]), _at(meta))

    operand_number = number
    operand_my_attr = my_attr
    operand_call = call
    operand_name = name

    def args(self, meta, children):
        return list(children)

    operands = args

    def frc_state(self, meta, children):
        return FrcState(str(children[0]), _at(meta))

    operand_frc = frc_state

    def frc_pred(self, meta, children):
        return FrcPred(children[0], _at(meta))

    def true(self, meta, children):
        return BoolLit(True, _at(meta))

    def false(self, meta, children):
        return BoolLit(False, _at(meta))

    def compare(self, meta, children):
        left, op, right = children
        return Compare(op, left, right, _at(meta))

    def cmp_op(self, meta, children):
        return str(children[0])

    def not_(self, meta, children):
        return Not(children[0], _at(meta))

    def and_(self, meta, children):
        return And(children[0], children[1], _at(meta))

    def or_(self, meta, children):
        return Or(children[0], children[1], _at(meta))


# ---- Pretty printer ----

def _key(names: tuple[str, ...]) -> str:
    return names[0] if len(names) == 1 else "(" + ", ".join(names) + ")"


def _format_action(action: Action) -> str:
    box = "<>" if action.kind == OUTPUT else "()"
    update = f" {action.update}" if action.update else ""
    return f"{action.label}*[{action.predicate}]{box}{update}"


def _format_summand(summand: Summand) -> str:
    if summand.is_rest:
        return f"rest :: {_format_action(summand.action)} . {summand.target}"
    guard = f"[{summand.guard}] " if summand.guard is not None else ""
    return f"{guard}{summand.prob} :: {_format_action(summand.action)} . {summand.target}"


def _format_body(body: Union[Expr, CaseTable]) -> str:
    if isinstance(body, CaseTable):
        rows = "; ".join(f"{_key(row.key)}: {row.expr}" for row in body.rows)
        return f"case {_key(body.args)} of {rows}"
    return str(body)


def format_model(ast: ModelAST) -> str:
    """
    Renders a model in the concrete syntax accepted by ``parse_model``.
    """
    lines: list[str] = []
    for decl in ast.attr_type_decls:
        lines.append(f"attype {decl.name} enum {', '.join(decl.values)};")
    for decl in ast.const_decls:
        lines.append(f"const {decl.name} = {decl.expr};")
    for decl in ast.attribute_decls:
        lines.append(f"attribute {decl.name} : {decl.type_name};")
    for decl in ast.func_decls:
        params = ", ".join(f"{p.name}:{p.type_name}" for p in decl.params)
        lines.append(f"func {decl.name}({params}): {decl.result_type}; {_format_body(decl.body)} endfunc;")
    for decl in ast.update_decls:
        lines.append(f"update {decl.name}")
        branches = []
        for branch in decl.branches:
            assigns = ", ".join(f"my.{a.attribute} := {a.expr}" for a in branch.assignments)
            branches.append(f"  {assigns + ' ' if assigns else ''}with {branch.prob}")
        lines.append(";\n".join(branches))
        lines.append("endupdate")
    for eq in ast.state_eqs:
        body = "\n  + ".join(_format_summand(s) for s in eq.summands)
        lines.append(f"state {eq.name} {{\n    {body}\n}}")
    if ast.init:
        lines.append("init")
        for entry in ast.init:
            store = "".join(f", {attr}={value}" for attr, value in entry.store)
            lines.append(f"  ({entry.state}{store}) * {entry.count};")
        lines.append("endinit")
    return "\n".join(lines) + "\n"
