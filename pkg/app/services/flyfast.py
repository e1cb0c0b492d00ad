# app/services/flyfast.py

import logging
import os
from fractions import Fraction
from typing import Optional

from jinja2 import Environment, FileSystemLoader
from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from app.errors import PiffError, PiffSyntaxError
from app.models.flat import (
    FDiv, FFrc, FlatExpr, FlatSpec, FNeg, FNum, FProd, FSub, FSum, fprod, fsub, fsum,
)
from app.services.idtmc import PolyMatrix
from app.services.poly import QuadForm

logger = logging.getLogger(__name__)

_APP_DIR = os.path.dirname(os.path.dirname(__file__))

env = Environment(
    loader=FileSystemLoader(os.path.join(_APP_DIR, "templates")),
    trim_blocks=True,
    keep_trailing_newline=True,
    autoescape=False,
)

with open(os.path.join(_APP_DIR, "grammars", "flyfast.lark"), encoding="utf-8") as _f:
    _flyfast_parser = Lark(_f.read(), parser="lalr", lexer="basic", propagate_positions=True)


# --- writing ---
def format_number(value: Fraction) -> str:
    text = str(value)
    return f"({text})" if value < 0 else text


def format_expr(expr: FlatExpr) -> str:
    """Renders a flat expression; the output parses back to an equal value."""
    if isinstance(expr, FNum):
        return format_number(expr.value)
    if isinstance(expr, FFrc):
        return f"frc({expr.state})"
    if isinstance(expr, FSum):
        return " + ".join(format_expr(t) for t in expr.terms)
    if isinstance(expr, FProd):
        return "*".join(_factor(f) for f in expr.factors)
    if isinstance(expr, FSub):
        right = format_expr(expr.right)
        if isinstance(expr.right, (FSum, FSub)):
            right = f"({right})"
        return f"{format_expr(expr.left)} - {right}"
    if isinstance(expr, FDiv):
        return f"{_factor(expr.left)}/{_divisor(expr.right)}"
    return f"-{_factor(expr.operand)}"


def _factor(expr: FlatExpr) -> str:
    text = format_expr(expr)
    if isinstance(expr, (FSum, FSub, FDiv, FNeg)):
        return f"({text})"
    return text


def _divisor(expr: FlatExpr) -> str:
    if isinstance(expr, FFrc) or (isinstance(expr, FNum) and expr.value.denominator == 1 and expr.value >= 0):
        return format_expr(expr)
    return f"({format_expr(expr)})"


def _render(actions, states, init, header: Optional[str]) -> str:
    template = env.get_template("flyfast.ff.j2")
    return template.render(actions=actions, states=states, init=init, header=header)


def render_flat_spec(spec: FlatSpec, header: Optional[str] = None) -> str:
    """
    FlyFast text: ``action`` lines, then ``state`` lines, then ``init``
    lines with the initial multiplicities.
    """
    actions = [(name, format_expr(expr)) for name, expr in spec.actions.items()]
    states = [
        (name, [f"{action}.{target}" for action, target in spec.equations.get(name, [])])
        for name in spec.states
    ]
    init = [(name, count) for name, count in spec.init.items() if count]
    return _render(actions, states, init, header)


def _affine_text(form: QuadForm, states: tuple[str, ...]) -> Optional[str]:
    h = form.affine_coefficients()
    if h is None:
        return None
    if all(value == h[0] for value in h):
        return format_number(h[0])
    groups: dict[Fraction, list[str]] = {}
    for name, value in zip(states, h):
        if value != 0:
            groups.setdefault(value, []).append(f"frc({name})")
    parts = []
    for value, frcs in groups.items():
        body = frcs[0] if len(frcs) == 1 else "(" + "+".join(frcs) + ")"
        parts.append(body if value == 1 else f"{format_number(value)}*{body}")
    return " + ".join(parts)


def format_form(form: QuadForm, states: tuple[str, ...]) -> str:
    """
    A form as FlyFast text over ``frc`` of ``states``: grouped linear text
    such as ``3/5*(frc(a)+frc(b))`` when it is affine on the simplex, a sum
    of ``c*frc(a)*frc(b)`` monomials otherwise.
    """
    if form.is_zero():
        return "0"
    affine = _affine_text(form, states)
    if affine is not None:
        return affine
    return " + ".join(
        f"{format_number(value)}*frc({states[i]})*frc({states[j]})" for (i, j), value in form.terms
    )


def render_matrix_spec(M: PolyMatrix, header: Optional[str] = None) -> str:
    """
    A matrix as a flat specification with one action ``ROW_COL`` per
    nonzero entry.
    """
    actions = []
    states = []
    for r, row in enumerate(M.rows):
        summands = []
        for c, form in row.items():
            name = f"{M.states[r]}_{M.states[c]}"
            actions.append((name, format_form(form, M.states)))
            summands.append(f"{name}.{M.states[c]}")
        states.append((M.states[r], summands))
    init = []
    if M.population:
        for name, value in M.init.items():
            count = Fraction(value) * M.population
            if count and count.denominator == 1:
                init.append((name, int(count)))
    return _render(actions, states, init, header)


# --- reading ---
@v_args(inline=True)
class _FlyFastTransformer(Transformer):
    def __init__(self):
        super().__init__()
        self.consts: dict[str, FlatExpr] = {}

    def start(self, *items):
        states: list[str] = []
        actions: dict[str, FlatExpr] = {}
        equations: dict[str, list[tuple[str, str]]] = {}
        init: dict[str, int] = {}
        for kind, name, value in (item for item in items if item is not None):
            if kind == "action":
                if name in actions:
                    raise PiffSyntaxError(f"action {name} defined twice")
                actions[name] = value
            elif kind == "state":
                if name in equations:
                    raise PiffSyntaxError(f"state {name} defined twice")
                states.append(name)
                equations[name] = value
            else:
                init[name] = init.get(name, 0) + value
        return FlatSpec(states, actions, equations, init)

    def const_line(self, name, expr):
        self.consts[str(name)] = expr
        return None

    def action_line(self, name, expr):
        return "action", str(name), expr

    def state_line(self, name, *summands):
        return "state", str(name), list(summands)

    def summand(self, action, target):
        return str(action), str(target)

    def init_line(self, name, count):
        value = Fraction(str(count))
        if value.denominator != 1:
            raise PiffSyntaxError(f"init count {count} is not an integer", count.line, count.column)
        return "init", str(name), int(value)

    def number(self, token):
        return FNum(Fraction(str(token)))

    def frc(self, name):
        return FFrc(str(name))

    def const_ref(self, name):
        if str(name) not in self.consts:
            raise PiffSyntaxError(f"unknown constant {name}", name.line, name.column)
        return self.consts[str(name)]

    def add(self, left, right):
        return fsum([left, right])

    def sub(self, left, right):
        return fsub(left, right)

    def mul(self, left, right):
        return fprod([left, right])

    def div(self, left, right):
        if isinstance(left, FNum) and isinstance(right, FNum) and right.value != 0:
            return FNum(left.value / right.value)
        return FDiv(left, right)

    def neg(self, operand):
        return FNum(-operand.value) if isinstance(operand, FNum) else FNeg(operand)


def parse_flat_spec(text: str) -> FlatSpec:
    """
    Reads FlyFast text. ``const`` definitions are substituted into later
    expressions.

    :raises PiffSyntaxError: with the position of the offending token.
    """
    try:
        tree = _flyfast_parser.parse(text)
    except UnexpectedInput as exc:
        raise PiffSyntaxError("unexpected input in flat specification", exc.line, exc.column) from exc
    try:
        spec = _FlyFastTransformer().transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, PiffError):
            raise exc.orig_exc from exc
        raise
    logger.info("read flat specification with %d states and %d actions", len(spec.states), len(spec.actions))
    return spec
