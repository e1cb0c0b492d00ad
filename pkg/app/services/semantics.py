# app/services/semantics.py

"""
Stores, outboxes and the interpretation functions used by the translator:
local evaluation (``eval_local``), remote satisfaction (``sat_remote``) and
store updates (``eval_update``).
"""

import itertools
import logging
from fractions import Fraction
from typing import Mapping, Optional, Union

from app.errors import EvaluationError
from app.models.ast import (
    And, BinOp, BoolLit, Call, CaseTable, Compare, Expr, FrcPred, FrcState, FuncDecl, MyAttr, Name, Not, Num,
    Or, Summand,
)
from app.models.checked import CheckedModel
from app.models.states import EMPTY, ComponentState, OutputOutbox, Store, StoreDistribution, Value

logger = logging.getLogger(__name__)

Result = Union[Value, bool, Expr]


# --- stores and component states ---
def enumerate_stores(model: CheckedModel) -> list[Store]:
    """
    All stores, attributes in declaration order and values in enum order.
    A model without attributes has exactly one (empty) store.
    """
    order = model.attribute_order
    return [
        Store(tuple(zip(order, values)))
        for values in itertools.product(*(model.domains[a] for a in order))
    ]


def enumerate_outboxes(model: CheckedModel, stores: Optional[list[Store]] = None) -> list:
    stores = stores if stores is not None else enumerate_stores(model)
    outputs = [action for action in model.ast.actions() if action.is_output]
    outboxes: list = [EMPTY]
    seen = set()
    for store in stores:
        for action in outputs:
            outbox = OutputOutbox(store, eval_local(action.predicate, store, model), action.label)
            if outbox not in seen:
                seen.add(outbox)
                outboxes.append(outbox)
    return outboxes


def enumerate_component_states(model: CheckedModel) -> list[ComponentState]:
    """
    Omega: agent states x stores x outboxes, in a fixed order.
    """
    stores = enumerate_stores(model)
    outboxes = enumerate_outboxes(model, stores)
    states = [
        ComponentState(name, store, outbox)
        for name in model.state_names
        for store in stores
        for outbox in outboxes
    ]
    logger.info("%d stores, %d outboxes, %d component states", len(stores), len(outboxes), len(states))
    return states


# --- expression evaluation ---
def _lift(value: Result) -> Expr:
    if isinstance(value, bool):
        return BoolLit(value)
    if isinstance(value, Fraction):
        return Num(value)
    if isinstance(value, str):
        return Name(value)
    return value


def _symbolic(value: Result) -> bool:
    return not isinstance(value, (bool, Fraction, str))


def _compare(op: str, left: Value, right: Value, model: CheckedModel) -> bool:
    if isinstance(left, Fraction) and isinstance(right, Fraction):
        a, b = left, right
    elif isinstance(left, str) and isinstance(right, str):
        if op in ("=", "!="):
            return (left == right) == (op == "=")
        if model.value_type.get(left) != model.value_type.get(right):
            raise EvaluationError(f"cannot order {left} and {right}: different types")
        a, b = model.enum_position(left), model.enum_position(right)
    else:
        raise EvaluationError(f"cannot compare {left} with {right}")
    return {
        "=": a == b, "!=": a != b, "<": a < b, "<=": a <= b, ">": a > b, ">=": a >= b,
    }[op]


def apply_function(func: FuncDecl, args: tuple[Value, ...], model: CheckedModel,
                   local: Optional[Store], remote: Optional[Store]) -> Value:
    """Applies a declared function to concrete argument values."""
    if len(args) != len(func.params):
        raise EvaluationError(f"{func.name} expects {len(func.params)} argument(s), got {len(args)}")
    params = {p.name: value for p, value in zip(func.params, args)}
    body = func.body
    if isinstance(body, CaseTable):
        key = tuple(params[name] for name in body.args)
        for row in body.rows:
            if row.key == key:
                return _eval(row.expr, model, local, remote, params)
        raise EvaluationError(f"function {func.name} has no case for ({', '.join(map(str, key))})")
    return _eval(body, model, local, remote, params)


def _eval(expr: Expr, model: CheckedModel, local: Optional[Store], remote: Optional[Store],
          params: Mapping[str, Value]) -> Result:
    if isinstance(expr, Num):
        return expr.value
    if isinstance(expr, BoolLit):
        return expr.value
    if isinstance(expr, Name):
        name = expr.name
        if name in params:
            return params[name]
        if name in model.bindings:
            return model.bindings[name]
        if name in model.value_type:
            return name
        if name in model.domains:
            # bare attribute: resolved against the remote store, kept symbolic otherwise
            return remote[name] if remote is not None else expr
        raise EvaluationError(f"unknown name {name}")
    if isinstance(expr, MyAttr):
        if local is None:
            raise EvaluationError(f"my.{expr.attribute} in a closed predicate")
        return local[expr.attribute]
    if isinstance(expr, Call):
        func = model.functions.get(expr.function)
        if func is None:
            raise EvaluationError(f"unknown function {expr.function}")
        values = tuple(_eval(arg, model, local, remote, params) for arg in expr.args)
        if any(_symbolic(v) for v in values):
            return Call(expr.function, tuple(_lift(v) for v in values))
        return apply_function(func, values, model, local, remote)
    if isinstance(expr, BinOp):
        left = _eval(expr.left, model, local, remote, params)
        right = _eval(expr.right, model, local, remote, params)
        if not (isinstance(left, Fraction) and isinstance(right, Fraction)):
            raise EvaluationError(f"arithmetic on non-numeric operands in {expr}")
        if expr.op == "+":
            return left + right
        if expr.op == "-":
            return left - right
        if expr.op == "*":
            return left * right
        if right == 0:
            raise EvaluationError(f"division by zero in {expr}")
        return left / right
    if isinstance(expr, Compare):
        left = _eval(expr.left, model, local, remote, params)
        right = _eval(expr.right, model, local, remote, params)
        if _symbolic(left) or _symbolic(right):
            return Compare(expr.op, _lift(left), _lift(right))
        return _compare(expr.op, left, right, model)
    if isinstance(expr, Not):
        value = _eval(expr.operand, model, local, remote, params)
        return (not value) if isinstance(value, bool) else Not(value)
    if isinstance(expr, (And, Or)):
        left = _eval(expr.left, model, local, remote, params)
        right = _eval(expr.right, model, local, remote, params)
        absorbing = isinstance(expr, Or)
        if left is absorbing or right is absorbing:
            return absorbing
        if isinstance(left, bool):
            return right
        if isinstance(right, bool):
            return left
        return type(expr)(left, right)
    if isinstance(expr, (FrcState, FrcPred)):
        raise EvaluationError(f"{expr} depends on the occupancy and has no local value")
    raise EvaluationError(f"cannot evaluate {expr!r}")


def eval_local(expr: Expr, store: Store, model: CheckedModel) -> Result:
    """
    Local evaluation against the component's own store. Constants come
    from ``model.bindings``, ``my.a`` from ``store``; bare attribute names
    stay symbolic, so a predicate comes back actualized (closed) unless
    it folds to a boolean.

    :raises EvaluationError: on a case-table miss, naming the function.
    """
    return _eval(expr, model, store, None, {})


def sat_remote(predicate: Union[bool, Expr], store: Store, model: CheckedModel) -> bool:
    """
    Remote satisfaction of a closed predicate by another component's store.
    """
    if isinstance(predicate, bool):
        return predicate
    value = _eval(predicate, model, None, store, {})
    if not isinstance(value, bool):
        raise EvaluationError(f"predicate {predicate} did not evaluate to a truth value")
    return value


def eval_update(update: Optional[str], store: Store, model: CheckedModel) -> StoreDistribution:
    """
    Distribution over successor stores of an update at ``store``. A missing
    update name is the identity update.

    :raises EvaluationError: when the branch probabilities do not sum to 1.
    """
    if update is None:
        return {store: Fraction(1)}
    decl = model.updates[update]
    result: StoreDistribution = {}
    total = Fraction(0)
    for branch in decl.branches:
        prob = eval_local(branch.prob, store, model)
        if not isinstance(prob, Fraction):
            raise EvaluationError(f"update {update}: branch probability {branch.prob} is not a number")
        if prob < 0:
            raise EvaluationError(f"update {update} at {store}: negative branch probability {prob}")
        total += prob
        if prob == 0:
            continue
        changes = {}
        for assignment in branch.assignments:
            value = eval_local(assignment.expr, store, model)
            if not isinstance(value, str):
                raise EvaluationError(f"update {update}: {assignment.expr} is not an attribute value")
            changes[assignment.attribute] = value
        target = store.updated(changes)
        result[target] = result.get(target, Fraction(0)) + prob
    if total != 1:
        raise EvaluationError(f"update {update} at store {store}: branch probabilities sum to {total}, not 1")
    return result


# --- restricted probability expressions ---
def split_prob(expr: Expr) -> tuple[Optional[Expr], Optional[Union[FrcState, FrcPred]]]:
    """
    Splits ``e_p``, ``e_p * frc(..)`` or ``frc(..) [* e_p]`` into the
    coefficient and the fraction term.

    :raises EvaluationError: for any other shape involving frc.
    """
    if isinstance(expr, (FrcState, FrcPred)):
        return None, expr
    if isinstance(expr, BinOp) and expr.op == "*":
        if isinstance(expr.right, (FrcState, FrcPred)) and not contains_frc(expr.left):
            return expr.left, expr.right
        if isinstance(expr.left, (FrcState, FrcPred)) and not contains_frc(expr.right):
            return expr.right, expr.left
    if contains_frc(expr):
        raise EvaluationError(f"probability {expr} is outside the restricted form e, e*frc(..), frc(..)")
    return expr, None


def contains_frc(expr) -> bool:
    if isinstance(expr, (FrcState, FrcPred)):
        return True
    if isinstance(expr, (BinOp, Compare, And, Or)):
        return contains_frc(expr.left) or contains_frc(expr.right)
    if isinstance(expr, Not):
        return contains_frc(expr.operand)
    if isinstance(expr, Call):
        return any(contains_frc(arg) for arg in expr.args)
    return False


def guard_holds(summand: Summand, store: Store, model: CheckedModel) -> bool:
    if summand.guard is None:
        return True
    value = eval_local(summand.guard, store, model)
    if not isinstance(value, bool):
        raise EvaluationError(f"guard {summand.guard} is not closed under the local store")
    return value


def coefficient(summand: Summand, store: Store, model: CheckedModel) -> Fraction:
    """The frc-free factor of a non-rest summand's probability at ``store``."""
    coef, _ = split_prob(summand.prob)
    if coef is None:
        return Fraction(1)
    value = eval_local(coef, store, model)
    if not isinstance(value, Fraction):
        raise EvaluationError(f"probability {coef} is not a number")
    return value
