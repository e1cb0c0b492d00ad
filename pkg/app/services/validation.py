# app/services/validation.py

import logging
from fractions import Fraction
from typing import Optional

from app.errors import Diagnostic, EvaluationError, ValidationError
from app.models.ast import (
    FLOAT, And, BinOp, BoolLit, Call, CaseTable, Compare, ConstDecl, Expr, FrcPred, FrcState, FuncDecl,
    ModelAST, MyAttr, Name, Not, Num, Or,
)
from app.models.checked import CheckedModel
from app.models.states import ConstBindings, Store
from app.services import semantics

logger = logging.getLogger(__name__)

BOOL = "bool"


class _Checker:
    """
    Collects diagnostics for one model. Static checks run first; the
    store-by-store checks only run on a model that passed them.
    """

    def __init__(self, ast: ModelAST):
        self.ast = ast
        self.diagnostics: list[Diagnostic] = []
        self.enum_types = ast.attr_types
        self.value_type = {v: t for t, values in self.enum_types.items() for v in values}
        self.attributes = ast.attributes
        self.functions = {f.name: f for f in ast.func_decls}
        self.states = ast.equations
        self.const_values: dict[str, object] = {}

    def error(self, message: str, node=None) -> None:
        pos = getattr(node, "pos", None) or (None, None)
        self.diagnostics.append(Diagnostic("error", message, pos[0], pos[1]))

    # --- names ---
    def check_unique(self) -> None:
        for category, decls in (
            ("attribute type", self.ast.attr_type_decls), ("constant", self.ast.const_decls),
            ("attribute", self.ast.attribute_decls), ("function", self.ast.func_decls),
            ("update", self.ast.update_decls), ("state", self.ast.state_eqs),
        ):
            seen = set()
            for decl in decls:
                if decl.name in seen:
                    self.error(f"duplicate {category} {decl.name}", decl)
                seen.add(decl.name)
        owner: dict[str, str] = {}
        for decl in self.ast.attr_type_decls:
            for value in decl.values:
                if value in owner:
                    self.error(f"enum value {value} declared in both {owner[value]} and {decl.name}", decl)
                owner[value] = decl.name
        for decl in self.ast.const_decls:
            if decl.name in owner:
                self.error(f"constant {decl.name} clashes with an enum value", decl)
        for decl in self.ast.attribute_decls:
            if decl.name in owner or decl.name in self.ast.consts:
                self.error(f"attribute {decl.name} clashes with a constant or enum value", decl)
            if decl.type_name == FLOAT:
                self.error(f"attribute {decl.name}: float attributes are not supported", decl)
            elif decl.type_name not in self.enum_types:
                self.error(f"attribute {decl.name} has undeclared type {decl.type_name}", decl)

    # --- constants ---
    def check_consts(self) -> None:
        for decl in self.ast.const_decls:
            try:
                self.const_values[decl.name] = self._const_value(decl.expr, decl)
            except EvaluationError as exc:
                self.error(f"constant {decl.name}: {exc}", decl)

    def _const_value(self, expr: Expr, decl: ConstDecl):
        if isinstance(expr, Num):
            return expr.value
        if isinstance(expr, Name):
            if expr.name in self.const_values:
                return self.const_values[expr.name]
            if expr.name in self.value_type:
                return expr.name
            raise EvaluationError(f"{expr.name} is not a previously declared constant")
        if isinstance(expr, BinOp):
            left = self._const_value(expr.left, decl)
            right = self._const_value(expr.right, decl)
            if not (isinstance(left, Fraction) and isinstance(right, Fraction)):
                raise EvaluationError("arithmetic on enum values")
            if expr.op == "/" and right == 0:
                raise EvaluationError("division by zero")
            return {"+": lambda: left + right, "-": lambda: left - right,
                    "*": lambda: left * right, "/": lambda: left / right}[expr.op]()
        raise EvaluationError(f"{expr} is not a constant expression")

    # --- typing ---
    def type_of(self, expr: Expr, params: dict[str, str], my: bool = False, remote: bool = False,
                frc: bool = False) -> Optional[str]:
        """
        Type of an expression (an enum type name, ``float`` or ``bool``);
        None after reporting an error.
        """
        if isinstance(expr, Num):
            return FLOAT
        if isinstance(expr, BoolLit):
            return BOOL
        if isinstance(expr, Name):
            name = expr.name
            if name in params:
                return params[name]
            if name in self.const_values:
                value = self.const_values[name]
                return FLOAT if isinstance(value, Fraction) else self.value_type[value]
            if name in self.value_type:
                return self.value_type[name]
            if name in self.attributes and remote:
                return self.attributes[name]
            if name in self.attributes:
                self.error(f"bare attribute {name} is only allowed in action predicates (use my.{name})", expr)
            else:
                self.error(f"undeclared name {name}", expr)
            return None
        if isinstance(expr, MyAttr):
            if not my:
                self.error(f"my.{expr.attribute} is not allowed here", expr)
                return None
            if expr.attribute not in self.attributes:
                self.error(f"undeclared attribute {expr.attribute}", expr)
                return None
            return self.attributes[expr.attribute]
        if isinstance(expr, Call):
            func = self.functions.get(expr.function)
            if func is None:
                self.error(f"undeclared function {expr.function}", expr)
                return None
            if len(func.params) != len(expr.args):
                self.error(f"{func.name} expects {len(func.params)} argument(s), got {len(expr.args)}", expr)
                return None
            for param, arg in zip(func.params, expr.args):
                arg_type = self.type_of(arg, params, my, remote, frc)
                if arg_type is not None and arg_type != param.type_name:
                    self.error(f"argument {arg} of {func.name} has type {arg_type}, expected {param.type_name}", expr)
            return func.result_type
        if isinstance(expr, BinOp):
            left = self.type_of(expr.left, params, my, remote, frc)
            right = self.type_of(expr.right, params, my, remote, frc)
            if left is None or right is None:
                return None
            if left != FLOAT or right != FLOAT:
                self.error(f"arithmetic on non-numeric operands in {expr}", expr)
                return None
            return FLOAT
        if isinstance(expr, Compare):
            left = self.type_of(expr.left, params, my, remote, frc)
            right = self.type_of(expr.right, params, my, remote, frc)
            if left is not None and right is not None and left != right:
                self.error(f"comparison of {left} with {right} in {expr}", expr)
            return BOOL
        if isinstance(expr, Not):
            self.expect(expr.operand, BOOL, params, my, remote, frc)
            return BOOL
        if isinstance(expr, (And, Or)):
            self.expect(expr.left, BOOL, params, my, remote, frc)
            self.expect(expr.right, BOOL, params, my, remote, frc)
            return BOOL
        if isinstance(expr, FrcState):
            if not frc:
                self.error(f"{expr} is not allowed here", expr)
            elif expr.state not in self.states:
                self.error(f"frc of undeclared state {expr.state}", expr)
            return FLOAT
        if isinstance(expr, FrcPred):
            if not frc:
                self.error(f"{expr} is not allowed here", expr)
            else:
                self.expect(expr.predicate, BOOL, params, my=True, remote=True)
            return FLOAT
        self.error(f"unsupported expression {expr}", expr)
        return None

    def expect(self, expr: Expr, wanted: str, params: dict[str, str], my: bool = False, remote: bool = False,
               frc: bool = False) -> None:
        found = self.type_of(expr, params, my, remote, frc)
        if found is not None and found != wanted:
            self.error(f"{expr} has type {found}, expected {wanted}", expr)

    # --- functions ---
    def check_functions(self) -> None:
        for func in self.ast.func_decls:
            params = {}
            for p in func.params:
                if p.type_name not in self.enum_types:
                    self.error(f"parameter {p.name} of {func.name} must have an enum type", func)
                params[p.name] = p.type_name
            if func.result_type != FLOAT and func.result_type not in self.enum_types:
                self.error(f"function {func.name} has undeclared result type {func.result_type}", func)
                continue
            body = func.body
            if isinstance(body, CaseTable):
                self._check_case_table(func, body, params)
            else:
                self.expect(body, func.result_type, params, my=True)
        self._check_recursion()

    def _check_case_table(self, func: FuncDecl, table: CaseTable, params: dict[str, str]) -> None:
        if list(table.args) != [p.name for p in func.params]:
            self.error(f"case of {func.name} must range over its parameters ({', '.join(params)})", table)
            return
        seen = set()
        for row in table.rows:
            if len(row.key) != len(table.args):
                self.error(f"case row {row.key} of {func.name} has the wrong arity", row)
                continue
            for name, value in zip(table.args, row.key):
                if value not in self.enum_types.get(params[name], ()):
                    self.error(f"case value {value} is not in {params[name]}", row)
            if row.key in seen:
                self.error(f"duplicate case {', '.join(row.key)} in {func.name}", row)
            seen.add(row.key)
            self.expect(row.expr, func.result_type, params, my=True)

    def _check_recursion(self) -> None:
        calls: dict[str, set[str]] = {}
        for func in self.ast.func_decls:
            exprs = [row.expr for row in func.body.rows] if isinstance(func.body, CaseTable) else [func.body]
            calls[func.name] = set().union(*(_called(e) for e in exprs)) if exprs else set()
        done: set[str] = set()

        def visit(name: str, path: tuple[str, ...]) -> None:
            if name in path:
                self.error(f"recursive function definition: {' -> '.join(path + (name,))}", self.functions[name])
                return
            if name in done or name not in calls:
                return
            for callee in sorted(calls[name]):
                visit(callee, path + (name,))
            done.add(name)

        for name in calls:
            visit(name, ())

    # --- updates, equations, init ---
    def check_updates(self) -> None:
        for decl in self.ast.update_decls:
            for branch in decl.branches:
                assigned = set()
                for assignment in branch.assignments:
                    if assignment.attribute not in self.attributes:
                        self.error(f"update {decl.name} assigns undeclared attribute {assignment.attribute}", assignment)
                        continue
                    if assignment.attribute in assigned:
                        self.error(f"update {decl.name} assigns {assignment.attribute} twice", assignment)
                    assigned.add(assignment.attribute)
                    self.expect(assignment.expr, self.attributes[assignment.attribute], {}, my=True)
                self.expect(branch.prob, FLOAT, {}, my=True)

    def check_equations(self) -> None:
        if not self.ast.state_eqs:
            self.error("model declares no state equations")
        updates = self.ast.updates
        for eq in self.ast.state_eqs:
            rests = [s for s in eq.summands if s.is_rest]
            if len(rests) > 1:
                self.error(f"state {eq.name} has more than one rest summand", rests[1])
            for summand in eq.summands:
                action = summand.action
                if summand.is_rest and not action.is_output:
                    self.error(f"rest summand of {eq.name} must use an output action", summand)
                if summand.target not in self.states:
                    self.error(f"undeclared target state {summand.target}", summand)
                if action.update is not None and action.update not in updates:
                    self.error(f"undeclared update {action.update}", action)
                if semantics.contains_frc(action.predicate):
                    self.error(f"predicate of {action.label} depends on occupancy", action)
                else:
                    self.expect(action.predicate, BOOL, {}, my=True, remote=True)
                if summand.guard is not None:
                    if semantics.contains_frc(summand.guard):
                        self.error("guard depends on occupancy", summand.guard)
                    else:
                        self.expect(summand.guard, BOOL, {}, my=True)
                if summand.is_rest:
                    continue
                try:
                    coef, term = semantics.split_prob(summand.prob)
                except EvaluationError as exc:
                    self.error(str(exc), summand.prob)
                    continue
                if term is not None:
                    self.type_of(term, {}, frc=True)
                if coef is not None:
                    self.expect(coef, FLOAT, {}, my=True)
                    self._check_constant_range(coef)

    def _check_constant_range(self, coef: Expr) -> None:
        if _is_closed_constant(coef):
            try:
                value = self._const_value(coef, None)
            except EvaluationError:
                return
            if isinstance(value, Fraction) and not (0 <= value <= 1):
                self.error(f"probability {coef} = {value} is outside [0, 1]", coef)

    def check_init(self) -> None:
        if not self.ast.init:
            self.error("model has no initial population (init ... endinit)")
        for entry in self.ast.init:
            if entry.state not in self.states:
                self.error(f"init references undeclared state {entry.state}", entry)
            if entry.count < 1:
                self.error(f"init multiplicity of {entry.state} must be positive", entry)
            bound = [attr for attr, _ in entry.store]
            for attr, value in entry.store:
                if attr not in self.attributes:
                    self.error(f"init binds undeclared attribute {attr}", entry)
                elif value not in self.enum_types.get(self.attributes[attr], ()):
                    self.error(f"init value {value} is not in {self.attributes[attr]}", entry)
            if sorted(bound) != sorted(self.attributes) or len(set(bound)) != len(bound):
                self.error(f"init store of {entry.state} must bind every attribute exactly once", entry)

    # --- store-by-store checks ---
    def build(self) -> CheckedModel:
        order = tuple(d.name for d in self.ast.attribute_decls)
        return CheckedModel(
            ast=self.ast,
            bindings=ConstBindings(dict(self.const_values)),
            attribute_order=order,
            domains={a: self.enum_types[self.attributes[a]] for a in order},
            enum_types=dict(self.enum_types),
            value_type=dict(self.value_type),
            functions=dict(self.functions),
            updates=self.ast.updates,
            equations=self.ast.equations,
        )

    def check_dynamic(self, model: CheckedModel) -> None:
        stores = semantics.enumerate_stores(model)
        for decl in self.ast.update_decls:
            for store in stores:
                try:
                    semantics.eval_update(decl.name, store, model)
                except EvaluationError as exc:
                    self.error(str(exc), decl)
        for eq in self.ast.state_eqs:
            for store in stores:
                self._check_equation_at(eq, store, model)

    def _check_equation_at(self, eq, store: Store, model: CheckedModel) -> None:
        constant_total = Fraction(0)
        for summand in eq.summands:
            try:
                if not semantics.guard_holds(summand, store, model):
                    continue
                semantics.eval_local(summand.action.predicate, store, model)
                if summand.is_rest:
                    continue
                value = semantics.coefficient(summand, store, model)
            except EvaluationError as exc:
                self.error(f"state {eq.name} at {store}: {exc}", summand)
                continue
            if not (0 <= value <= 1):
                self.error(f"state {eq.name} at {store}: probability {summand.prob} = {value} outside [0, 1]", summand)
            _, term = semantics.split_prob(summand.prob)
            if term is None:
                constant_total += value
        if constant_total > 1:
            self.error(f"state {eq.name} at {store}: constant probabilities sum to {constant_total} > 1", eq)


def _called(expr) -> set[str]:
    if isinstance(expr, Call):
        return {expr.function}.union(*(_called(a) for a in expr.args))
    if isinstance(expr, (BinOp, Compare, And, Or)):
        return _called(expr.left) | _called(expr.right)
    if isinstance(expr, Not):
        return _called(expr.operand)
    return set()


def _is_closed_constant(expr) -> bool:
    if isinstance(expr, (Num, Name)):
        return True
    if isinstance(expr, BinOp):
        return _is_closed_constant(expr.left) and _is_closed_constant(expr.right)
    return False


def validate_model(ast: ModelAST) -> CheckedModel:
    """
    Static and store-by-store checks of a parsed model.

    :param ast: The parsed model.
    :return: The checked model with its lookup tables.
    :rtype: CheckedModel
    :raises ValidationError: carrying every diagnostic found.
    """
    checker = _Checker(ast)
    checker.check_unique()
    checker.check_consts()
    checker.check_functions()
    checker.check_updates()
    checker.check_equations()
    checker.check_init()
    if checker.diagnostics:
        raise ValidationError(checker.diagnostics)
    model = checker.build()
    checker.check_dynamic(model)
    if checker.diagnostics:
        raise ValidationError(checker.diagnostics)
    logger.info("model valid: %d states, %d attributes, population %d",
                len(model.equations), len(model.attribute_order), model.population)
    return model
