# app/models/checked.py

from dataclasses import dataclass, field, replace

from app.models.ast import FuncDecl, ModelAST, StateEquation, UpdateDecl
from app.models.states import ConstBindings


@dataclass(frozen=True)
class CheckedModel:
    """
    A model that passed validation, with the lookup tables every later
    phase needs.
    """
    ast: ModelAST
    bindings: ConstBindings
    attribute_order: tuple[str, ...]
    domains: dict[str, tuple[str, ...]]  # attribute -> enum values
    enum_types: dict[str, tuple[str, ...]]  # type name -> values
    value_type: dict[str, str]  # enum value -> type name
    functions: dict[str, FuncDecl]
    updates: dict[str, UpdateDecl]
    equations: dict[str, StateEquation]
    annotated: bool = field(default=False)

    @property
    def state_names(self) -> tuple[str, ...]:
        return tuple(self.equations)

    @property
    def population(self) -> int:
        return sum(entry.count for entry in self.ast.init)

    def enum_position(self, value: str) -> int:
        return self.enum_types[self.value_type[value]].index(value)

    def with_ast(self, ast: ModelAST, annotated: bool) -> "CheckedModel":
        return replace(self, ast=ast, equations=ast.equations, annotated=annotated)


# Annotated models share the representation; the flag records the phase.
AnnotatedModel = CheckedModel
