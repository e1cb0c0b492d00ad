# app/services/labels.py

import logging
import os
from dataclasses import dataclass
from typing import Union

from lark import Lark, Transformer
from lark.exceptions import UnexpectedInput

from app.errors import LabelError, TranslationError
from app.services.idtmc import LabelMap, PolyMatrix
from app.services.translator import decode_state

logger = logging.getLogger(__name__)

_GRAMMAR_FILE = os.path.join(os.path.dirname(os.path.dirname(__file__)), "grammars", "labels.lark")

with open(_GRAMMAR_FILE, encoding="utf-8") as _f:
    _label_parser = Lark(_f.read(), parser="lalr", lexer="basic", propagate_positions=True)


# --- label predicates ---
@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class StateIn:
    states: frozenset[str]


@dataclass(frozen=True)
class AttrIn:
    attribute: str
    values: frozenset[str]


@dataclass(frozen=True)
class LNot:
    operand: "LabelPred"


@dataclass(frozen=True)
class LAnd:
    left: "LabelPred"
    right: "LabelPred"


@dataclass(frozen=True)
class LOr:
    left: "LabelPred"
    right: "LabelPred"


LabelPred = Union[Const, StateIn, AttrIn, LNot, LAnd, LOr]


@dataclass(frozen=True)
class LabelDef:
    name: str
    predicate: LabelPred
    line: int = 0


@dataclass(frozen=True)
class LabelFile:
    definitions: tuple[LabelDef, ...]

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.definitions]


class _LabelTransformer(Transformer):
    def start(self, children):
        return list(children)

    def definition(self, children):
        name, predicate = children
        return LabelDef(str(name), predicate, name.line)

    def names(self, children):
        return frozenset(str(c) for c in children)

    def true(self, _):
        return Const(True)

    def false(self, _):
        return Const(False)

    def state_in(self, children):
        return StateIn(children[0])

    def attr_in(self, children):
        return AttrIn(str(children[0]), children[1])

    def attr_eq(self, children):
        return AttrIn(str(children[0]), frozenset({str(children[1])}))

    def attr_ne(self, children):
        return LNot(AttrIn(str(children[0]), frozenset({str(children[1])})))

    def not_(self, children):
        return LNot(children[0])

    def and_(self, children):
        return LAnd(*children)

    def or_(self, children):
        return LOr(*children)


def parse_label_file(text: str) -> LabelFile:
    """
    Parses ``NAME := predicate`` definitions.

    :raises LabelError: on a syntax error or a repeated name.
    """
    try:
        definitions = _LabelTransformer().transform(_label_parser.parse(text))
    except UnexpectedInput as exc:
        raise LabelError(f"label file line {exc.line}, column {exc.column}: unexpected input") from exc
    seen: set[str] = set()
    for definition in definitions:
        if definition.name in seen:
            raise LabelError(f"label {definition.name} defined twice (line {definition.line})")
        seen.add(definition.name)
    return LabelFile(tuple(definitions))


def holds(predicate: LabelPred, agent_state: str, store: dict[str, str]) -> bool:
    if isinstance(predicate, Const):
        return predicate.value
    if isinstance(predicate, StateIn):
        return agent_state in predicate.states
    if isinstance(predicate, AttrIn):
        if predicate.attribute not in store:
            raise LabelError(f"unknown attribute {predicate.attribute}")
        return store[predicate.attribute] in predicate.values
    if isinstance(predicate, LNot):
        return not holds(predicate.operand, agent_state, store)
    if isinstance(predicate, LAnd):
        return holds(predicate.left, agent_state, store) and holds(predicate.right, agent_state, store)
    return holds(predicate.left, agent_state, store) or holds(predicate.right, agent_state, store)


def _decoded_members(M: PolyMatrix, state: str) -> list[dict]:
    try:
        return [decode_state(name) for name in M.members.get(state, (state,))]
    except TranslationError as exc:
        raise LabelError(f"cannot label {state}: {exc}") from exc


def label_states(label_file: LabelFile, M: PolyMatrix) -> LabelMap:
    """
    Evaluates every definition on every state of ``M``. A reduced state is
    labelled through its members, which must agree.

    :raises LabelError: when the members of a state disagree on a label.
    """
    labels: LabelMap = {}
    for state in M.states:
        members = _decoded_members(M, state)
        carried = set()
        for definition in label_file.definitions:
            values = {holds(definition.predicate, m["state"], m["store"]) for m in members}
            if len(values) > 1:
                raise LabelError(f"label {definition.name} is not constant on the members of {state}")
            if values.pop():
                carried.add(definition.name)
        labels[state] = frozenset(carried)
    logger.info("labelled %d states with %d proposition(s)", len(labels), len(label_file.definitions))
    return labels


def pair_labels(M: PolyMatrix) -> LabelMap:
    """
    One proposition per (agent state, store) pair, named by the agent state
    followed by the store values, e.g. ``SA``.
    """
    labels: LabelMap = {}
    for state in M.states:
        pairs = {m["state"] + "".join(m["store"].values()) for m in _decoded_members(M, state)}
        if len(pairs) > 1:
            raise LabelError(f"members of {state} span several (state, store) pairs")
        labels[state] = frozenset(pairs)
    return labels
