# app/services/translator.py

"""
PiFF to FlyFast: every (agent state, store, outbox) triple becomes a flat
state, every summand instance a named action with its own probability
definition.
"""

import hashlib
import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import Optional, Union

from app.conf.config import get_settings
from app.errors import EvaluationError, TranslationError
from app.models.ast import Action, Expr, FrcPred, FrcState, StateEquation, Summand
from app.models.checked import AnnotatedModel, CheckedModel
from app.models.flat import FFrc, FlatExpr, FlatSpec, FNum, ONE, ZERO, drop_states, fprod, fsub, fsum
from app.models.states import EMPTY, INIT, ComponentState, OutputOutbox, Store
from app.services.idtmc import flat_to_quadform
from app.services.semantics import (
    enumerate_outboxes, enumerate_stores, eval_local, eval_update, guard_holds, sat_remote, split_prob,
)

logger = logging.getLogger(__name__)

Source = tuple[str, Store]


def annotate_actions(model: CheckedModel) -> AnnotatedModel:
    """
    Numbers every action occurrence 1, 2, ... in source order. Running it
    on an annotated model gives the same annotations.
    """
    counter = 0
    equations = []
    for eq in model.ast.state_eqs:
        summands = []
        for summand in eq.summands:
            counter += 1
            summands.append(replace(summand, action=replace(summand.action, annotation=counter)))
        equations.append(StateEquation(eq.name, tuple(summands), eq.pos))
    return model.with_ast(model.ast.with_equations(tuple(equations)), annotated=True)


# --- encoders ---
def _predicate_tag(outbox: OutputOutbox) -> str:
    if isinstance(outbox.predicate, bool):
        return outbox.predicate_text()
    return hashlib.sha1(outbox.predicate_text().encode("utf-8")).hexdigest()[:8]


def _outbox_tag(outbox) -> str:
    if outbox is EMPTY or outbox is INIT:
        return str(outbox)
    return f"{outbox.sender.tag()}|{_predicate_tag(outbox)}|{outbox.label}"


class StateEncoder:
    """
    Injective naming of component states: ``C@store@outbox``. The encoder
    also fixes the universe, i.e. the states frc sums range over.
    """

    def __init__(self, universe: list[ComponentState]):
        self.universe = list(universe)
        self._names: dict[ComponentState, str] = {}
        self._states: dict[str, ComponentState] = {}
        for state in self.universe:
            self.encode(state)
        self._sums: dict[object, FlatExpr] = {}

    def encode(self, state: ComponentState) -> str:
        name = self._names.get(state)
        if name is not None:
            return name
        name = f"{state.agent_state}@{state.store.tag()}@{_outbox_tag(state.outbox)}"
        if name in self._states:
            raise TranslationError(f"state name {name} is not unique")
        self._names[state] = name
        self._states[name] = state
        return name

    def decode(self, name: str) -> ComponentState:
        try:
            return self._states[name]
        except KeyError:
            raise TranslationError(f"unknown flat state {name}") from None

    def names(self) -> list[str]:
        return [self._names[state] for state in self.universe]

    def index(self) -> dict[str, int]:
        return {self._names[state]: i for i, state in enumerate(self.universe)}

    def frc_sum(self, key, member) -> FlatExpr:
        """Sum of frc over the universe states accepted by ``member``; cached by ``key``."""
        if key not in self._sums:
            self._sums[key] = fsum(FFrc(self._names[s]) for s in self.universe if member(s))
        return self._sums[key]


class ActionEncoder:
    """
    Names ``label + annotation + '_' + source index + '_' + target index``.
    The annotation identifies the occurrence, so the name is injective in
    (source, occurrence, target) and does not depend on the source outbox.
    """

    def __init__(self, sources: list[Source], states: StateEncoder):
        self._source_index = {source: i for i, source in enumerate(sources)}
        self._target_index = {state: i for i, state in enumerate(states.universe)}

    def encode(self, source: Source, action: Action, target: ComponentState) -> str:
        if action.annotation is None:
            raise TranslationError(f"action {action.label} is not annotated")
        return f"{action.label}{action.annotation}_{self._source_index[source]}_{self._target_index[target]}"


@dataclass(frozen=True)
class Transition:
    action: str
    definition: FlatExpr
    target: ComponentState
    factor: FlatExpr
    summand: int


# --- translation steps ---
def translate_prob_expr(expr: Expr, store: Store, encoder: StateEncoder, model: CheckedModel) -> FlatExpr:
    """
    I_P: the coefficient is evaluated at ``store``; frc(C) becomes the sum
    over every universe state with agent state C, frc(pi) the sum over
    those whose store satisfies the predicate closed at ``store``.
    """
    coef_expr, frc = split_prob(expr)
    coef = Fraction(1)
    if coef_expr is not None:
        value = eval_local(coef_expr, store, model)
        if not isinstance(value, Fraction):
            raise TranslationError(f"probability {coef_expr} is not a number at {store}")
        coef = value
    if frc is None:
        return FNum(coef)
    if isinstance(frc, FrcState):
        occupancy = encoder.frc_sum(("state", frc.state), lambda s: s.agent_state == frc.state)
    else:
        closed = eval_local(frc.predicate, store, model)
        occupancy = encoder.frc_sum(
            ("pred", closed), lambda s: sat_remote(closed, s.store, model),
        )
    return fprod([FNum(coef), occupancy])


def _successors(summand: Summand, source: Source, outbox, factor: FlatExpr, index: int,
                actions: ActionEncoder, model: CheckedModel) -> list[Transition]:
    state, store = source
    transitions = []
    for successor, prob in eval_update(summand.action.update, store, model).items():
        target = ComponentState(summand.target, successor, outbox)
        transitions.append(Transition(
            actions.encode(source, summand.action, target), fprod([FNum(prob), factor]), target, factor, index,
        ))
    return transitions


def translate_output_step(summand: Summand, source: Source, index: int, encoder: StateEncoder,
                          actions: ActionEncoder, model: CheckedModel) -> list[Transition]:
    """The target outbox records the sender store, the closed predicate and the label."""
    _, store = source
    factor = translate_prob_expr(summand.prob, store, encoder, model)
    outbox = OutputOutbox(store, eval_local(summand.action.predicate, store, model), summand.action.label)
    return _successors(summand, source, outbox, factor, index, actions, model)


def translate_input_step(summand: Summand, source: Source, index: int, encoder: StateEncoder,
                         actions: ActionEncoder, model: CheckedModel) -> list[Transition]:
    """
    The probability is multiplied by the occupancy of partners: states whose
    outbox holds a matching label, whose output predicate accepts this store
    and whose sender store satisfies the input predicate.
    """
    _, store = source
    label = summand.action.label
    closed = eval_local(summand.action.predicate, store, model)

    def partner(state: ComponentState) -> bool:
        outbox = state.outbox
        return (
            isinstance(outbox, OutputOutbox)
            and outbox.label == label
            and sat_remote(outbox.predicate, store, model)
            and sat_remote(closed, outbox.sender, model)
        )

    partners = encoder.frc_sum(("partner", label, store, closed), partner)
    factor = fprod([translate_prob_expr(summand.prob, store, encoder, model), partners])
    return _successors(summand, source, EMPTY, factor, index, actions, model)


def translate_rest_step(summand: Summand, source: Source, index: int, partial: list[Transition],
                        actions: ActionEncoder, model: CheckedModel) -> list[Transition]:
    """
    ``rest`` gets 1 minus the probabilities of every other enabled summand,
    each summand counted once. The rest action is an output.
    """
    _, store = source
    factors: dict[int, FlatExpr] = {}
    for transition in partial:
        factors.setdefault(transition.summand, transition.factor)
    factor = fsub(ONE, fsum(factors.values())) if factors else ONE
    outbox = OutputOutbox(store, eval_local(summand.action.predicate, store, model), summand.action.label)
    return _successors(summand, source, outbox, factor, index, actions, model)


def translate_source(source: Source, encoder: StateEncoder, actions: ActionEncoder,
                     model: CheckedModel) -> list[Transition]:
    """All transitions of the states with agent state and store ``source``."""
    state, store = source
    transitions: list[Transition] = []
    rests: list[tuple[int, Summand]] = []
    try:
        for index, summand in enumerate(model.equations[state].summands):
            if not guard_holds(summand, store, model):
                continue
            if summand.is_rest:
                rests.append((index, summand))
            elif summand.action.is_output:
                transitions.extend(translate_output_step(summand, source, index, encoder, actions, model))
            else:
                transitions.extend(translate_input_step(summand, source, index, encoder, actions, model))
        # the complement is taken over all other summands, wherever rest is written
        others = list(transitions)
        for index, summand in rests:
            transitions.extend(translate_rest_step(summand, source, index, others, actions, model))
    except EvaluationError as exc:
        raise TranslationError(f"state {state} at {store}: {exc}") from exc
    return transitions


# --- whole model ---
def _universe(model: CheckedModel, stores: list[Store]) -> tuple[list[ComponentState], dict[ComponentState, int]]:
    outboxes = enumerate_outboxes(model, stores)
    order = model.attribute_order
    init: dict[ComponentState, int] = {}
    for entry in model.ast.init:
        state = ComponentState(entry.state, Store.of(dict(entry.store), order), INIT)
        init[state] = init.get(state, 0) + entry.count
    universe = []
    for name in model.state_names:
        for store in stores:
            universe.append(ComponentState(name, store, EMPTY))
            if ComponentState(name, store, INIT) in init:
                universe.append(ComponentState(name, store, INIT))
            universe.extend(ComponentState(name, store, outbox) for outbox in outboxes[1:])
    return universe, init


def _reachable(initial: list[str], equations: dict[str, list[tuple[str, str]]], live: set[str]) -> set[str]:
    seen = set(initial)
    queue = deque(initial)
    while queue:
        state = queue.popleft()
        for action, target in equations.get(state, ()):
            if action in live and target not in seen:
                seen.add(target)
                queue.append(target)
    return seen


def translate(model: CheckedModel, prune: Optional[bool] = None,
              threads: Optional[int] = None) -> tuple[FlatSpec, StateEncoder]:
    """
    Translates a validated model into a flat specification.

    Actions whose definition is identically zero on the simplex are
    dropped. With ``prune`` the states unreachable from the initial states
    are removed, their frc terms replaced by 0, and the two steps repeated
    until nothing changes.

    :param model: Validated model; annotated here if it is not yet.
    :param prune: Defaults to the PRUNE setting.
    :param threads: Worker threads for the per-source work; defaults to THREADS.
    :return: The flat specification and the state encoder.
    :rtype: tuple[FlatSpec, StateEncoder]
    """
    settings = get_settings()
    prune = settings.PRUNE if prune is None else prune
    threads = settings.THREADS if threads is None else threads
    if not model.annotated:
        model = annotate_actions(model)

    stores = enumerate_stores(model)
    universe, init = _universe(model, stores)
    encoder = StateEncoder(universe)
    sources = [(name, store) for name in model.state_names for store in stores]
    actions = ActionEncoder(sources, encoder)

    def work(source: Source) -> list[Transition]:
        return translate_source(source, encoder, actions, model)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, sources))
    else:
        results = [work(source) for source in sources]

    definitions: dict[str, FlatExpr] = {}
    per_source: dict[Source, list[tuple[str, str]]] = {}
    for source, transitions in zip(sources, results):
        for transition in transitions:
            definitions[transition.action] = transition.definition
        per_source[source] = [(t.action, encoder.encode(t.target)) for t in transitions]
    equations = {encoder.encode(state): list(per_source[state.source]) for state in universe}

    index = encoder.index()
    dimension = len(universe)

    def live_actions() -> set[str]:
        return {
            name for name, definition in definitions.items()
            if definition != ZERO and not flat_to_quadform(definition, index, dimension).is_zero()
        }

    live = live_actions()
    names = encoder.names()
    initial = [encoder.encode(state) for state in init]
    kept = set(names)
    if prune:
        while True:
            reachable = _reachable(initial, equations, live)
            removed = kept - reachable
            if not removed:
                break
            kept = reachable
            definitions = {name: drop_states(definition, removed) for name, definition in definitions.items()}
            live = live_actions()
            logger.debug("pruned %d state(s), %d live action(s)", len(removed), len(live))

    states = [name for name in names if name in kept]
    flat_equations = {
        name: [(action, target) for action, target in equations[name] if action in live and target in kept]
        for name in states
    }
    used = {action for summands in flat_equations.values() for action, _ in summands}
    flat_actions = {name: definitions[name] for name in sorted(used)}
    spec = FlatSpec(states, flat_actions, flat_equations, {encoder.encode(s): n for s, n in init.items()})
    logger.info("translated into %d states and %d actions (prune=%s)", len(states), len(flat_actions), prune)
    return spec, encoder


def decode_state(name: str) -> dict[str, Union[str, dict[str, str]]]:
    """
    Splits an encoded state name into agent state, store and outbox text.
    """
    try:
        agent_state, store_tag, outbox_tag = name.split("@", 2)
    except ValueError:
        raise TranslationError(f"{name} is not an encoded state name") from None
    store = dict(item.split("=", 1) for item in store_tag.split("&")) if store_tag else {}
    return {"state": agent_state, "store": store, "outbox": outbox_tag}
