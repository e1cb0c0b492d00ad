# tests/test_translator.py

from fractions import Fraction

import pytest

from app.errors import StochasticityError, TranslationError
from app.models.flat import frc_states
from app.services.idtmc import build_matrix, check_stochasticity
from app.services.pipeline import compile_model
from app.services.poly import canonicalize
from app.services.translator import annotate_actions, decode_state, translate

from tests.conftest import DEFICIENT


def test_annotations_follow_source_order(si_model):
    annotations = [s.action.annotation for eq in si_model.ast.state_eqs for s in eq.summands]
    assert annotations == [1, 2, 3, 4]
    assert si_model.annotated


def test_annotation_is_idempotent(si_model):
    again = annotate_actions(si_model)
    assert again.ast == si_model.ast


def test_pruned_si_state_count(si_compiled):
    spec = si_compiled.spec
    # 36 reachable (state, store, outbox) triples plus the six initial states
    assert len(spec.states) == 42
    assert sum(name.endswith("@init") for name in spec.states) == 6
    assert spec.population == 100


def test_unpruned_si_state_count(si_model):
    spec, encoder = translate(si_model, prune=False, threads=1)
    # 8 (state, store) pairs times 13 outboxes (empty plus inf, nsc, rec from each of 4 sender stores),
    # plus the 6 initial states, which keep their own @init outbox
    assert len(spec.states) == 110
    assert sum(not name.endswith("@init") for name in spec.states) == 104
    assert len(encoder.universe) == 110


def test_state_names_decode(si_compiled):
    decoded = decode_state("I@loc=A@loc=C|false|inf")
    assert decoded == {"state": "I", "store": {"loc": "A"}, "outbox": "loc=C|false|inf"}
    for name in si_compiled.spec.states:
        assert si_compiled.encoder.encode(si_compiled.encoder.decode(name)) == name


def test_decode_rejects_foreign_names():
    with pytest.raises(TranslationError):
        decode_state("QSh")


def test_action_names_are_injective(si_compiled):
    spec = si_compiled.spec
    emitted = [action for summands in spec.equations.values() for action, _ in summands]
    assert set(emitted) == set(spec.actions)
    targets = {}
    for summands in spec.equations.values():
        for action, target in summands:
            targets.setdefault(action, set()).add(target)
    assert all(len(t) == 1 for t in targets.values())


def test_outbox_does_not_change_rows(si_compiled):
    spec = si_compiled.spec
    by_source = {}
    for name in spec.states:
        decoded = decode_state(name)
        key = (decoded["state"], tuple(decoded["store"].items()))
        by_source.setdefault(key, set()).add(tuple(spec.equations[name]))
    assert all(len(rows) == 1 for rows in by_source.values())


def test_threads_give_the_same_spec(si_model):
    single, _ = translate(si_model, prune=True, threads=1)
    several, _ = translate(si_model, prune=True, threads=4)
    assert single.states == several.states
    assert single.actions == several.actions
    assert single.equations == several.equations


def test_rows_are_stochastic(si_matrix, gossip_compiled):
    assert check_stochasticity(si_matrix) == []
    assert check_stochasticity(gossip_compiled.matrix) == []


def test_infection_probability_is_fraction_of_infected(si_matrix):
    source = si_matrix.index["S@loc=A@init"]
    target = si_matrix.index["I@loc=A@loc=A|false|inf"]
    infected = {i: Fraction(3, 5) for i, name in enumerate(si_matrix.states) if name.startswith("I@")}
    assert si_matrix.entry(source, target) == canonicalize(0, infected, (), si_matrix.dimension)


def test_input_waits_for_matching_output(gossip_compiled):
    spec, matrix = gossip_compiled.spec, gossip_compiled.matrix
    assert len(spec.states) == 22
    partners = {name for name in spec.states if name.endswith("|true|say")}
    # two say outboxes (one per sender store) on each of the four (state, store) pairs
    assert len(partners) == 8
    listen = "Listen@c=G@init"
    talk = "Talk@c=G@eps"
    entry = matrix.entry(listen, talk)
    assert entry == canonicalize(0, {matrix.index[p]: 1 for p in partners}, (), matrix.dimension)
    for action, target in spec.equations[listen]:
        if target == talk:
            assert frc_states(spec.actions[action]) == partners


def test_rest_takes_the_complement(gossip_compiled):
    matrix = gossip_compiled.matrix
    source = "Talk@c=R@init"
    rest = matrix.entry(source, "Listen@c=R@c=R|false|wait")
    assert rest.constant_value() == Fraction(1, 2)


def test_matrix_rebuild_matches(si_compiled):
    assert build_matrix(si_compiled.spec).entries == si_compiled.matrix.entries


REST_FIRST = """
attype Col enum R;
attribute c : Col;

state A {
    rest :: w*[false]<> . A
  + 1/2 :: go*[false]<> . B
}

state B {
    1 :: stay*[false]<> . B
}

init
  (A, c=R) * 1;
endinit
"""


@pytest.mark.parametrize("source", [REST_FIRST, REST_FIRST.replace(
    "rest :: w*[false]<> . A\n  + 1/2 :: go*[false]<> . B", "1/2 :: go*[false]<> . B\n  + rest :: w*[false]<> . A",
)])
def test_rest_complement_ignores_summand_order(source):
    matrix = compile_model(source, prune=True, threads=1).matrix
    assert check_stochasticity(matrix) == []
    row = "A@c=R@init"
    assert matrix.entry(row, "A@c=R@c=R|false|w").constant_value() == Fraction(1, 2)
    assert matrix.entry(row, "B@c=R@c=R|false|go").constant_value() == Fraction(1, 2)


FILTERED = """
attype Space enum A, B;
attribute loc : Space;

state Talk {
    1/2 :: say*[loc = B]<> . Talk
  + rest :: wait*[false]<> . Listen
}

state Listen {
    1 :: say*[loc = A]() . Talk
  + rest :: wait*[false]<> . Listen
}

init
  (Talk, loc=A) * 1;
  (Listen, loc=A) * 1;
  (Listen, loc=B) * 1;
endinit
"""


def test_input_partners_respect_both_predicates():
    compiled = compile_model(FILTERED, prune=False, threads=1)
    spec, matrix = compiled.spec, compiled.matrix
    say = [name for name in spec.states if name.endswith("|say")]
    assert say
    # the output predicate admits only receivers at B; the input predicate only senders at A
    partners = {name for name in say if decode_state(name)["outbox"].startswith("loc=A|")}
    assert partners and partners != set(say)
    entry = matrix.entry("Listen@loc=B@eps", "Talk@loc=B@eps")
    assert entry == canonicalize(0, {matrix.index[p]: 1 for p in partners}, (), matrix.dimension)
    for action, target in spec.equations["Listen@loc=B@eps"]:
        if target == "Talk@loc=B@eps":
            assert frc_states(spec.actions[action]) == partners
    assert matrix.entry("Listen@loc=A@eps", "Talk@loc=A@eps").is_zero()
    assert all(target != "Talk@loc=A@eps" for _, target in spec.equations["Listen@loc=A@eps"])
    assert check_stochasticity(matrix) == []


def test_non_stochastic_rows_fail_compilation():
    with pytest.raises(StochasticityError) as info:
        compile_model(DEFICIENT, prune=True, threads=1)
    assert {state for state, _ in info.value.rows} == {"A@c=R@init", "A@c=R@c=R|false|go"}
    assert all(d.severity == "error" and "row sums to" in d.message for d in info.value.diagnostics())
