# tests/test_semantics.py

from fractions import Fraction

import pytest

from app.errors import ValidationError
from app.models.ast import Call, MyAttr
from app.models.states import EMPTY, OutputOutbox, Store
from app.services.frontend import parse_source
from app.services.semantics import (
    enumerate_component_states, enumerate_outboxes, enumerate_stores, eval_local, eval_update,
)
from app.services.validation import validate_model


def _store(loc: str) -> Store:
    return Store.of({"loc": loc}, ("loc",))


def test_stores_follow_declaration_order(si_model):
    assert [s.tag() for s in enumerate_stores(si_model)] == ["loc=A", "loc=B", "loc=C", "loc=D"]


def test_outboxes(si_model):
    outboxes = enumerate_outboxes(si_model)
    assert outboxes[0] is EMPTY
    # three output labels with predicate false from each of four stores
    assert len(outboxes) == 13
    assert OutputOutbox(_store("B"), False, "rec") in outboxes


def test_component_states(si_model):
    states = enumerate_component_states(si_model)
    assert len(states) == 104
    assert len(set(states)) == 104


@pytest.mark.parametrize("loc, expected", [
    ("A", {"A": Fraction(3, 5), "D": Fraction(1, 5), "B": Fraction(1, 5)}),
    ("B", {"B": Fraction(2, 5), "C": Fraction(3, 10), "A": Fraction(3, 10)}),
    ("D", {"D": Fraction(2, 5), "A": Fraction(3, 10), "C": Fraction(3, 10)}),
])
def test_jump_distribution(si_model, loc, expected):
    distribution = eval_update("Jump", _store(loc), si_model)
    assert {store["loc"]: p for store, p in distribution.items()} == expected
    assert sum(distribution.values()) == 1


def test_identity_update(si_model):
    assert eval_update(None, _store("C"), si_model) == {_store("C"): Fraction(1)}


def test_case_table_lookup(si_model):
    assert eval_local(Call("N", (MyAttr("loc"),)), _store("C"), si_model) == "B"
    assert eval_local(Call("pHr", (MyAttr("loc"),)), _store("B"), si_model) == Fraction(2, 5)


def test_update_must_sum_to_one():
    source = """
attype Space enum A, B;
attribute loc : Space;
update Bad
  my.loc := A with 1/2;
  my.loc := B with 1/4
endupdate
state S { 1 :: go*[true]<> Bad . S }
init (S, loc=A) * 1; endinit
"""
    with pytest.raises(ValidationError) as info:
        validate_model(parse_source(source))
    assert any("sum to 3/4" in d.message for d in info.value.diagnostics())
