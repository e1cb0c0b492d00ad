# tests/test_labels.py

import pytest

from app.errors import LabelError
from app.services.labels import AttrIn, holds, label_states, pair_labels, parse_label_file

from tests.conftest import read_sample


def test_parse_sample_files():
    assert parse_label_file(read_sample("si.lbl")).names == ["Sh", "Sl", "Ih", "Il"]
    assert parse_label_file(read_sample("hl.lbl")).names == ["h", "l"]
    assert len(parse_label_file(read_sample("pairs.lbl")).definitions) == 8


def test_syntax_error():
    with pytest.raises(LabelError, match="label file"):
        parse_label_file("h := loc in {A, C")


def test_repeated_name():
    with pytest.raises(LabelError, match="defined twice"):
        parse_label_file("h := true\nh := false\n")


@pytest.mark.parametrize("state, loc, expected", [
    ("S", "A", False),
    ("S", "B", True),
    ("I", "A", True),
])
def test_not_binds_tighter_than_or(state, loc, expected):
    predicate = parse_label_file("x := not state in {S} or loc != A").definitions[0].predicate
    assert holds(predicate, state, {"loc": loc}) is expected


def test_unknown_attribute():
    with pytest.raises(LabelError, match="zone"):
        holds(AttrIn("zone", frozenset({"A"})), "S", {"loc": "A"})


def test_every_flat_state_gets_one_class(si_matrix, si_labels):
    assert all(len(props) == 1 for props in si_labels.values())
    assert si_labels["S@loc=A@init"] == frozenset({"Sh"})
    assert si_labels["I@loc=A@loc=A|false|inf"] == frozenset({"Ih"})
    assert set(si_labels) == set(si_matrix.states)


def test_pair_labels(si_matrix):
    labels = pair_labels(si_matrix)
    assert labels["S@loc=A@init"] == frozenset({"SA"})
    assert {next(iter(props)) for props in labels.values()} == {
        "SA", "SB", "SC", "SD", "IA", "IB", "IC", "ID",
    }


def test_reduced_states_are_labelled_through_members(si_reduced):
    labels = label_states(parse_label_file(read_sample("si.lbl")), si_reduced.matrix)
    assert labels == {name: frozenset({name[1:]}) for name in si_reduced.matrix.states}


def test_members_must_agree(si_reduced):
    # QSh holds agents at A and at C
    with pytest.raises(LabelError, match="not constant"):
        label_states(parse_label_file("atA := loc = A"), si_reduced.matrix)
