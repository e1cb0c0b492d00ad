# tests/test_bisim.py

import logging
import random
from fractions import Fraction

import pytest

from app.errors import NotLumpableError
from app.services.analysis import block_map
from app.services.bisim import (
    Partition, block_names, initial_partition, quotient_model, reduce_matrix, refine_partition, rewrite_in_classes,
)
from app.services.idtmc import PolyMatrix, class_row_sum, eval_matrix
from app.services.labels import label_states, parse_label_file
from app.services.poly import QuadForm, canonicalize

from tests.conftest import read_sample


def _linear(M: PolyMatrix, names, weight) -> QuadForm:
    return canonicalize(0, {M.index[n]: weight for n in names}, (), M.dimension)


# --- SI model ---
def test_pair_labels_give_eight_blocks(si_pairs):
    reduced = si_pairs.matrix
    assert reduced.states == ("QSA", "QSB", "QSC", "QSD", "QIA", "QIB", "QIC", "QID")
    assert len(si_pairs.partition) == 8


def test_eight_state_matrix_entries(si_pairs):
    R = si_pairs.matrix
    infected = ["QIA", "QIB", "QIC", "QID"]
    susceptible = ["QSA", "QSB", "QSC", "QSD"]
    assert R.entry("QSA", "QIA") == _linear(R, infected, Fraction(3, 5))
    assert R.entry("QSA", "QID") == _linear(R, infected, Fraction(1, 5))
    assert R.entry("QSA", "QSA") == _linear(R, susceptible, Fraction(3, 5))
    assert R.entry("QSB", "QSC") == _linear(R, susceptible, Fraction(3, 10))
    assert R.entry("QSA", "QSC").is_zero()
    assert R.entry("QIA", "QIA") == QuadForm.constant(Fraction(12, 25), 8)
    assert R.entry("QIA", "QSB") == QuadForm.constant(Fraction(1, 25), 8)
    for r in range(R.dimension):
        assert class_row_sum(R, r, range(R.dimension)) == QuadForm.constant(1, 8)


def test_pair_quotient_keeps_population(si_pairs):
    R = si_pairs.matrix
    assert R.population == 100
    assert R.init == {
        "QSA": Fraction(2, 5), "QSB": Fraction(1, 10), "QSC": Fraction(3, 10), "QSD": Fraction(1, 10),
        "QIA": Fraction(1, 20), "QIC": Fraction(1, 20),
    }


def test_location_classes_give_four_blocks(si_reduced):
    R = si_reduced.matrix
    assert R.states == ("QSh", "QSl", "QIh", "QIl")
    assert R.entry("QSh", "QIh") == _linear(R, ["QIh", "QIl"], Fraction(3, 5))
    assert R.entry("QSh", "QSl") == _linear(R, ["QSh", "QSl"], Fraction(2, 5))
    assert R.entry("QIl", "QIh") == QuadForm.constant(Fraction(12, 25), 4)
    assert R.entry("QIh", "QSl") == QuadForm.constant(Fraction(2, 25), 4)


def test_reducing_the_eight_state_model(si_pairs):
    labels = label_states(parse_label_file(read_sample("si.lbl")), si_pairs.matrix)
    quotient = reduce_matrix(si_pairs.matrix, labels)
    assert quotient.blocks() == [
        ("QSh", ["QSA", "QSC"]), ("QSl", ["QSB", "QSD"]), ("QIh", ["QIA", "QIC"]), ("QIl", ["QIB", "QID"]),
    ]


def test_two_step_and_direct_reduction_agree(si_pairs, si_reduced):
    labels = label_states(parse_label_file(read_sample("si.lbl")), si_pairs.matrix)
    assert reduce_matrix(si_pairs.matrix, labels).matrix.entries == si_reduced.matrix.entries


def test_location_labels_give_constant_rows(si_matrix, hl_labels):
    quotient = reduce_matrix(si_matrix, hl_labels)
    R = quotient.matrix
    assert R.states == ("Qh", "Ql")
    for source in R.states:
        assert R.entry(source, "Qh").constant_value() == Fraction(3, 5)
        assert R.entry(source, "Ql").constant_value() == Fraction(2, 5)


def test_members_point_back_to_flat_states(si_matrix, si_reduced):
    members = si_reduced.matrix.members
    assert sum(len(m) for m in members.values()) == si_matrix.dimension
    assert all(name.startswith("S@") for name in members["QSh"])


# --- small cases ---
def test_initial_partition_groups_equal_labels():
    labels = {"a": frozenset({"p"}), "b": frozenset(), "c": frozenset({"p"})}
    assert initial_partition(labels).blocks == ((0, 2), (1,))
    assert initial_partition(labels, ["c", "b", "a", "d"]).blocks == ((0, 2), (1, 3))


def test_rewrite_rejects_non_aggregate_forms():
    square = QuadForm.variable(0, 2) * QuadForm.variable(0, 2)
    with pytest.raises(NotLumpableError) as info:
        rewrite_in_classes(square, Partition.of([[0, 1]]))
    assert info.value.first == (0, 0)


def test_rewrite_over_blocks():
    form = canonicalize(0, {0: 1, 1: 1}, (), 3)
    assert rewrite_in_classes(form, Partition.of([[0, 1], [2]])) == QuadForm.variable(0, 2)


def test_quotient_rejects_non_lumpable_partition():
    one = QuadForm.constant(1, 3)
    M = PolyMatrix(("x", "y", "z"), {(0, 2): one, (1, 1): one, (2, 2): one})
    with pytest.raises(NotLumpableError):
        quotient_model(M, {}, Partition.of([[0, 1], [2]]))
    # every row sums to 1, so the trivial partition is already lumpable
    assert len(refine_partition(M, {})) == 1
    labels = {"x": frozenset({"p"}), "y": frozenset({"p"}), "z": frozenset({"q"})}
    assert refine_partition(M, labels) == Partition.discrete(3)


def test_splitters_are_taken_in_ascending_block_id(caplog):
    one = QuadForm.constant(1, 4)
    M = PolyMatrix(("s0", "s1", "s2", "s3"), {(0, 0): one, (1, 2): one, (2, 2): one, (3, 3): one})
    labels = {"s0": frozenset({"a"}), "s1": frozenset({"a"}), "s2": frozenset({"b"}), "s3": frozenset({"c"})}
    caplog.set_level(logging.DEBUG, logger="app.services.bisim")
    assert refine_partition(M, labels) == Partition.discrete(4)
    splitters = [record.args[1] for record in caplog.records if record.msg == "round %d: splitter %d"]
    # block 0 splits into 0 and 3 on the first round and is taken again before 1
    assert splitters == [0, 0, 1, 2, 3]


def test_block_names_disambiguate():
    labels = {"a": frozenset({"p"}), "b": frozenset({"p"}), "c": frozenset()}
    names = block_names(["a", "b", "c"], Partition.of([[0], [1], [2]]), labels)
    assert names == ["Qp", "Qp_2", "Q3"]


# --- refinement against a brute-force fixpoint ---
def _oracle(M: PolyMatrix, labels) -> Partition:
    blocks = list(initial_partition(labels, M.states).blocks)
    while True:
        signature = {}
        for b, block in enumerate(blocks):
            for z in block:
                key = (b, tuple(class_row_sum(M, z, target).terms for target in blocks))
                signature.setdefault(key, []).append(z)
        refined = list(Partition.of(signature.values()).blocks)
        if len(refined) == len(blocks):
            return Partition.of(refined)
        blocks = refined


def _random_instance(rng: random.Random):
    size = rng.randint(1, 6)
    kinds = [rng.randint(0, 2) for _ in range(size)]
    groups = {k: [z for z in range(size) if kinds[z] == k] for k in set(kinds)}
    entries: dict[tuple[int, int], QuadForm] = {}
    totals = {}
    for z in range(size):
        for u, targets in groups.items():
            if (kinds[z], u) not in totals:
                constant = Fraction(rng.randint(0, 4), 8)
                weight = Fraction(rng.randint(0, 2), 4) if rng.random() < 0.5 else Fraction(0)
                aggregate = rng.choice(list(groups))
                totals[(kinds[z], u)] = (constant, weight, aggregate)
            constant, weight, aggregate = totals[(kinds[z], u)]
            # split the class total unevenly over the targets of the group
            shares = [rng.randint(1, 3) for _ in targets]
            for target, share in zip(targets, shares):
                part = Fraction(share, sum(shares))
                form = canonicalize(constant * part, {w: weight * part for w in groups[aggregate]}, (), size)
                if not form.is_zero():
                    entries[(z, target)] = form
    if rng.random() < 0.3 and size > 1:
        # a perturbation that usually breaks lumpability of the kinds
        z = rng.randrange(size)
        entries[(z, z)] = entries.get((z, z), QuadForm.zero(size)) + QuadForm.constant(Fraction(1, 16), size)
    states = tuple(f"s{z}" for z in range(size))
    coarse = rng.random() < 0.5
    labels = {
        states[z]: frozenset({f"k{kinds[z] % 2}"}) if coarse else frozenset({f"k{kinds[z]}"})
        for z in range(size)
    }
    return PolyMatrix(states, entries), labels, kinds


def test_refinement_matches_fixpoint_oracle():
    rng = random.Random(7)
    for _ in range(200):
        M, labels, kinds = _random_instance(rng)
        assert refine_partition(M, labels) == _oracle(M, labels)


def test_refinement_is_no_finer_than_a_lumpable_partition():
    rng = random.Random(11)
    checked = 0
    for _ in range(200):
        M, labels, kinds = _random_instance(rng)
        by_kind = Partition.of([[z for z in range(M.dimension) if kinds[z] == k] for k in set(kinds)])
        try:
            quotient_model(M, labels, by_kind)
        except NotLumpableError:
            continue
        if any(len({labels[M.states[z]] for z in block}) > 1 for block in by_kind.blocks):
            continue
        refined = refine_partition(M, labels)
        for block in by_kind.blocks:
            assert len({refined.block_of[z] for z in block}) == 1
        checked += 1
    assert checked > 20


# --- the quotient commutes with one mean-field step, in exact rationals ---
def _step(M: PolyMatrix, mu) -> list[Fraction]:
    K = eval_matrix(M, mu, exact=True)
    return [sum((mu[i] * K[i][j] for i in range(M.dimension)), Fraction(0)) for j in range(M.dimension)]


def _lump(mu, full: PolyMatrix, reduced: PolyMatrix) -> list[Fraction]:
    owner = block_map(full, reduced)
    lumped = [Fraction(0)] * reduced.dimension
    for i, state in enumerate(full.states):
        lumped[reduced.index[owner[state]]] += mu[i]
    return lumped


def _random_occupancy(dimension: int, rng: random.Random) -> list[Fraction]:
    weights = [rng.randint(0, 9) for _ in range(dimension)]
    weights[rng.randrange(dimension)] += 1
    return [Fraction(w, sum(weights)) for w in weights]


@pytest.mark.parametrize("quotient", ["si_reduced", "si_pairs"])
def test_quotient_step_is_exact(quotient, si_matrix, request):
    reduced = request.getfixturevalue(quotient).matrix
    rng = random.Random(3)
    for mu in (si_matrix.occupancy(si_matrix.init), _random_occupancy(si_matrix.dimension, rng)):
        assert _lump(_step(si_matrix, mu), si_matrix, reduced) == _step(reduced, _lump(mu, si_matrix, reduced))
