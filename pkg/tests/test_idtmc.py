# tests/test_idtmc.py

from fractions import Fraction

import numpy as np
import pytest

from app.errors import MatrixBuildError
from app.models.flat import FFrc, FlatSpec, FNum, FProd, FSub
from app.services.idtmc import (
    PolyMatrix, build_matrix, check_stochasticity, class_row_sum, eval_matrix, flat_to_quadform,
)
from app.services.poly import QuadForm


def _two_state_spec() -> FlatSpec:
    return FlatSpec(
        ["a", "b"],
        {"go": FFrc("b"), "stay": FSub(FNum(Fraction(1)), FFrc("b")), "back": FNum(Fraction(1))},
        {"a": [("go", "b"), ("stay", "a")], "b": [("back", "a")]},
        {"a": 3, "b": 1},
    )


def test_build_matrix_and_init():
    M = build_matrix(_two_state_spec())
    assert M.states == ("a", "b")
    assert M.entry("a", "b") == QuadForm.variable(1, 2)
    assert M.entry("a", "a") == QuadForm.variable(0, 2)
    assert M.init == {"a": Fraction(3, 4), "b": Fraction(1, 4)}
    assert M.population == 4
    assert check_stochasticity(M) == []


def test_unknown_state_in_frc():
    spec = FlatSpec(["a"], {"x": FFrc("zz")}, {"a": [("x", "a")]})
    with pytest.raises(MatrixBuildError, match="x"):
        build_matrix(spec)


def test_undefined_action():
    spec = FlatSpec(["a"], {}, {"a": [("x", "a")]})
    with pytest.raises(MatrixBuildError, match="no probability definition"):
        build_matrix(spec)


def test_degree_three_is_rejected():
    cube = FProd((FFrc("a"), FFrc("a"), FFrc("b")))
    spec = FlatSpec(["a", "b"], {"x": cube}, {"a": [("x", "b")]})
    with pytest.raises(MatrixBuildError, match="action x"):
        build_matrix(spec)


def test_quadratic_flat_expression():
    index = {"a": 0, "b": 1}
    form = flat_to_quadform(FProd((FFrc("a"), FFrc("b"))), index, 2)
    assert form.as_dict() == {(0, 1): 1}


def test_row_deficit_is_reported():
    spec = FlatSpec(["a", "b"], {"half": FNum(Fraction(1, 2))}, {"a": [("half", "b")], "b": [("half", "a")]})
    diagnostics = check_stochasticity(build_matrix(spec))
    assert [d.state for d in diagnostics] == ["a", "b"]
    assert diagnostics[0].deficit == QuadForm.constant(Fraction(1, 2), 2)


def test_negative_entry_is_found_by_sampling():
    # 1 - 2*frc(b) is negative near the vertex b
    negative = FSub(FNum(Fraction(1)), FProd((FNum(Fraction(2)), FFrc("b"))))
    spec = FlatSpec(
        ["a", "b"],
        {"x": negative, "y": FProd((FNum(Fraction(2)), FFrc("b"))), "z": FNum(Fraction(1))},
        {"a": [("x", "a"), ("y", "b")], "b": [("z", "b")]},
    )
    diagnostics = check_stochasticity(build_matrix(spec), sample_points=16, seed=1)
    assert any("negative" in d.message for d in diagnostics)


def test_negative_coefficient_but_nonnegative_entry():
    # m_a^2 - m_a*m_b + m_b^2 stays above 1/4 on the simplex
    dip = QuadForm.from_mapping({(0, 0): 1, (0, 1): -1, (1, 1): 1}, 2)
    rest = QuadForm.constant(1, 2) - dip
    M = PolyMatrix(("a", "b"), {(0, 0): dip, (0, 1): rest, (1, 1): QuadForm.constant(1, 2)})
    assert check_stochasticity(M, sample_points=32, seed=3) == []


def test_eval_matrix_exact_and_float():
    M = build_matrix(_two_state_spec())
    exact = eval_matrix(M, [Fraction(3, 4), Fraction(1, 4)], exact=True)
    assert exact == [[Fraction(3, 4), Fraction(1, 4)], [Fraction(1), Fraction(0)]]
    numeric = eval_matrix(M, [0.75, 0.25])
    assert np.allclose(numeric, [[0.75, 0.25], [1.0, 0.0]], atol=1e-15)


def test_class_row_sum_by_name_and_index(si_matrix):
    source = si_matrix.index["S@loc=A@init"]
    everything = class_row_sum(si_matrix, source, range(si_matrix.dimension))
    assert everything == QuadForm.constant(1, si_matrix.dimension)
    infected = [name for name in si_matrix.states if name.startswith("I@")]
    assert class_row_sum(si_matrix, "S@loc=A@init", infected) == class_row_sum(
        si_matrix, source, [si_matrix.index[name] for name in infected]
    )


def test_identity_and_occupancy():
    M = PolyMatrix.identity(["x", "y"])
    assert check_stochasticity(M) == []
    assert M.occupancy({"y": 1}) == [0, 1]
    with pytest.raises(MatrixBuildError):
        M.occupancy({"w": 1})
