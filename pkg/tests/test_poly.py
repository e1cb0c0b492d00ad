# tests/test_poly.py

import random
from fractions import Fraction

import pytest

from app.errors import DegreeOverflowError, DimensionMismatchError, SimplexDomainError
from app.services.poly import (
    QuadForm, canonicalize, check_simplex, equal_on_simplex, poly_arith, poly_eval, poly_from_json, poly_to_json,
    sum_forms,
)


def test_constant_is_homogenized():
    one = QuadForm.constant(1, 2)
    assert one.as_dict() == {(0, 0): 1, (0, 1): 2, (1, 1): 1}


def test_variables_sum_to_one_on_simplex():
    total = QuadForm.variable(0, 3) + QuadForm.variable(1, 3) + QuadForm.variable(2, 3)
    assert total == QuadForm.constant(1, 3)
    assert equal_on_simplex(total, QuadForm.constant(1, 3))


def test_complement_equals_other_variable():
    assert QuadForm.constant(1, 2) - QuadForm.variable(0, 2) == QuadForm.variable(1, 2)


def test_product_of_variables():
    product = QuadForm.variable(0, 2) * QuadForm.variable(1, 2)
    assert product.as_dict() == {(0, 1): 1}
    assert product.affine_coefficients() is None


def test_product_with_constant_scales():
    form = QuadForm.constant(Fraction(1, 2), 3) * QuadForm.variable(2, 3)
    assert form == QuadForm.linear({2: Fraction(1, 2)}, 3)


def test_degree_overflow():
    square = QuadForm.variable(0, 2) * QuadForm.variable(0, 2)
    with pytest.raises(DegreeOverflowError):
        square * QuadForm.variable(1, 2)


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        QuadForm.variable(0, 2) + QuadForm.variable(0, 3)
    with pytest.raises(DimensionMismatchError):
        canonicalize(0, {3: 1}, (), 2)


def test_poly_arith_entry_point():
    m0 = QuadForm.variable(0, 2)
    assert poly_arith("add", m0, 1) == m0 + QuadForm.constant(1, 2)
    assert poly_arith("scale", m0, 3) == QuadForm.linear({0: 3}, 2)
    with pytest.raises(ValueError):
        poly_arith("pow", m0, 2)


def test_exact_and_float_evaluation():
    form = canonicalize(Fraction(1, 10), {0: Fraction(1, 2)}, [(0, 1, 3)], 2)
    point = [Fraction(1, 4), Fraction(3, 4)]
    exact = poly_eval(form, point)
    assert exact == Fraction(1, 10) + Fraction(1, 8) + 3 * Fraction(3, 16)
    assert poly_eval(form, [0.25, 0.75]) == pytest.approx(float(exact), abs=1e-15)


def test_simplex_domain():
    with pytest.raises(SimplexDomainError):
        check_simplex([Fraction(1, 2), Fraction(1, 3)], 2)
    with pytest.raises(SimplexDomainError):
        check_simplex([0.5, 0.5], 3)
    with pytest.raises(SimplexDomainError):
        check_simplex([1.5, -0.5], 2)
    assert check_simplex([Fraction(1), 0], 2) is True
    assert check_simplex([0.5, 0.5], 2) is False


def test_sum_forms_matches_repeated_addition():
    forms = [QuadForm.variable(i % 3, 3).scale(i + 1) for i in range(5)]
    total = forms[0]
    for form in forms[1:]:
        total = total + form
    assert sum_forms(forms, 3) == total


def test_json_layout_is_one_based():
    data = poly_to_json(QuadForm.variable(1, 2))
    assert data == {"S": 2, "quad": [[1, 2, "1"], [2, 2, "1"]]}
    assert poly_from_json(data) == QuadForm.variable(1, 2)


# --- equality on the simplex against evaluation ---
def _random_raw(rng: random.Random, dimension: int):
    constant = Fraction(rng.randint(-3, 3), rng.randint(1, 4))
    linear = {i: Fraction(rng.randint(-3, 3), rng.randint(1, 4)) for i in range(dimension) if rng.random() < 0.6}
    quad = [
        (i, j, Fraction(rng.randint(-3, 3), rng.randint(1, 4)))
        for i in range(dimension) for j in range(i, dimension) if rng.random() < 0.4
    ]
    return constant, linear, quad


def _simplex_points(dimension: int, rng: random.Random, extra: int):
    points = []
    for i in range(dimension):
        points.append([Fraction(int(k == i)) for k in range(dimension)])
        for j in range(i + 1, dimension):
            points.append([Fraction(1, 2) if k in (i, j) else Fraction(0) for k in range(dimension)])
    for _ in range(extra):
        weights = [rng.randint(0, 20) for _ in range(dimension)]
        if not any(weights):
            weights[0] = 1
        total = sum(weights)
        points.append([Fraction(w, total) for w in weights])
    return points


def _raw_value(raw, point) -> Fraction:
    constant, linear, quad = raw
    value = constant + sum((h * point[i] for i, h in linear.items()), Fraction(0))
    return value + sum((u * point[i] * point[j] for i, j, u in quad), Fraction(0))


def test_equality_agrees_with_evaluation():
    rng = random.Random(20240611)
    discrepancies = 0
    for n in range(1000):
        dimension = rng.randint(1, 6)
        raw_a = _random_raw(rng, dimension)
        if n % 2:
            # same polynomial on the simplex: move a constant k into the linear part
            constant, linear, quad = raw_a
            k = Fraction(rng.randint(-3, 3), rng.randint(1, 3))
            raw_b = (constant + k, {i: linear.get(i, Fraction(0)) - k for i in range(dimension)}, quad)
        else:
            raw_b = _random_raw(rng, dimension)
        a, b = canonicalize(*raw_a, dimension), canonicalize(*raw_b, dimension)
        points = _simplex_points(dimension, rng, extra=100)
        agree = all(_raw_value(raw_a, p) == _raw_value(raw_b, p) for p in points)
        if equal_on_simplex(a, b) != agree:
            discrepancies += 1
        if equal_on_simplex(a, b):
            assert all(poly_eval(a, p) == _raw_value(raw_a, p) for p in points[:dimension])
    assert discrepancies == 0
