# app/services/poly.py

"""
Exact degree-2 forms over occupancy variables m_0..m_{S-1}.

Every form is kept fully homogeneous: a constant c is stored as
c*(sum m)^2 and a linear term h_i*m_i as h_i*m_i*(sum m). On the unit
simplex this changes nothing, and two homogeneous forms agree on the
simplex exactly when their coefficients agree, so equality is a
dictionary comparison.
"""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from app.errors import DegreeOverflowError, DimensionMismatchError, SimplexDomainError

Rational = Union[int, Fraction]
Pair = tuple[int, int]


def _pair(i: int, j: int) -> Pair:
    return (i, j) if i <= j else (j, i)


@dataclass(frozen=True)
class QuadForm:
    """
    Canonical homogeneous quadratic form.

    ``terms`` holds ((i, j), coefficient) with i <= j, sorted, zeros omitted.
    ``degree`` is the degree of the raw polynomial the form was built
    from (0, 1 or 2). It only steers multiplication and is not part of
    equality.
    """
    dimension: int
    terms: tuple[tuple[Pair, Fraction], ...] = ()
    degree: int = field(default=2, compare=False)

    # --- construction helpers ---
    @classmethod
    def from_mapping(cls, coefficients: Mapping[Pair, Rational], dimension: int, degree: int = 2) -> "QuadForm":
        merged: dict[Pair, Fraction] = {}
        for (i, j), value in coefficients.items():
            if not (0 <= i < dimension and 0 <= j < dimension):
                raise DimensionMismatchError(f"index ({i}, {j}) outside dimension {dimension}")
            key = _pair(i, j)
            merged[key] = merged.get(key, Fraction(0)) + Fraction(value)
        terms = tuple(sorted((k, v) for k, v in merged.items() if v != 0))
        return cls(dimension, terms, degree if terms else 0)

    @classmethod
    def zero(cls, dimension: int) -> "QuadForm":
        return cls(dimension, (), 0)

    @classmethod
    def constant(cls, value: Rational, dimension: int) -> "QuadForm":
        return canonicalize(value, (), (), dimension)

    @classmethod
    def variable(cls, index: int, dimension: int) -> "QuadForm":
        return canonicalize(0, {index: 1}, (), dimension)

    @classmethod
    def linear(cls, coefficients: Mapping[int, Rational], dimension: int) -> "QuadForm":
        return canonicalize(0, coefficients, (), dimension)

    # --- accessors ---
    def as_dict(self) -> dict[Pair, Fraction]:
        return dict(self.terms)

    def coefficient(self, i: int, j: int) -> Fraction:
        return self.as_dict().get(_pair(i, j), Fraction(0))

    def is_zero(self) -> bool:
        return not self.terms

    def diagonal(self) -> list[Fraction]:
        """
        Diagonal coefficients. For a form of degree <= 1 these are the
        coefficients h_i of the affine polynomial sum h_i*m_i it came from.
        """
        coefficients = self.as_dict()
        return [coefficients.get((i, i), Fraction(0)) for i in range(self.dimension)]

    def affine_coefficients(self) -> Optional[list[Fraction]]:
        """
        Returns h with u_ij = h_i + h_j for all i < j if the form is affine
        on the simplex, otherwise None.
        """
        h = self.diagonal()
        coefficients = self.as_dict()
        for i in range(self.dimension):
            for j in range(i + 1, self.dimension):
                if coefficients.get((i, j), Fraction(0)) != h[i] + h[j]:
                    return None
        return h

    def constant_value(self) -> Optional[Fraction]:
        """The value of the form if it is constant on the simplex."""
        h = self.affine_coefficients()
        if h is None:
            return None
        if not h:
            return Fraction(0)
        return h[0] if all(value == h[0] for value in h) else None

    # --- arithmetic ---
    def _check(self, other: "QuadForm") -> None:
        if self.dimension != other.dimension:
            raise DimensionMismatchError(f"dimension {self.dimension} != {other.dimension}")

    def __add__(self, other: "QuadForm") -> "QuadForm":
        self._check(other)
        merged = self.as_dict()
        for key, value in other.terms:
            merged[key] = merged.get(key, Fraction(0)) + value
        return QuadForm.from_mapping(merged, self.dimension, max(self.degree, other.degree))

    def __neg__(self) -> "QuadForm":
        return self.scale(-1)

    def __sub__(self, other: "QuadForm") -> "QuadForm":
        return self + (-other)

    def scale(self, factor: Rational) -> "QuadForm":
        factor = Fraction(factor)
        if factor == 0:
            return QuadForm.zero(self.dimension)
        return QuadForm(self.dimension, tuple((k, v * factor) for k, v in self.terms), self.degree)

    def __mul__(self, other: "QuadForm") -> "QuadForm":
        self._check(other)
        if self.is_zero() or other.is_zero():
            return QuadForm.zero(self.dimension)
        if self.degree == 0:
            return other.scale(self.diagonal()[0])
        if other.degree == 0:
            return self.scale(other.diagonal()[0])
        if self.degree + other.degree > 2:
            raise DegreeOverflowError(
                f"product of degree {self.degree} and degree {other.degree} terms exceeds 2"
            )
        h, g = self.diagonal(), other.diagonal()
        coefficients: dict[Pair, Fraction] = {}
        # (sum h_i m_i)(sum g_j m_j): h_i*g_j lands on u_{min(i,j),max(i,j)}
        for i in (k for k, value in enumerate(h) if value != 0):
            for j in (k for k, value in enumerate(g) if value != 0):
                key = _pair(i, j)
                coefficients[key] = coefficients.get(key, Fraction(0)) + h[i] * g[j]
        return QuadForm.from_mapping(coefficients, self.dimension, 2)

    def __str__(self) -> str:
        if not self.terms:
            return "0"
        return " + ".join(f"{v}*m{i + 1}*m{j + 1}" for (i, j), v in self.terms)


def canonicalize(constant: Rational, linear: Union[Mapping[int, Rational], Sequence[Rational]],
                 quad: Union[Mapping[Pair, Rational], Iterable[tuple[int, int, Rational]]],
                 dimension: int) -> QuadForm:
    """
    Homogenizes ``constant + sum h_i m_i + sum u_ij m_i m_j``.

    :param constant: Constant part.
    :param linear: Linear coefficients, as a mapping index -> h_i or a list.
    :param quad: Quadratic coefficients, as a mapping (i, j) -> u or (i, j, u) triples.
    :param dimension: Number of variables S.
    :return: The canonical form equal to the input on the simplex.
    :rtype: QuadForm
    """
    if not isinstance(linear, Mapping):
        linear = dict(enumerate(linear))
    if isinstance(quad, Mapping):
        quad_items = [(i, j, u) for (i, j), u in quad.items()]
    else:
        quad_items = list(quad)
    c = Fraction(constant)
    coefficients: dict[Pair, Fraction] = {}

    def bump(i: int, j: int, value: Fraction) -> None:
        if not (0 <= i < dimension and 0 <= j < dimension):
            raise DimensionMismatchError(f"index ({i}, {j}) outside dimension {dimension}")
        key = _pair(i, j)
        coefficients[key] = coefficients.get(key, Fraction(0)) + value

    if c != 0:
        for i in range(dimension):
            bump(i, i, c)
            for j in range(i + 1, dimension):
                bump(i, j, 2 * c)
    # h_i m_i (sum_j m_j) contributes h_i to u_ii and to every u_ij, j != i
    for i, h in linear.items():
        h = Fraction(h)
        if h == 0:
            continue
        for j in range(dimension):
            bump(i, j, h)
    for i, j, u in quad_items:
        bump(i, j, Fraction(u))

    if any(Fraction(u) != 0 for _, _, u in quad_items):
        degree = 2
    elif any(Fraction(h) != 0 for h in linear.values()):
        degree = 1
    else:
        degree = 0
    return QuadForm.from_mapping(coefficients, dimension, degree)


def poly_arith(op: str, a: QuadForm, b: Union[QuadForm, Rational]) -> QuadForm:
    """
    Arithmetic entry point: ``add``, ``sub``, ``mul`` between forms and
    ``scale`` of a form by a rational.
    """
    if op == "scale":
        return a.scale(b)
    if not isinstance(b, QuadForm):
        b = QuadForm.constant(b, a.dimension)
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown polynomial operation {op!r}")


def check_simplex(m: Sequence, dimension: int, tolerance: float = 1e-12) -> bool:
    """
    Validates an occupancy vector; returns True if it is exact (rational).

    :raises SimplexDomainError: when the vector is off the simplex.
    """
    if len(m) != dimension:
        raise SimplexDomainError(f"vector of length {len(m)} for dimension {dimension}")
    exact = all(isinstance(x, (int, Fraction)) for x in m)
    if exact:
        if any(x < 0 for x in m) or sum(m, Fraction(0)) != 1:
            raise SimplexDomainError(f"vector {list(map(str, m))} is not on the simplex")
        return True
    values = np.asarray(m, dtype=float)
    if values.min(initial=0.0) < -tolerance or abs(values.sum() - 1.0) > tolerance * max(1, dimension):
        raise SimplexDomainError(f"vector with sum {values.sum()!r} is not on the simplex")
    return False


def poly_eval(a: QuadForm, m: Sequence, tolerance: float = 1e-12):
    """
    Evaluates ``sum u_ij m_i m_j``; exact when every entry of ``m`` is an
    int or Fraction, float otherwise.
    """
    exact = check_simplex(m, a.dimension, tolerance)
    total = Fraction(0) if exact else 0.0
    for (i, j), u in a.terms:
        total += (u if exact else float(u)) * m[i] * m[j]
    return total


def equal_on_simplex(a: QuadForm, b: QuadForm) -> bool:
    """
    True iff ``a`` and ``b`` agree at every point of the simplex.
    """
    if a.dimension != b.dimension:
        raise DimensionMismatchError(f"dimension {a.dimension} != {b.dimension}")
    return a.terms == b.terms


def sum_forms(forms: Iterable[QuadForm], dimension: int) -> QuadForm:
    merged: dict[Pair, Fraction] = {}
    degree = 0
    for form in forms:
        if form.dimension != dimension:
            raise DimensionMismatchError(f"dimension {form.dimension} != {dimension}")
        degree = max(degree, form.degree)
        for key, value in form.terms:
            merged[key] = merged.get(key, Fraction(0)) + value
    return QuadForm.from_mapping(merged, dimension, degree)


# --- Serialization ---
def poly_to_json(a: QuadForm) -> dict:
    return {"S": a.dimension, "quad": [[i + 1, j + 1, str(v)] for (i, j), v in a.terms]}


def poly_from_json(data: Mapping) -> QuadForm:
    dimension = int(data["S"])
    return QuadForm.from_mapping(
        {(int(i) - 1, int(j) - 1): Fraction(str(v)) for i, j, v in data.get("quad", [])},
        dimension,
    )
