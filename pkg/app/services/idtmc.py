# app/services/idtmc.py

import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from app.conf.config import get_settings
from app.errors import MatrixBuildError, PolynomialError
from app.models.flat import FDiv, FFrc, FlatExpr, FlatSpec, FNeg, FNum, FProd, FSub, FSum
from app.services.poly import QuadForm, canonicalize, check_simplex, poly_eval, sum_forms

logger = logging.getLogger(__name__)

# state name -> atomic propositions holding there
LabelMap = dict[str, frozenset[str]]


class _Numeric:
    """Flattened coefficient arrays for fast float evaluation of K(m)."""

    def __init__(self, dimension: int, entries: Mapping[tuple[int, int], QuadForm]):
        rows, cols, first, second, coef = [], [], [], [], []
        for (r, c), form in entries.items():
            for (i, j), value in form.terms:
                rows.append(r)
                cols.append(c)
                first.append(i)
                second.append(j)
                coef.append(float(value))
        self.dimension = dimension
        self.rows = np.asarray(rows, dtype=np.intp)
        self.cols = np.asarray(cols, dtype=np.intp)
        self.first = np.asarray(first, dtype=np.intp)
        self.second = np.asarray(second, dtype=np.intp)
        self.coef = np.asarray(coef, dtype=float)

    def evaluate(self, m: np.ndarray) -> np.ndarray:
        values = self.coef * m[self.first] * m[self.second]
        matrix = np.zeros((self.dimension, self.dimension))
        np.add.at(matrix, (self.rows, self.cols), values)
        return matrix


@dataclass(frozen=True)
class PolyMatrix:
    """
    K(m): an S x S matrix of forms over S occupancy variables. Only nonzero
    entries are stored. ``init``, ``population`` and ``members`` travel with
    the matrix between subcommands.
    """
    states: tuple[str, ...]
    entries: Mapping[tuple[int, int], QuadForm]
    init: Mapping[str, Fraction] = field(default_factory=dict)
    population: Optional[int] = None
    members: Mapping[str, tuple[str, ...]] = field(default_factory=dict)

    @classmethod
    def identity(cls, states: Sequence[str]) -> "PolyMatrix":
        size = len(states)
        return cls(tuple(states), {(i, i): QuadForm.constant(1, size) for i in range(size)})

    @property
    def dimension(self) -> int:
        return len(self.states)

    @cached_property
    def index(self) -> dict[str, int]:
        return {name: i for i, name in enumerate(self.states)}

    @cached_property
    def rows(self) -> list[dict[int, QuadForm]]:
        rows: list[dict[int, QuadForm]] = [{} for _ in self.states]
        for (r, c), form in sorted(self.entries.items()):
            rows[r][c] = form
        return rows

    @cached_property
    def numeric(self) -> _Numeric:
        return _Numeric(self.dimension, self.entries)

    def entry(self, row: Union[int, str], col: Union[int, str]) -> QuadForm:
        r = self.index[row] if isinstance(row, str) else row
        c = self.index[col] if isinstance(col, str) else col
        return self.entries.get((r, c), QuadForm.zero(self.dimension))

    def occupancy(self, values: Mapping[str, object]) -> list:
        """Vector in state order from a name -> value mapping; missing states are 0."""
        unknown = set(values) - set(self.index)
        if unknown:
            raise MatrixBuildError(f"unknown state(s) {', '.join(sorted(unknown))}")
        return [values.get(name, 0) for name in self.states]


# --- flat expressions to forms ---
def _affine(expr: FlatExpr, index: Mapping[str, int]):
    """(constant, {i: h}) when ``expr`` is affine in the occupancy, else None."""
    if isinstance(expr, FNum):
        return expr.value, {}
    if isinstance(expr, FFrc):
        if expr.state not in index:
            raise MatrixBuildError(f"frc of unknown state {expr.state}")
        return Fraction(0), {index[expr.state]: Fraction(1)}
    if isinstance(expr, (FSum, FSub, FNeg)):
        parts = expr.terms if isinstance(expr, FSum) else (
            (expr.left, expr.right) if isinstance(expr, FSub) else (expr.operand,))
        signs = [1] * len(parts)
        if isinstance(expr, FSub):
            signs = [1, -1]
        if isinstance(expr, FNeg):
            signs = [-1]
        constant, linear = Fraction(0), {}
        for sign, part in zip(signs, parts):
            sub = _affine(part, index)
            if sub is None:
                return None
            constant += sign * sub[0]
            for i, h in sub[1].items():
                linear[i] = linear.get(i, Fraction(0)) + sign * h
        return constant, linear
    if isinstance(expr, FProd):
        scalar, affine = Fraction(1), None
        for factor in expr.factors:
            sub = _affine(factor, index)
            if sub is None:
                return None
            if not sub[1]:
                scalar *= sub[0]
            elif affine is None:
                affine = sub
            else:
                return None
        if affine is None:
            return scalar, {}
        return scalar * affine[0], {i: scalar * h for i, h in affine[1].items()}
    if isinstance(expr, FDiv):
        left, right = _affine(expr.left, index), _affine(expr.right, index)
        if left is None or right is None or right[1] or right[0] == 0:
            return None
        return left[0] / right[0], {i: h / right[0] for i, h in left[1].items()}
    return None


def flat_to_quadform(expr: FlatExpr, index: Mapping[str, int], dimension: int) -> QuadForm:
    """
    The canonical form of a flat probability expression, with frc(z) read as
    the occupancy variable of z.

    :raises MatrixBuildError: for frc of an unknown state.
    :raises DegreeOverflowError: when the expression exceeds degree 2.
    """
    affine = _affine(expr, index)
    if affine is not None:
        return canonicalize(affine[0], affine[1], (), dimension)
    if isinstance(expr, FSum):
        return sum_forms((flat_to_quadform(t, index, dimension) for t in expr.terms), dimension)
    if isinstance(expr, FSub):
        return flat_to_quadform(expr.left, index, dimension) - flat_to_quadform(expr.right, index, dimension)
    if isinstance(expr, FNeg):
        return -flat_to_quadform(expr.operand, index, dimension)
    if isinstance(expr, FProd):
        result = QuadForm.constant(1, dimension)
        for factor in expr.factors:
            result = result * flat_to_quadform(factor, index, dimension)
        return result
    if isinstance(expr, FDiv):
        divisor = _affine(expr.right, index)
        if divisor is None or divisor[1] or divisor[0] == 0:
            raise PolynomialError("division by a non-constant or zero expression")
        return flat_to_quadform(expr.left, index, dimension).scale(1 / divisor[0])
    raise MatrixBuildError(f"unsupported expression {expr!r}")


# --- matrix construction and checks ---
def build_matrix(spec: FlatSpec) -> PolyMatrix:
    """
    Assembles K(m): entry (z, z') is the sum of the definitions of all
    actions leading from z to z'.

    :raises MatrixBuildError: naming the offending action.
    """
    index = {name: i for i, name in enumerate(spec.states)}
    dimension = len(spec.states)
    forms: dict[str, QuadForm] = {}
    entries: dict[tuple[int, int], QuadForm] = {}
    for source, summands in spec.equations.items():
        if source not in index:
            raise MatrixBuildError(f"equation for unknown state {source}")
        for action, target in summands:
            if target not in index:
                raise MatrixBuildError(f"action {action} targets unknown state {target}")
            if action not in forms:
                if action not in spec.actions:
                    raise MatrixBuildError(f"action {action} has no probability definition")
                try:
                    forms[action] = flat_to_quadform(spec.actions[action], index, dimension)
                except (PolynomialError, MatrixBuildError) as exc:
                    raise MatrixBuildError(f"action {action}: {exc}") from exc
            key = (index[source], index[target])
            entries[key] = entries[key] + forms[action] if key in entries else forms[action]
    entries = {key: form for key, form in entries.items() if not form.is_zero()}
    total = spec.population
    init = {name: Fraction(count, total) for name, count in spec.init.items()} if total else {}
    logger.info("matrix of %d states with %d nonzero entries", dimension, len(entries))
    return PolyMatrix(tuple(spec.states), entries, init, total or None)


@dataclass(frozen=True)
class RowDiagnostic:
    state: str
    message: str
    deficit: Optional[QuadForm] = None


def _sample_points(dimension: int, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    return rng.dirichlet(np.ones(dimension), size=count) if dimension else np.zeros((0, 0))


def _negative_somewhere(form: QuadForm, points: np.ndarray, tolerance: float) -> bool:
    coefficients = form.as_dict()
    diagonal = form.diagonal()
    # vertices e_i and midpoints (e_i + e_j) / 2
    if any(value < 0 for value in diagonal):
        return True
    for (i, j), value in coefficients.items():
        if i != j and diagonal[i] + diagonal[j] + value < 0:
            return True
    for point in points:
        if poly_eval(form, point, tolerance=1e-9) < -tolerance:
            return True
    return False


def check_stochasticity(M: PolyMatrix, sample_points: Optional[int] = None,
                        seed: Optional[int] = None) -> list[RowDiagnostic]:
    """
    Rows must sum to the constant-1 form and entries must be nonnegative on
    the simplex. Coefficients are checked first; an entry with a negative
    coefficient is then evaluated at the simplex vertices, edge midpoints
    and random points before it is reported.
    """
    settings = get_settings()
    count = settings.SAMPLE_POINTS if sample_points is None else sample_points
    points = None
    one = QuadForm.constant(1, M.dimension)
    diagnostics: list[RowDiagnostic] = []
    for r, row in enumerate(M.rows):
        total = sum_forms(row.values(), M.dimension)
        if total != one:
            diagnostics.append(RowDiagnostic(M.states[r], f"row sums to 1 + ({total - one})", one - total))
        for c, form in row.items():
            if all(value >= 0 for _, value in form.terms):
                continue
            if points is None:
                points = _sample_points(M.dimension, count, settings.SAMPLE_SEED if seed is None else seed)
            logger.warning("entry (%s, %s) has negative coefficients; sampling", M.states[r], M.states[c])
            if _negative_somewhere(form, points, settings.SIMPLEX_TOLERANCE):
                diagnostics.append(RowDiagnostic(M.states[r], f"entry to {M.states[c]} is negative on the simplex"))
    return diagnostics


def eval_matrix(M: PolyMatrix, m: Sequence, exact: bool = False, tolerance: Optional[float] = None):
    """
    Evaluates K(m). Returns a list of Fraction rows when ``exact`` is set
    (``m`` must then hold rationals), a float ndarray otherwise.
    """
    tolerance = get_settings().SIMPLEX_TOLERANCE if tolerance is None else tolerance
    if exact:
        check_simplex(m, M.dimension, tolerance)
        matrix = [[Fraction(0)] * M.dimension for _ in range(M.dimension)]
        for (r, c), form in M.entries.items():
            matrix[r][c] = poly_eval(form, m, tolerance)
        return matrix
    vector = np.asarray(m, dtype=float)
    check_simplex(vector, M.dimension, tolerance)
    return M.numeric.evaluate(vector)


def class_row_sum(M: PolyMatrix, z: Union[int, str], Q: Iterable[Union[int, str]]) -> QuadForm:
    """Sum of the entries from ``z`` into the states of ``Q``."""
    row = M.rows[M.index[z] if isinstance(z, str) else z]
    columns = {M.index[q] if isinstance(q, str) else q for q in Q}
    return sum_forms((row[c] for c in sorted(columns) if c in row), M.dimension)
