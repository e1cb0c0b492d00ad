# app/services/analysis.py

"""
Mean-field trajectory, fast simulation and bounded PCTL over the
time-inhomogeneous chain K(mu(t)).
"""

import logging
import os
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np
from lark import Lark, Transformer, v_args
from lark.exceptions import UnexpectedInput, VisitError

from app.conf.config import get_settings
from app.errors import FormulaError, NumericDriftError, PiffError, SimplexDomainError
from app.models.formula import AndF, AtomF, FalseF, Formula, NextF, NotF, OrF, ProbF, TrueF, UntilF
from app.services.idtmc import LabelMap, PolyMatrix
from app.services.poly import check_simplex

logger = logging.getLogger(__name__)

_GRAMMAR_FILE = os.path.join(os.path.dirname(os.path.dirname(__file__)), "grammars", "pctl.lark")

with open(_GRAMMAR_FILE, encoding="utf-8") as _f:
    _pctl_parser = Lark(_f.read(), parser="lalr", lexer="basic", propagate_positions=True)


# --- occupancy vectors ---
def parse_occupancy(text: Optional[str], M: PolyMatrix) -> list[Fraction]:
    """
    ``NAME:value,...`` with unlisted states at 0, or the matrix's stored
    initial occupancy when ``text`` is empty.

    :raises SimplexDomainError: when the vector is not on the simplex.
    """
    if not text:
        if not M.init:
            raise SimplexDomainError("no initial occupancy given and none stored with the matrix")
        vector = M.occupancy({name: Fraction(value) for name, value in M.init.items()})
    else:
        values: dict[str, Fraction] = {}
        for item in text.split(","):
            name, sep, value = item.strip().partition(":")
            if not sep:
                raise SimplexDomainError(f"occupancy item {item!r} is not NAME:value")
            try:
                values[name.strip()] = values.get(name.strip(), Fraction(0)) + Fraction(value.strip())
            except ValueError:
                raise SimplexDomainError(f"occupancy value {value!r} is not a number") from None
        try:
            vector = M.occupancy(values)
        except PiffError as exc:
            raise SimplexDomainError(str(exc)) from exc
    check_simplex(vector, M.dimension)
    return vector


def point_mass(M: PolyMatrix, state: str) -> np.ndarray:
    if state not in M.index:
        raise SimplexDomainError(f"unknown state {state}")
    vector = np.zeros(M.dimension)
    vector[M.index[state]] = 1.0
    return vector


def _renormalize(vector: np.ndarray, t: int, tolerance: float, drift_limit: float) -> np.ndarray:
    drift = abs(vector.sum() - 1.0)
    if drift > drift_limit:
        raise NumericDriftError(f"occupancy drifted by {drift:.3e} from the simplex at step {t}")
    if drift > tolerance:
        logger.warning("renormalizing occupancy at step %d (drift %.3e)", t, drift)
    return vector / vector.sum()


# --- trajectories ---
def meanfield_trajectory(M: PolyMatrix, mu0: Sequence, steps: int, tolerance: Optional[float] = None,
                         drift_limit: Optional[float] = None) -> np.ndarray:
    """
    mu(t + 1) = mu(t) K(mu(t)).

    :param M: Transition matrix function.
    :param mu0: Initial occupancy on the simplex.
    :param steps: Number of steps T.
    :return: Array of shape (T + 1, S).
    :rtype: np.ndarray
    :raises NumericDriftError: when a vector leaves the simplex by more than the drift limit.
    """
    settings = get_settings()
    tolerance = settings.SIMPLEX_TOLERANCE if tolerance is None else tolerance
    drift_limit = settings.DRIFT_LIMIT if drift_limit is None else drift_limit
    mu = np.asarray([float(x) for x in mu0])
    check_simplex(mu, M.dimension, tolerance)
    trajectory = np.empty((steps + 1, M.dimension))
    trajectory[0] = mu
    for t in range(steps):
        mu = _renormalize(mu @ M.numeric.evaluate(mu), t + 1, tolerance, drift_limit)
        trajectory[t + 1] = mu
    return trajectory


def fast_simulation(M: PolyMatrix, mu0: Sequence, h0: Sequence, steps: int,
                    tolerance: Optional[float] = None, drift_limit: Optional[float] = None) -> np.ndarray:
    """
    h(t + 1) = h(t) K(mu(t)): one tracked individual against the mean field.
    """
    settings = get_settings()
    tolerance = settings.SIMPLEX_TOLERANCE if tolerance is None else tolerance
    drift_limit = settings.DRIFT_LIMIT if drift_limit is None else drift_limit
    field = meanfield_trajectory(M, mu0, steps, tolerance, drift_limit)
    h = np.asarray([float(x) for x in h0])
    check_simplex(h, M.dimension, tolerance)
    result = np.empty_like(field)
    result[0] = h
    for t in range(steps):
        h = _renormalize(h @ M.numeric.evaluate(field[t]), t + 1, tolerance, drift_limit)
        result[t + 1] = h
    return result


def aggregate(trajectory: np.ndarray, full: PolyMatrix, reduced: PolyMatrix,
              state_map: Mapping[str, str]) -> np.ndarray:
    """Sums the columns of a full-model trajectory per block."""
    projection = np.zeros((full.dimension, reduced.dimension))
    for state, block in state_map.items():
        projection[full.index[state], reduced.index[block]] = 1.0
    return trajectory @ projection


# --- PCTL ---
@v_args(inline=True)
class _PctlTransformer(Transformer):
    def true(self):
        return TrueF()

    def false(self):
        return FalseF()

    def ap(self, name):
        return AtomF(str(name))

    def not_(self, operand):
        return NotF(operand)

    def and_(self, left, right):
        return AndF(left, right)

    def or_(self, left, right):
        return OrF(left, right)

    def next(self, operand):
        return NextF(operand)

    def until(self, left, op, bound, right):
        value = Fraction(str(bound))
        if str(op) != "<=" or value.denominator != 1:
            raise FormulaError(f"until needs a bound of the form U<=k, got U{op}{bound}", op.line, op.column)
        return UntilF(left, right, int(value))

    def prob(self, op, bound, path):
        value = Fraction(str(bound))
        if value > 1:
            raise FormulaError(f"probability bound {bound} exceeds 1", bound.line, bound.column)
        return ProbF(str(op), value, path, str(bound))


def parse_pctl(text: str) -> Formula:
    """
    Parses ``ap | !f | f & f | f | f | P<=0.4 [X f] | P>=0.9 [f U<=10 f]``.

    :raises FormulaError: with the position of the offending token.
    """
    try:
        tree = _pctl_parser.parse(text)
    except UnexpectedInput as exc:
        raise FormulaError(f"syntax error in formula {text!r}", exc.line, exc.column) from exc
    try:
        return _PctlTransformer().transform(tree)
    except VisitError as exc:
        if isinstance(exc.orig_exc, PiffError):
            raise exc.orig_exc from exc
        raise


_COMPARE = {
    "<": np.less,
    "<=": np.less_equal,
    ">": np.greater,
    ">=": np.greater_equal,
}


@dataclass(frozen=True)
class Verdict:
    state: str
    time: int
    formula: str
    verdict: bool
    probability: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "state": self.state, "time": self.time, "formula": self.formula,
            "verdict": self.verdict, "probability": self.probability,
        }


class PctlChecker:
    """
    Evaluates formulas one time layer at a time: satisfaction is a boolean
    vector over all states at time t, path probabilities a float vector.
    mu(t) and K(mu(t)) are computed on demand.
    """

    def __init__(self, M: PolyMatrix, labels: LabelMap, mu0: Sequence, memoize: bool = True):
        self.M = M
        self.labels = labels
        self.memoize = memoize
        self._mu = [np.asarray([float(x) for x in mu0])]
        check_simplex(self._mu[0], M.dimension, get_settings().SIMPLEX_TOLERANCE)
        self._matrices: dict[int, np.ndarray] = {}
        self._sat: dict[tuple, np.ndarray] = {}
        self._prob: dict[tuple, np.ndarray] = {}

    # --- field ---
    def occupancy(self, t: int) -> np.ndarray:
        settings = get_settings()
        while len(self._mu) <= t:
            mu = self._mu[-1]
            step = len(self._mu)
            self._mu.append(_renormalize(mu @ self.matrix(step - 1), step,
                                         settings.SIMPLEX_TOLERANCE, settings.DRIFT_LIMIT))
        return self._mu[t]

    def matrix(self, t: int) -> np.ndarray:
        if t not in self._matrices:
            self._matrices[t] = self.M.numeric.evaluate(self.occupancy(t))
        return self._matrices[t]

    # --- satisfaction ---
    def sat(self, formula: Formula, t: int) -> np.ndarray:
        key = (formula, t)
        if self.memoize and key in self._sat:
            return self._sat[key]
        result = self._sat_uncached(formula, t)
        if self.memoize:
            self._sat[key] = result
        return result

    def _sat_uncached(self, formula: Formula, t: int) -> np.ndarray:
        size = self.M.dimension
        if isinstance(formula, TrueF):
            return np.ones(size, dtype=bool)
        if isinstance(formula, FalseF):
            return np.zeros(size, dtype=bool)
        if isinstance(formula, AtomF):
            return np.array([formula.name in self.labels.get(s, ()) for s in self.M.states], dtype=bool)
        if isinstance(formula, NotF):
            return ~self.sat(formula.operand, t)
        if isinstance(formula, AndF):
            return self.sat(formula.left, t) & self.sat(formula.right, t)
        if isinstance(formula, OrF):
            return self.sat(formula.left, t) | self.sat(formula.right, t)
        if isinstance(formula, ProbF):
            return _COMPARE[formula.op](self.probability(formula, t), float(formula.bound))
        raise FormulaError(f"unsupported formula {formula!r}")

    def probability(self, formula: ProbF, t: int) -> np.ndarray:
        """Probability of the path formula of ``formula`` from every state at time t."""
        path = formula.path
        if isinstance(path, NextF):
            return self.matrix(t) @ self.sat(path.operand, t + 1).astype(float)
        return self.until(path, t, path.bound)

    def until(self, path: UntilF, t: int, k: int) -> np.ndarray:
        """
        prob(t, k) = 1 on right-states, 0 on states violating left or when
        k = 0, K(mu(t)) prob(t + 1, k - 1) otherwise; computed backwards
        from t + k.
        """
        key = (path, t, k)
        if self.memoize and key in self._prob:
            return self._prob[key]
        start = 0
        vector = None
        if self.memoize:
            # resume from the deepest layer already known
            for i in range(k, -1, -1):
                cached = self._prob.get((path, t + i, k - i))
                if cached is not None:
                    start, vector = i, cached
                    break
        if vector is None:
            start = k
            vector = self.sat(path.right, t + k).astype(float)
            self._remember(path, t + k, 0, vector)
        for i in range(start - 1, -1, -1):
            left, right = self.sat(path.left, t + i), self.sat(path.right, t + i)
            vector = np.where(right, 1.0, np.where(left, self.matrix(t + i) @ vector, 0.0))
            self._remember(path, t + i, k - i, vector)
        return vector

    def _remember(self, path: UntilF, t: int, k: int, vector: np.ndarray) -> None:
        if self.memoize:
            self._prob[(path, t, k)] = vector

    def check(self, state: str, t: int, formula: Formula) -> Verdict:
        if state not in self.M.index:
            raise FormulaError(f"unknown state {state}")
        i = self.M.index[state]
        probability = float(self.probability(formula, t)[i]) if isinstance(formula, ProbF) else None
        return Verdict(state, t, str(formula), bool(self.sat(formula, t)[i]), probability)


def check_pctl(M: PolyMatrix, labels: LabelMap, mu0: Sequence, state: str, t0: int, formula: Formula,
               memoize: bool = True) -> Verdict:
    """
    Checks ``formula`` at (``state``, ``t0``) against the field started at
    ``mu0``. Top-level probability operators also report the probability.
    """
    return PctlChecker(M, labels, mu0, memoize).check(state, t0, formula)


# --- agreement between a model and its quotient ---
def block_map(full: PolyMatrix, reduced: PolyMatrix) -> dict[str, str]:
    """
    Maps every state of ``full`` to the reduced state whose members
    contain its own members.
    """
    owner: dict[str, str] = {}
    for block, members in reduced.members.items():
        for member in members:
            owner[member] = block
    mapping: dict[str, str] = {}
    for state in full.states:
        blocks = {owner.get(member) for member in full.members.get(state, (state,))}
        if len(blocks) != 1 or None in blocks:
            raise SimplexDomainError(f"state {state} does not fall inside one reduced state")
        mapping[state] = blocks.pop()
    return mapping


@dataclass(frozen=True)
class Agreement:
    max_gap: float
    disagreements: tuple[tuple[str, int, str], ...] = ()

    @property
    def ok(self) -> bool:
        return not self.disagreements


def verify_quotient(full: PolyMatrix, full_labels: LabelMap, reduced: PolyMatrix, reduced_labels: LabelMap,
                    state_map: Mapping[str, str], mu0: Sequence, steps: int,
                    formulas: Sequence[Formula] = (), t0: int = 0, tolerance: float = 1e-12) -> Agreement:
    """
    Compares the aggregated full trajectory with the quotient trajectory and
    every formula's verdict and probability at each full state and its block.
    """
    full_trajectory = meanfield_trajectory(full, mu0, steps)
    reduced_mu0 = aggregate(np.asarray([[float(x) for x in mu0]]), full, reduced, state_map)[0]
    reduced_trajectory = meanfield_trajectory(reduced, reduced_mu0, steps)
    gap = float(np.max(np.abs(aggregate(full_trajectory, full, reduced, state_map) - reduced_trajectory)))
    disagreements = []
    if gap > tolerance:
        disagreements.append(("trajectory", steps, f"gap {gap:.3e}"))
    full_checker = PctlChecker(full, full_labels, mu0)
    reduced_checker = PctlChecker(reduced, reduced_labels, reduced_mu0)
    for formula in formulas:
        for state in full.states:
            mine = full_checker.check(state, t0, formula)
            theirs = reduced_checker.check(state_map[state], t0, formula)
            same_probability = (
                mine.probability is None or abs(mine.probability - theirs.probability) <= tolerance
            )
            if mine.verdict != theirs.verdict or not same_probability:
                disagreements.append((state, t0, str(formula)))
    return Agreement(gap, tuple(disagreements))
