# app/services/exactsim.py

"""
Clock-synchronous simulation of N components: at every step each state's
occupants are split over the columns of its row of K(counts / N).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from app.conf.config import get_settings
from app.errors import SimulationError
from app.services.idtmc import PolyMatrix

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PopulationConfig:
    """Occupancy counts per state; the population size is their sum."""
    counts: tuple[int, ...]

    def __post_init__(self):
        if any(c < 0 for c in self.counts):
            raise SimulationError("negative occupancy count")
        if self.total == 0:
            raise SimulationError("empty population")

    @property
    def total(self) -> int:
        return sum(self.counts)

    @classmethod
    def from_occupancy(cls, occupancy: Sequence, population: int) -> "PopulationConfig":
        """
        Counts closest to ``occupancy * population``: floors first, the
        remaining individuals go to the largest remainders.
        """
        if population < 1:
            raise SimulationError(f"population must be positive, got {population}")
        shares = [Fraction(x).limit_denominator(10 ** 12) * population for x in occupancy]
        counts = [int(share) for share in shares]
        missing = population - sum(counts)
        order = sorted(range(len(shares)), key=lambda i: (-(shares[i] - counts[i]), i))
        for i in order[:missing]:
            counts[i] += 1
        return cls(tuple(counts))

    def occupancy(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.total


def exact_step(M: PolyMatrix, cfg: PopulationConfig, rng: np.random.Generator) -> PopulationConfig:
    """
    One synchronous step.

    :raises SimulationError: when a row of K(m) is not a distribution.
    """
    if len(cfg.counts) != M.dimension:
        raise SimulationError(f"configuration of length {len(cfg.counts)} for {M.dimension} states")
    matrix = M.numeric.evaluate(cfg.occupancy())
    following = np.zeros(M.dimension, dtype=np.int64)
    for z, count in enumerate(cfg.counts):
        if count == 0:
            continue
        row = np.clip(matrix[z], 0.0, None)
        total = row.sum()
        if abs(total - 1.0) > get_settings().DRIFT_LIMIT:
            raise SimulationError(f"row {M.states[z]} sums to {total!r}")
        following += rng.multinomial(count, row / total)
    return PopulationConfig(tuple(int(c) for c in following))


@dataclass(frozen=True)
class SimResult:
    """
    ``trajectories`` has shape (replicas, T + 1, S) and holds empirical
    occupancies; ``mean`` and ``sd`` are taken over replicas (population
    standard deviation).
    """
    states: tuple[str, ...]
    seed: int
    spawn_keys: tuple[tuple[int, ...], ...]
    trajectories: np.ndarray
    population: int

    @property
    def mean(self) -> np.ndarray:
        return self.trajectories.mean(axis=0)

    @property
    def sd(self) -> np.ndarray:
        return self.trajectories.std(axis=0)


def _replica(M: PolyMatrix, cfg0: PopulationConfig, steps: int, seed: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed)
    cfg = cfg0
    trajectory = np.empty((steps + 1, M.dimension))
    trajectory[0] = cfg.occupancy()
    for t in range(steps):
        cfg = exact_step(M, cfg, rng)
        if cfg.total != cfg0.total:
            raise SimulationError(f"population changed from {cfg0.total} to {cfg.total} at step {t + 1}")
        trajectory[t + 1] = cfg.occupancy()
    return trajectory


def monte_carlo(M: PolyMatrix, cfg0: PopulationConfig, steps: int, replicas: int, seed: int,
                threads: Optional[int] = None) -> SimResult:
    """
    Runs independent replicas; replica r draws from the r-th child of
    ``SeedSequence(seed)``, so results do not depend on the thread count.

    :param M: Transition matrix function.
    :param cfg0: Initial configuration.
    :param steps: Number of steps T.
    :param replicas: Number of replicas, at least 1.
    :param seed: Root seed.
    :param threads: Worker threads; defaults to the THREADS setting.
    :return: All replica trajectories with their seeds.
    :rtype: SimResult
    """
    if replicas < 1:
        raise SimulationError(f"replicas must be at least 1, got {replicas}")
    threads = get_settings().THREADS if threads is None else threads
    children = np.random.SeedSequence(seed).spawn(replicas)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            runs = list(pool.map(lambda child: _replica(M, cfg0, steps, child), children))
    else:
        runs = [_replica(M, cfg0, steps, child) for child in children]
    logger.info("%d replica(s) of %d steps with N=%d finished", replicas, steps, cfg0.total)
    return SimResult(
        tuple(M.states), seed, tuple(tuple(child.spawn_key) for child in children), np.stack(runs), cfg0.total,
    )
