# app/services/bisim.py

"""
Exact ordinary lumpability of polynomial matrices: partition refinement on
class sums compared as canonical forms, and the quotient over block
aggregates M_a = sum of m_i over block a.
"""

import heapq
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Mapping, Optional, Sequence, Union

from app.errors import NotLumpableError
from app.services.idtmc import LabelMap, PolyMatrix, class_row_sum
from app.services.poly import QuadForm

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Partition:
    """Blocks of state indices, each sorted, blocks ordered by their smallest index."""
    blocks: tuple[tuple[int, ...], ...]

    @classmethod
    def of(cls, blocks) -> "Partition":
        normalized = [tuple(sorted(block)) for block in blocks if block]
        return cls(tuple(sorted(normalized, key=lambda block: block[0])))

    @classmethod
    def discrete(cls, size: int) -> "Partition":
        return cls(tuple((i,) for i in range(size)))

    @cached_property
    def block_of(self) -> dict[int, int]:
        return {i: b for b, block in enumerate(self.blocks) for i in block}

    def __len__(self) -> int:
        return len(self.blocks)


def initial_partition(labels: LabelMap, states: Optional[Sequence[str]] = None) -> Partition:
    """
    States with equal label sets share a block.

    :param labels: Label set per state; states missing from it carry none.
    :param states: State order; defaults to the order of ``labels``.
    """
    states = list(labels) if states is None else list(states)
    groups: dict[frozenset, list[int]] = {}
    for i, name in enumerate(states):
        groups.setdefault(frozenset(labels.get(name, ())), []).append(i)
    return Partition.of(groups.values())


def refine_partition(M: PolyMatrix, labels: Union[LabelMap, Partition]) -> Partition:
    """
    The coarsest refinement of the label partition in which the states of
    each block have equal class sums into every block.

    Pending splitters are taken in ascending block id; when a block splits,
    all of its parts become pending.
    """
    start = labels if isinstance(labels, Partition) else initial_partition(labels, M.states)
    blocks: dict[int, list[int]] = {b: list(block) for b, block in enumerate(start.blocks)}
    pending = sorted(blocks)
    queued = set(blocks)
    next_id = len(blocks)
    rounds = 0
    while pending:
        splitter = heapq.heappop(pending)
        queued.discard(splitter)
        members = list(blocks[splitter])
        rounds += 1
        logger.debug("round %d: splitter %d", rounds, splitter)
        for block_id in sorted(blocks):
            block = blocks[block_id]
            if len(block) < 2:
                continue
            groups: dict[tuple, list[int]] = {}
            for z in block:
                groups.setdefault(class_row_sum(M, z, members).terms, []).append(z)
            if len(groups) == 1:
                continue
            parts = list(groups.values())
            blocks[block_id] = parts[0]
            new_ids = [block_id]
            for part in parts[1:]:
                blocks[next_id] = part
                new_ids.append(next_id)
                next_id += 1
            logger.debug("block %d split into %d by splitter %d", block_id, len(parts), splitter)
            for new_id in new_ids:
                if new_id not in queued:
                    heapq.heappush(pending, new_id)
                    queued.add(new_id)
    refined = Partition.of(blocks.values())
    logger.info("refined %d block(s) into %d in %d round(s)", len(start), len(refined), rounds)
    return refined


def rewrite_in_classes(form: QuadForm, partition: Partition) -> QuadForm:
    """
    Writes ``form`` as sum of w_ab * M_a * M_b over block pairs a <= b and
    returns the form over |P| variables with coefficients w.

    M_a * M_b (a != b) contributes w_ab to every u_ij with i in a and j in
    b; M_a ** 2 contributes w_aa to u_ii and 2 * w_aa to u_ij, i < j in a.

    :raises NotLumpableError: naming two coefficients that should agree.
    """
    coefficients = form.as_dict()
    block_of = partition.block_of
    weights: dict[tuple[int, int], Fraction] = {}
    witness: dict[tuple[int, int], tuple[int, int]] = {}
    for i in range(form.dimension):
        for j in range(i, form.dimension):
            a, b = block_of[i], block_of[j]
            key = (a, b) if a <= b else (b, a)
            value = coefficients.get((i, j), Fraction(0))
            if a == b and i != j:
                value = value / 2
            if key not in weights:
                weights[key] = value
                witness[key] = (i, j)
            elif weights[key] != value:
                first = witness[key]
                raise NotLumpableError(
                    f"coefficients of m{first[0] + 1}*m{first[1] + 1} and m{i + 1}*m{j + 1} "
                    f"differ inside block pair ({key[0] + 1}, {key[1] + 1})",
                    first, (i, j),
                )
    return QuadForm.from_mapping({key: value for key, value in weights.items() if value != 0}, len(partition))


def block_names(states: Sequence[str], partition: Partition, labels: LabelMap) -> list[str]:
    """``Q`` + sorted labels joined by ``_``; ``Q<k>`` for unlabelled blocks; clashes get ``_2``, ``_3``..."""
    names: list[str] = []
    used: set[str] = set()
    for k, block in enumerate(partition.blocks, start=1):
        carried = sorted(labels.get(states[block[0]], ()))
        base = "Q" + "_".join(carried) if carried else f"Q{k}"
        name, suffix = base, 1
        while name in used:
            suffix += 1
            name = f"{base}_{suffix}"
        used.add(name)
        names.append(name)
    return names


@dataclass(frozen=True)
class Quotient:
    matrix: PolyMatrix
    labels: LabelMap
    state_map: Mapping[str, str]
    partition: Partition = field(compare=False)

    def blocks(self) -> list[tuple[str, list[str]]]:
        members: dict[str, list[str]] = {name: [] for name in self.matrix.states}
        for state, block in self.state_map.items():
            members[block].append(state)
        return list(members.items())


def quotient_model(M: PolyMatrix, labels: LabelMap, partition: Partition) -> Quotient:
    """
    The lumped matrix: entry (a, b) is the class sum of the smallest state
    of a into b, rewritten over block aggregates. Every state of a block is
    checked to give the same class sums.

    :raises NotLumpableError: when the partition is not lumpable.
    """
    names = block_names(M.states, partition, labels)
    entries: dict[tuple[int, int], QuadForm] = {}
    for a, block in enumerate(partition.blocks):
        representative = block[0]
        for b, target in enumerate(partition.blocks):
            total = class_row_sum(M, representative, target)
            for other in block[1:]:
                if class_row_sum(M, other, target) != total:
                    raise NotLumpableError(
                        f"{M.states[representative]} and {M.states[other]} differ on block {names[b]}",
                        (representative, b), (other, b),
                    )
            if not total.is_zero():
                entries[(a, b)] = rewrite_in_classes(total, partition)

    state_map = {M.states[i]: names[b] for b, block in enumerate(partition.blocks) for i in block}
    members = {
        names[b]: tuple(sorted(
            original for i in block for original in M.members.get(M.states[i], (M.states[i],))
        ))
        for b, block in enumerate(partition.blocks)
    }
    init: dict[str, Fraction] = {}
    for state, value in M.init.items():
        init[state_map[state]] = init.get(state_map[state], Fraction(0)) + Fraction(value)
    reduced_labels = {
        names[b]: frozenset(labels.get(M.states[block[0]], ())) for b, block in enumerate(partition.blocks)
    }
    matrix = PolyMatrix(tuple(names), entries, init, M.population, members)
    logger.info("quotient of %d states into %d blocks", M.dimension, len(names))
    return Quotient(matrix, reduced_labels, state_map, partition)


def reduce_matrix(M: PolyMatrix, labels: LabelMap) -> Quotient:
    """Refinement from the label partition followed by the quotient."""
    return quotient_model(M, labels, refine_partition(M, labels))
