# app/repository/artifacts.py

import csv
import json
import logging
import os
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from pydantic import ValidationError as SchemaError

from app.errors import MatrixBuildError, SourceError
from app.services.analysis import Verdict
from app.services.bisim import Quotient
from app.services.exactsim import SimResult
from app.services.idtmc import LabelMap, PolyMatrix
from app.services.poly import poly_from_json, poly_to_json
from app.schemas.matrix import BlockSchema, EntrySchema, MatrixSchema, PartitionSchema, PolySchema

logger = logging.getLogger(__name__)


# --- conversions ---
def matrix_to_schema(M: PolyMatrix, labels: Optional[LabelMap] = None) -> MatrixSchema:
    return MatrixSchema(
        states=list(M.states),
        labels={state: sorted(props) for state, props in (labels or {}).items() if state in M.index},
        entries=[
            EntrySchema(row=r, col=c, poly=PolySchema(**poly_to_json(form)))
            for (r, c), form in sorted(M.entries.items())
        ],
        init={state: str(Fraction(value)) for state, value in M.init.items()},
        population=M.population,
        members={state: list(members) for state, members in M.members.items()},
    )


def matrix_from_schema(schema: MatrixSchema) -> tuple[PolyMatrix, LabelMap]:
    entries = {}
    for entry in schema.entries:
        form = poly_from_json(entry.poly.model_dump())
        key = (entry.row, entry.col)
        entries[key] = entries[key] + form if key in entries else form
    matrix = PolyMatrix(
        tuple(schema.states),
        {key: form for key, form in entries.items() if not form.is_zero()},
        {state: Fraction(value) for state, value in schema.init.items()},
        schema.population,
        {state: tuple(members) for state, members in schema.members.items()},
    )
    labels = {state: frozenset(props) for state, props in schema.labels.items()}
    return matrix, labels


def partition_to_schema(quotient: Quotient) -> PartitionSchema:
    return PartitionSchema(blocks=[BlockSchema(name=name, members=members) for name, members in quotient.blocks()])


# --- files ---
def read_text(path: str) -> str:
    """
    Reads a UTF-8 text file.

    :raises SourceError: naming the file when it cannot be read.
    """
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise SourceError(f"{path}: {exc}") from exc


def write_text(path: str, text: str) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    logger.info("wrote %s", path)


def read_matrix(path: str) -> tuple[PolyMatrix, LabelMap]:
    """
    :raises MatrixBuildError: when the file is not a valid matrix document.
    """
    text = read_text(path)
    try:
        schema = MatrixSchema.model_validate_json(text)
    except SchemaError as exc:
        raise MatrixBuildError(f"{path}: {exc.errors()[0]['msg']}") from exc
    return matrix_from_schema(schema)


def write_matrix(path: str, M: PolyMatrix, labels: Optional[LabelMap] = None) -> None:
    write_text(path, matrix_to_schema(M, labels).model_dump_json(indent=2) + "\n")


def write_partition(path: str, quotient: Quotient) -> None:
    write_text(path, partition_to_schema(quotient).model_dump_json(indent=2) + "\n")


def write_verdict(path: str, verdict: Verdict) -> None:
    write_text(path, json.dumps(verdict.as_dict(), indent=2) + "\n")


def _write_rows(path: str, header: Sequence[str], rows, comments: Sequence[str] = ()) -> None:
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for comment in comments:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
    logger.info("wrote %s", path)


def write_trajectory(path: str, states: Sequence[str], trajectory: np.ndarray) -> None:
    """``t,state1,...,stateS``, one row per step."""
    _write_rows(path, ["t", *states], ([t, *map(repr, map(float, row))] for t, row in enumerate(trajectory)))


def write_simulation(directory: str, result: SimResult) -> list[str]:
    """
    One ``replica_NNN.csv`` per replica plus ``summary.csv`` with columns
    ``t,state,mean,sd``; the seed goes into the header comments.
    """
    paths = []
    for r, trajectory in enumerate(result.trajectories):
        path = os.path.join(directory, f"replica_{r:03d}.csv")
        comments = [f"seed={result.seed}", f"replica={r}", f"spawn_key={list(result.spawn_keys[r])}",
                    f"N={result.population}"]
        _write_rows(path, ["t", *result.states],
                    ([t, *map(repr, map(float, row))] for t, row in enumerate(trajectory)), comments)
        paths.append(path)
    mean, sd = result.mean, result.sd
    summary = os.path.join(directory, "summary.csv")
    _write_rows(
        summary, ["t", "state", "mean", "sd"],
        (
            [t, state, repr(float(mean[t, i])), repr(float(sd[t, i]))]
            for t in range(mean.shape[0]) for i, state in enumerate(result.states)
        ),
        [f"seed={result.seed}", f"replicas={len(result.trajectories)}", f"N={result.population}"],
    )
    paths.append(summary)
    return paths
