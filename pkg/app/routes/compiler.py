# app/routes/compiler.py

from fastapi import APIRouter, File, HTTPException, Query, UploadFile, status

from app.dependencies import domain_errors
from app.repository.artifacts import matrix_from_schema, matrix_to_schema, partition_to_schema
from app.schemas.compiler import CompileRequest, CompileResponse, ReduceRequest, ReduceResponse
from app.services.bisim import reduce_matrix
from app.services.flyfast import render_flat_spec, render_matrix_spec
from app.services.labels import label_states, pair_labels, parse_label_file
from app.services.pipeline import compile_model

router = APIRouter(prefix="/models", tags=["models"])


def _compile(source: str, prune) -> CompileResponse:
    with domain_errors():
        result = compile_model(source, prune=prune)
    return CompileResponse(
        flyfast=render_flat_spec(result.spec),
        matrix=matrix_to_schema(result.matrix),
        states=len(result.spec.states),
        actions=len(result.spec.actions),
    )


@router.post("/compile", response_model=CompileResponse)
def compile_source(body: CompileRequest):
    """
    Compiles model source into a flat specification and its matrix.

    :param body: Source text and the pruning flag.
    :type body: CompileRequest
    :return: FlyFast text and matrix document.
    :rtype: CompileResponse
    """
    return _compile(body.source, body.prune)


@router.post("/compile/upload", response_model=CompileResponse)
def compile_upload(file: UploadFile = File(), prune: bool = Query(True)):
    """
    Same as ``/compile`` for an uploaded ``.piff`` file.
    """
    raw = file.file.read()
    try:
        source = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="Model file must be UTF-8 text")
    return _compile(source, prune)


@router.post("/reduce", response_model=ReduceResponse)
def reduce(body: ReduceRequest):
    """
    Minimizes a matrix by bisimulation, from a label file or from the
    (agent state, store) pair labels.
    """
    if body.labels is None and not body.pair_labels:
        raise HTTPException(status_code=status.HTTP_400_BAD_REQUEST, detail="Either labels or pair_labels is required")
    with domain_errors():
        matrix, _ = matrix_from_schema(body.matrix)
        labels = pair_labels(matrix) if body.pair_labels else label_states(parse_label_file(body.labels), matrix)
        quotient = reduce_matrix(matrix, labels)
    return ReduceResponse(
        partition=partition_to_schema(quotient),
        matrix=matrix_to_schema(quotient.matrix, quotient.labels),
        flyfast=render_matrix_spec(quotient.matrix),
    )
