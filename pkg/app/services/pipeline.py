# app/services/pipeline.py

import logging
from dataclasses import dataclass
from typing import Optional

from app.errors import StochasticityError
from app.models.ast import ModelAST
from app.models.checked import CheckedModel
from app.models.flat import FlatSpec
from app.services.frontend import parse_model, tokenize
from app.services.idtmc import PolyMatrix, build_matrix, check_stochasticity
from app.services.translator import StateEncoder, annotate_actions, translate
from app.services.validation import validate_model

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CompileResult:
    ast: ModelAST
    model: CheckedModel
    spec: FlatSpec
    encoder: StateEncoder
    matrix: PolyMatrix


def compile_model(source: str, prune: Optional[bool] = None, threads: Optional[int] = None) -> CompileResult:
    """
    tokenize -> parse -> validate -> annotate -> translate -> build_matrix,
    followed by the stochasticity check.

    :raises StochasticityError: when some compiled row is not a distribution.
    :raises PiffError: from whichever phase fails first.
    """
    ast = parse_model(tokenize(source))
    model = annotate_actions(validate_model(ast))
    spec, encoder = translate(model, prune=prune, threads=threads)
    matrix = build_matrix(spec)
    diagnostics = check_stochasticity(matrix)
    if diagnostics:
        for diagnostic in diagnostics:
            logger.error("%s: %s", diagnostic.state, diagnostic.message)
        raise StochasticityError([(d.state, d.message) for d in diagnostics])
    return CompileResult(ast, model, spec, encoder, matrix)
