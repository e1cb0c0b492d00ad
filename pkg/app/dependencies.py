# app/dependencies.py

from contextlib import contextmanager
from typing import Iterator

from fastapi import HTTPException, status

from app.errors import NotLumpableError, PiffError


def to_http(exc: PiffError) -> HTTPException:
    """
    Maps a domain error to an HTTP error: 409 for a partition that is not
    lumpable, 422 for everything else. The detail lists the diagnostics.
    """
    code = status.HTTP_409_CONFLICT if isinstance(exc, NotLumpableError) else status.HTTP_422_UNPROCESSABLE_ENTITY
    detail = [
        {"severity": d.severity, "message": d.message, "line": d.line, "column": d.column}
        for d in exc.diagnostics()
    ]
    return HTTPException(status_code=code, detail=detail)


@contextmanager
def domain_errors() -> Iterator[None]:
    """Re-raises any ``PiffError`` inside the block as an ``HTTPException``."""
    try:
        yield
    except PiffError as exc:
        raise to_http(exc) from exc
