# app/schemas/compiler.py

from typing import Optional

from pydantic import BaseModel, Field

from app.schemas.matrix import MatrixSchema, PartitionSchema


class CompileRequest(BaseModel):
    source: str = Field(min_length=1)
    prune: Optional[bool] = None


class CompileResponse(BaseModel):
    flyfast: str
    matrix: MatrixSchema
    states: int
    actions: int


# Either a label file or the (agent state, store) pair labelling.
class ReduceRequest(BaseModel):
    matrix: MatrixSchema
    labels: Optional[str] = None
    pair_labels: bool = False


class ReduceResponse(BaseModel):
    partition: PartitionSchema
    matrix: MatrixSchema
    flyfast: str
