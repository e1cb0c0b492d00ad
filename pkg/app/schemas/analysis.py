# app/schemas/analysis.py

from typing import Optional

from pydantic import BaseModel, Field

from app.schemas.matrix import MatrixSchema


class MeanFieldRequest(BaseModel):
    matrix: MatrixSchema
    init: Optional[str] = None  # NAME:value,... ; stored occupancy when omitted
    steps: int = Field(ge=0, le=100_000)


class FastSimRequest(MeanFieldRequest):
    start: str


class TrajectoryResponse(BaseModel):
    states: list[str]
    rows: list[list[float]]


class CheckRequest(BaseModel):
    matrix: MatrixSchema
    labels: Optional[str] = None
    init: Optional[str] = None
    state: str
    time: int = Field(0, ge=0)
    formula: str = Field(min_length=1)


class VerdictResponse(BaseModel):
    state: str
    time: int
    formula: str
    verdict: bool
    probability: Optional[float] = None


class SimulateRequest(BaseModel):
    matrix: MatrixSchema
    init: Optional[str] = None
    N: int = Field(ge=1)
    steps: int = Field(ge=0, le=10_000)
    replicas: int = Field(1, ge=1, le=10_000)
    seed: int


class SimulateResponse(BaseModel):
    seed: int
    states: list[str]
    mean: list[list[float]]
    sd: list[list[float]]
