# app/schemas/matrix.py

from typing import Optional

from pydantic import BaseModel, Field, model_validator


# A form over S occupancy variables; indices are 1-based, i <= j.
class PolySchema(BaseModel):
    S: int = Field(ge=0)
    quad: list[tuple[int, int, str]] = []


class EntrySchema(BaseModel):
    row: int = Field(ge=0)
    col: int = Field(ge=0)
    poly: PolySchema


# Matrix interchange format shared by every subcommand and endpoint.
class MatrixSchema(BaseModel):
    states: list[str]
    labels: dict[str, list[str]] = {}
    entries: list[EntrySchema] = []
    init: dict[str, str] = {}
    population: Optional[int] = Field(None, ge=1)
    members: dict[str, list[str]] = {}

    @model_validator(mode="after")
    def check_consistency(self) -> "MatrixSchema":
        size = len(self.states)
        if len(set(self.states)) != size:
            raise ValueError("state names must be unique")
        known = set(self.states)
        for entry in self.entries:
            if entry.row >= size or entry.col >= size:
                raise ValueError(f"entry ({entry.row}, {entry.col}) outside {size} states")
            if entry.poly.S != size:
                raise ValueError(f"entry ({entry.row}, {entry.col}) has S={entry.poly.S}, expected {size}")
            for i, j, _ in entry.poly.quad:
                if not (1 <= i <= j <= size):
                    raise ValueError(f"monomial index ({i}, {j}) outside 1..{size}")
        for section in (self.labels, self.init, self.members):
            unknown = set(section) - known
            if unknown:
                raise ValueError(f"unknown state(s) {', '.join(sorted(unknown))}")
        return self


class BlockSchema(BaseModel):
    name: str
    members: list[str]


class PartitionSchema(BaseModel):
    blocks: list[BlockSchema]
