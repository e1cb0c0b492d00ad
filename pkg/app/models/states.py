# app/models/states.py

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, Union

from app.models.ast import BoolExpr

Value = Union[str, Fraction]


@dataclass(frozen=True)
class Store:
    """
    Total mapping from attribute names to enum values, in attribute
    declaration order.
    """
    items: tuple[tuple[str, str], ...] = ()

    @classmethod
    def of(cls, mapping: Mapping[str, str], order: tuple[str, ...]) -> "Store":
        return cls(tuple((name, mapping[name]) for name in order))

    def __getitem__(self, attribute: str) -> str:
        for name, value in self.items:
            if name == attribute:
                return value
        raise KeyError(attribute)

    def __contains__(self, attribute: str) -> bool:
        return any(name == attribute for name, _ in self.items)

    def __iter__(self) -> Iterator[str]:
        return (name for name, _ in self.items)

    def as_dict(self) -> dict[str, str]:
        return dict(self.items)

    def updated(self, changes: Mapping[str, str]) -> "Store":
        return Store(tuple((name, changes.get(name, value)) for name, value in self.items))

    def tag(self) -> str:
        return "&".join(f"{name}={value}" for name, value in self.items)

    def __str__(self) -> str:
        return "[" + ", ".join(f"{name}->{value}" for name, value in self.items) + "]"


@dataclass(frozen=True)
class _Marker:
    name: str

    def __str__(self) -> str:
        return self.name


EMPTY = _Marker("eps")
INIT = _Marker("init")


@dataclass(frozen=True)
class OutputOutbox:
    """Last output of a component: sender store, actualized predicate, label."""
    sender: Store
    predicate: Union[bool, BoolExpr]
    label: str

    def predicate_text(self) -> str:
        if isinstance(self.predicate, bool):
            return "true" if self.predicate else "false"
        return str(self.predicate)


Outbox = Union[_Marker, OutputOutbox]


@dataclass(frozen=True)
class ComponentState:
    agent_state: str
    store: Store
    outbox: Outbox

    @property
    def source(self) -> tuple[str, Store]:
        return self.agent_state, self.store


@dataclass(frozen=True)
class ConstBindings:
    """beta: constant name -> exact rational or enum value."""
    values: Mapping[str, Value]

    def __contains__(self, name: str) -> bool:
        return name in self.values

    def __getitem__(self, name: str) -> Value:
        return self.values[name]


StoreDistribution = dict[Store, Fraction]
