"""Runtime values and data states.

Ints and bools are plain Python objects; addresses, messages and the
undefined marker get their own small types so that kinds stay distinct
under structural equality.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping


@dataclass(frozen=True, order=True)
class Addr:
    ip: int

    def __str__(self):
        return f"@{self.ip}"


@dataclass(frozen=True)
class Msg:
    ctor: str
    args: tuple = ()

    def __str__(self):
        return f"{self.ctor}({', '.join(show_value(a) for a in self.args)})"


class _Undef:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "UNDEF"

    def __reduce__(self):
        return (_Undef, ())


UNDEF = _Undef()


def show_value(v) -> str:
    if v is UNDEF:
        return "undef"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, tuple):
        return "[" + ", ".join(show_value(x) for x in v) + "]"
    return str(v)


def value_to_json(v):
    """Canonical JSON-compatible encoding of a value."""
    if v is UNDEF:
        return None
    if isinstance(v, (bool, int)):
        return v
    if isinstance(v, Addr):
        return {"ip": v.ip}
    if isinstance(v, Msg):
        return {"msg": v.ctor, "args": [value_to_json(a) for a in v.args]}
    if isinstance(v, tuple):
        return [value_to_json(x) for x in v]
    raise TypeError(f"not a value: {v!r}")


def value_kind(v) -> str:
    if v is UNDEF:
        return "undef"
    if isinstance(v, bool):
        return "bool"
    if isinstance(v, int):
        return "int"
    if isinstance(v, Addr):
        return "ip"
    if isinstance(v, Msg):
        return "msg"
    if isinstance(v, tuple):
        return "msgs"
    raise TypeError(f"not a value: {v!r}")


class DataState(Mapping):
    """Immutable variable environment.

    Keys keep their insertion order so that rendering and iteration are
    deterministic; equality and hashing ignore order.
    """

    __slots__ = ("_d", "_hash")

    def __init__(self, items=()):
        self._d = dict(items)
        self._hash = None

    def __getitem__(self, name):
        return self._d[name]

    def __iter__(self) -> Iterator[str]:
        return iter(self._d)

    def __len__(self):
        return len(self._d)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._d.items()))
        return self._hash

    def __eq__(self, other):
        if self is other:
            return True
        if isinstance(other, DataState):
            return self._d == other._d
        return NotImplemented

    def __repr__(self):
        inner = ", ".join(f"{k}={show_value(v)}" for k, v in self._d.items())
        return f"DataState({inner})"

    def update(self, changes: Mapping) -> "DataState":
        if not changes:
            return self
        d = dict(self._d)
        d.update(changes)
        return DataState(d)

    def to_json(self):
        return {k: value_to_json(v) for k, v in self._d.items()}
