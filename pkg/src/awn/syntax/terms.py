"""Sequential process terms, labelling and specifications.

Terms are immutable and compared structurally, labels included.  Hashes
are cached on first use because exploration hashes the same (deep) terms
millions of times.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field, fields, replace
from typing import Iterator, Mapping

from .expr import Expr, Guard


@dataclass(frozen=True, order=True)
class Label:
    proc: str
    index: int

    def __str__(self):
        return f"{self.proc}-:{self.index}"


class Term:
    __slots__ = ()

    def __hash__(self):
        try:
            return self.__dict__["_h"]
        except KeyError:
            h = hash((type(self).__name__,) + tuple(
                getattr(self, f.name) for f in fields(self) if f.compare))
            object.__setattr__(self, "_h", h)
            return h


def _term(cls):
    return dataclass(frozen=True, eq=True)(cls)


@_term
class Assign(Term):
    label: Label | None
    assigns: tuple
    cont: Term
    __hash__ = Term.__hash__


@_term
class GuardT(Term):
    label: Label | None
    guard: Guard
    cont: Term
    __hash__ = Term.__hash__


@_term
class Unicast(Term):
    label: Label | None
    dest: Expr
    msg: Expr
    ok: Term
    fail: Term
    __hash__ = Term.__hash__


@_term
class Broadcast(Term):
    label: Label | None
    msg: Expr
    cont: Term
    __hash__ = Term.__hash__


@_term
class Groupcast(Term):
    label: Label | None
    dests: Expr
    msg: Expr
    cont: Term
    __hash__ = Term.__hash__


@_term
class Send(Term):
    label: Label | None
    msg: Expr
    cont: Term
    __hash__ = Term.__hash__


@_term
class Receive(Term):
    label: Label | None
    var: str
    assigns: tuple
    cont: Term
    __hash__ = Term.__hash__


@_term
class Deliver(Term):
    label: Label | None
    data: Expr
    cont: Term
    __hash__ = Term.__hash__


@_term
class Choice(Term):
    left: Term
    right: Term
    __hash__ = Term.__hash__


@_term
class Call(Term):
    name: str
    __hash__ = Term.__hash__


PREFIXES = (Assign, GuardT, Unicast, Broadcast, Groupcast, Send, Receive, Deliver)


def is_prefix(p: Term) -> bool:
    return isinstance(p, PREFIXES)


def continuations(p: Term) -> tuple:
    """Immediate continuations of a prefix (two for unicast)."""
    if isinstance(p, Unicast):
        return (p.ok, p.fail)
    if is_prefix(p):
        return (p.cont,)
    return ()


def children(p: Term) -> tuple:
    if isinstance(p, Choice):
        return (p.left, p.right)
    return continuations(p)


@dataclass(frozen=True)
class VarDecl:
    name: str
    kind: str
    init: Expr | None = None


@dataclass(frozen=True)
class Spec:
    name: str
    procs: Mapping[str, Term]
    messages: Mapping[str, tuple] = field(default_factory=dict)
    variables: tuple = ()

    def __getitem__(self, pn: str) -> Term:
        return self.procs[pn]

    @property
    def main(self) -> str:
        return next(iter(self.procs))

    def __hash__(self):
        return id(self)


# -- labelling ---------------------------------------------------------------

def labelled(pn: str, p: Term) -> Term:
    """Attach ``(pn, n)`` labels to every prefix in pre-order.

    Both branches of a choice inherit one label, so the two heads of a
    choice always agree.
    """
    counter = itertools.count()

    def go(p, head):
        if isinstance(p, Call):
            return p
        lab = head if head is not None else Label(pn, next(counter))
        if isinstance(p, Choice):
            left = go(p.left, lab)
            return Choice(left, go(p.right, lab))
        if isinstance(p, Unicast):
            ok = go(p.ok, None)
            return replace(p, label=lab, ok=ok, fail=go(p.fail, None))
        return replace(p, label=lab, cont=go(p.cont, None))

    return go(p, None)


def strip_labels(p: Term) -> Term:
    if isinstance(p, Call):
        return p
    if isinstance(p, Choice):
        return Choice(strip_labels(p.left), strip_labels(p.right))
    if isinstance(p, Unicast):
        return replace(p, label=None, ok=strip_labels(p.ok), fail=strip_labels(p.fail))
    return replace(p, label=None, cont=strip_labels(p.cont))


def label_spec(spec: Spec) -> Spec:
    return replace(spec, procs={pn: labelled(pn, p) for pn, p in spec.procs.items()})


class CallCycle(Exception):
    pass


def labels(spec: Spec, p: Term) -> frozenset:
    """Labels of a control term, unwinding choices and calls."""
    out = set()

    def go(q, active):
        while isinstance(q, Call):
            if q.name in active:
                raise CallCycle(f"call cycle through {q.name}")
            active = active | {q.name}
            q = spec[q.name]
        if isinstance(q, Choice):
            go(q.left, active)
            go(q.right, active)
        else:
            out.add(q.label)

    go(p, frozenset())
    return frozenset(out)


def subterms(p: Term) -> set:
    out = set()
    stack = [p]
    while stack:
        q = stack.pop()
        if q in out:
            continue
        out.add(q)
        stack.extend(children(q))
    return out


def iter_prefixes(p: Term) -> Iterator[Term]:
    """Prefix subterms in pre-order (left before right)."""
    stack = [p]
    while stack:
        q = stack.pop()
        if is_prefix(q):
            yield q
        stack.extend(reversed(children(q)))


def simple_labels(spec: Spec) -> bool:
    for p in spec.procs.values():
        for q in subterms(p):
            if len(labels(spec, q)) != 1:
                return False
    return True


def head(p: Term) -> str:
    """One-line rendering of a term's head, used in reports."""
    from .pretty import show_head
    return show_head(p)
