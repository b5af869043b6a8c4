"""Expressions, guards and assignments over data states."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .values import UNDEF, Addr, DataState, Msg, show_value, value_kind


class EvalError(Exception):
    """A typed evaluation failure (unbound variable, kind mismatch, hd of [])."""


# -- expressions -------------------------------------------------------------

class Expr:
    __slots__ = ()


@dataclass(frozen=True)
class Var(Expr):
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Lit(Expr):
    value: object

    def __str__(self):
        return show_value(self.value)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


@dataclass(frozen=True)
class Not(Expr):
    arg: Expr

    def __str__(self):
        return f"not {self.arg}"


@dataclass(frozen=True)
class Func(Expr):
    """Builtin function application: max, min, hd, tl, empty."""
    name: str
    args: tuple

    def __str__(self):
        return f"{self.name}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class MsgCons(Expr):
    ctor: str
    args: tuple

    def __str__(self):
        return f"{self.ctor}({', '.join(map(str, self.args))})"


@dataclass(frozen=True)
class ListLit(Expr):
    items: tuple

    def __str__(self):
        return "[" + ", ".join(map(str, self.items)) + "]"


@dataclass(frozen=True)
class Cond(Expr):
    test: Expr
    then: Expr
    orelse: Expr

    def __str__(self):
        return f"(if {self.test} then {self.then} else {self.orelse})"


BUILTINS = {"max": 2, "min": 2, "hd": 1, "tl": 1, "empty": 1}
ARITH = {"+", "-"}
ORDER = {"<", "<=", ">", ">="}
EQUALITY = {"=", "!="}
LOGIC = {"and", "or"}


def _want(v, kind, what):
    if value_kind(v) != kind:
        raise EvalError(f"{what}: expected {kind}, got {show_value(v)}")
    return v


def _order_key(v, what):
    if isinstance(v, bool) or v is UNDEF:
        raise EvalError(f"{what}: cannot order {show_value(v)}")
    if isinstance(v, int):
        return v
    if isinstance(v, Addr):
        return v.ip
    raise EvalError(f"{what}: cannot order {show_value(v)}")


def eval_expr(e: Expr, env: Mapping):
    """Evaluate ``e`` in ``env``; raises EvalError instead of returning junk."""
    if isinstance(e, Var):
        try:
            return env[e.name]
        except KeyError:
            raise EvalError(f"unbound variable {e.name}") from None
    if isinstance(e, Lit):
        return e.value
    if isinstance(e, BinOp):
        op = e.op
        if op in LOGIC:
            a = _want(eval_expr(e.left, env), "bool", op)
            if op == "and" and not a:
                return False
            if op == "or" and a:
                return True
            return _want(eval_expr(e.right, env), "bool", op)
        a = eval_expr(e.left, env)
        b = eval_expr(e.right, env)
        if op in ARITH:
            _want(a, "int", op)
            _want(b, "int", op)
            return a + b if op == "+" else a - b
        if op in EQUALITY:
            if a is UNDEF or b is UNDEF:
                raise EvalError(f"{op}: comparison with undef")
            same = value_kind(a) == value_kind(b) and a == b
            return same if op == "=" else not same
        if op in ORDER:
            ka, kb = value_kind(a), value_kind(b)
            if ka != kb:
                raise EvalError(f"{op}: kind mismatch {ka} vs {kb}")
            x, y = _order_key(a, op), _order_key(b, op)
            return {"<": x < y, "<=": x <= y, ">": x > y, ">=": x >= y}[op]
        if op == "++":
            return _want(a, "msgs", op) + _want(b, "msgs", op)
        raise EvalError(f"unknown operator {op}")
    if isinstance(e, Not):
        return not _want(eval_expr(e.arg, env), "bool", "not")
    if isinstance(e, Func):
        args = [eval_expr(a, env) for a in e.args]
        if e.name in ("max", "min"):
            a, b = (_want(x, "int", e.name) for x in args)
            return max(a, b) if e.name == "max" else min(a, b)
        xs = _want(args[0], "msgs", e.name)
        if e.name == "empty":
            return len(xs) == 0
        if not xs:
            raise EvalError(f"{e.name} of empty list")
        return xs[0] if e.name == "hd" else xs[1:]
    if isinstance(e, MsgCons):
        args = tuple(eval_expr(a, env) for a in e.args)
        for a in args:
            if value_kind(a) not in ("int", "ip"):
                raise EvalError(f"{e.ctor}: bad argument {show_value(a)}")
        return Msg(e.ctor, args)
    if isinstance(e, ListLit):
        items = tuple(eval_expr(x, env) for x in e.items)
        # message queues or address sets for groupcast, never mixed
        kind = value_kind(items[0]) if items else "msg"
        if kind not in ("msg", "ip"):
            raise EvalError(f"list literal: bad item {show_value(items[0])}")
        return tuple(_want(v, kind, "list literal") for v in items)
    if isinstance(e, Cond):
        if _want(eval_expr(e.test, env), "bool", "if"):
            return eval_expr(e.then, env)
        return eval_expr(e.orelse, env)
    raise TypeError(f"not an expression: {e!r}")


# -- assignments and guards --------------------------------------------------

def run_assigns(assigns, xi: DataState, extra: Mapping | None = None) -> DataState:
    """Apply ``x := e`` pairs left to right; ``extra`` holds temporaries."""
    env = dict(xi)
    if extra:
        env.update(extra)
    changes = {}
    for name, e in assigns:
        v = eval_expr(e, env)
        env[name] = v
        changes[name] = v
    return xi.update(changes)


def show_assigns(assigns) -> str:
    return "; ".join(f"{x} := {e}" for x, e in assigns)


class Guard:
    __slots__ = ()


@dataclass(frozen=True)
class Filter(Guard):
    cond: Expr

    def __str__(self):
        return str(self.cond)


@dataclass(frozen=True)
class MatchBind(Guard):
    """``match x with C(y1, .., yn) -> assigns``; the yk are temporaries."""
    var: str
    ctor: str
    params: tuple
    assigns: tuple

    def __str__(self):
        pat = f"{self.ctor}({', '.join(self.params)})"
        if not self.assigns:
            return f"match {self.var} with {pat}"
        return f"match {self.var} with {pat} -> {show_assigns(self.assigns)}"


@dataclass(frozen=True)
class Choose(Guard):
    var: str
    lo: Expr
    hi: Expr

    def __str__(self):
        return f"choose {self.var} in {self.lo}..{self.hi}"


def apply_guard(g: Guard, xi: DataState) -> list[DataState]:
    """Successor data states of a guard, in a deterministic order."""
    if isinstance(g, Filter):
        return [xi] if _want(eval_expr(g.cond, xi), "bool", "guard") else []
    if isinstance(g, MatchBind):
        v = eval_expr(Var(g.var), xi)
        if not isinstance(v, Msg) or v.ctor != g.ctor:
            if v is UNDEF:
                raise EvalError(f"match on undefined {g.var}")
            return []
        if len(v.args) != len(g.params):
            raise EvalError(f"{g.ctor}: arity mismatch in pattern")
        return [run_assigns(g.assigns, xi, dict(zip(g.params, v.args)))]
    if isinstance(g, Choose):
        lo = _want(eval_expr(g.lo, xi), "int", "choose")
        hi = _want(eval_expr(g.hi, xi), "int", "choose")
        return [xi.update({g.var: k}) for k in range(lo, hi + 1)]
    raise TypeError(f"not a guard: {g!r}")
