"""Recursive-descent parser for ``.awn`` specification files.

Grammar (EBNF)::

    spec       := messagedecl* procdef+
    messagedecl:= "message" NAME "(" [kind {"," kind}] ")"
    procdef    := "proc" NAME "(" [vardecl {"," vardecl}] ")" "=" term
    vardecl    := NAME ":" vkind ["=" expr]
    kind       := "int" | "ip"
    vkind      := kind | "bool" | "msg" | "msgs"
    term       := seq ["+" term]                      (right associative)
    seq        := prefix "." seq
                | "call" "(" NAME ")"
                | "unicast" "(" expr "," expr ")" "." seq "|>" seq
                | "(" term ")"
    prefix     := "[[" assigns "]]"
                | "<" guard ">"
                | "broadcast" "(" expr ")"
                | "groupcast" "(" expr "," expr ")"
                | "send" "(" expr ")"
                | "deliver" "(" expr ")"
                | "receive" "(" NAME ["->" assigns] ")"
    guard      := "match" NAME "with" NAME "(" [NAME {"," NAME}] ")" ["->" assigns]
                | "choose" NAME "in" expr ".." expr
                | expr
    assigns    := NAME ":=" expr {";" NAME ":=" expr}
    expr       := disj
    disj       := conj {"or" conj}
    conj       := neg {"and" neg}
    neg        := "not" neg | cmp
    cmp        := app [("=" | "!=" | "<" | "<=" | ">" | ">=") app]
    app        := sum {"++" sum}
    sum        := unary {("+" | "-") unary}
    unary      := "-" unary | atom
    atom       := INT | "@" INT | "true" | "false" | "undef" | NAME
                | NAME "(" [expr {"," expr}] ")"
                | "[" [expr {"," expr}] "]" | "(" expr ")"
                | "if" expr "then" expr "else" expr

``#`` starts a comment.  Builtins: max, min, hd, tl, empty.  A ``>``
inside a guard is read as the closing bracket unless the next token can
start an expression.  The identifier ``self`` is bound to the node
address when variable initialisers are evaluated.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

from . import expr as E
from .terms import (Assign, Broadcast, Call, Choice, Deliver, GuardT, Groupcast,
                    Receive, Send, Spec, Unicast, VarDecl, subterms)
from .values import UNDEF, Addr

MSG_KINDS = ("int", "ip")
VAR_KINDS = ("int", "ip", "bool", "msg", "msgs")
KEYWORDS = {
    "message", "proc", "call", "unicast", "broadcast", "groupcast", "send",
    "deliver", "receive", "match", "with", "choose", "in", "and", "or", "not",
    "true", "false", "undef", "if", "then", "else",
}


class ParseError(Exception):
    def __init__(self, msg, line=0, col=0):
        super().__init__(f"{line}:{col}: {msg}" if line else msg)
        self.msg = msg
        self.line = line
        self.col = col


@dataclass(frozen=True)
class Token:
    kind: str      # NAME, INT, ADDR, SYM, EOF
    text: str
    line: int
    col: int


_TOKEN_RE = re.compile(r"""
    (?P<ws>[ \t\r]+) | (?P<nl>\n) | (?P<comment>\#[^\n]*)
  | (?P<addr>@\d+) | (?P<int>\d+) | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<sym>:=|->|\|>|\.\.|\+\+|<=|>=|!=|[()\[\]<>.+\-,;:=])
""", re.VERBOSE)


def tokenize(text: str) -> list[Token]:
    out = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            out.append(Token(kind.upper(), m.group(), line, col))
        pos = m.end()
    out.append(Token("EOF", "", line, pos - line_start + 1))
    return out


_EXPR_START = {"(", "[", "-"}
_EXPR_START_WORDS = {"true", "false", "undef", "if", "not"}


class Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0
        self.messages: dict[str, tuple] = {}
        self.calls: list[tuple[str, Token]] = []

    # -- token helpers
    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def peek(self, k=1) -> Token:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def error(self, msg, tok=None):
        tok = tok or self.tok
        return ParseError(msg, tok.line, tok.col)

    def at(self, text) -> bool:
        t = self.tok
        return t.kind in ("SYM", "NAME") and t.text == text

    def accept(self, text) -> bool:
        if self.at(text):
            self.i += 1
            return True
        return False

    def expect(self, text) -> Token:
        if not self.at(text):
            found = self.tok.text or "end of input"
            raise self.error(f"expected {text!r}, found {found!r}")
        t = self.tok
        self.i += 1
        return t

    def name(self) -> str:
        t = self.tok
        if t.kind != "NAME" or t.text in KEYWORDS:
            raise self.error(f"expected identifier, found {t.text or 'end of input'!r}")
        self.i += 1
        return t.text

    def starts_expr(self, t: Token) -> bool:
        if t.kind in ("INT", "ADDR"):
            return True
        if t.kind == "NAME":
            return t.text not in KEYWORDS or t.text in _EXPR_START_WORDS
        return t.kind == "SYM" and t.text in _EXPR_START

    # -- declarations
    def spec(self, name: str) -> Spec:
        while self.at("message"):
            self.message_decl()
        procs = {}
        variables: dict[str, VarDecl] = {}
        if not self.at("proc"):
            raise self.error("expected at least one 'proc' definition")
        while self.at("proc"):
            start = self.tok
            self.expect("proc")
            pn = self.name()
            if pn in procs:
                raise self.error(f"duplicate process name {pn}", start)
            self.expect("(")
            decls = []
            if not self.at(")"):
                decls.append(self.var_decl())
                while self.accept(","):
                    decls.append(self.var_decl())
            self.expect(")")
            for d in decls:
                old = variables.get(d.name)
                if old is not None and old != d:
                    raise self.error(f"conflicting declarations of variable {d.name}", start)
                variables[d.name] = d
            self.expect("=")
            procs[pn] = self.term()
        if self.tok.kind != "EOF":
            raise self.error(f"unexpected {self.tok.text!r}")
        for pn, tok in self.calls:
            if pn not in procs:
                raise ParseError(f"unknown process name {pn}", tok.line, tok.col)
        return Spec(name, procs, dict(self.messages), tuple(variables.values()))

    def message_decl(self):
        self.expect("message")
        tok = self.tok
        ctor = self.name()
        if ctor in self.messages:
            raise self.error(f"duplicate message constructor {ctor}", tok)
        self.expect("(")
        kinds = []
        if not self.at(")"):
            kinds.append(self.kind(MSG_KINDS))
            while self.accept(","):
                kinds.append(self.kind(MSG_KINDS))
        self.expect(")")
        self.messages[ctor] = tuple(kinds)

    def kind(self, allowed) -> str:
        t = self.tok
        if t.kind != "NAME" or t.text not in allowed:
            raise self.error(f"expected one of {', '.join(allowed)}")
        self.i += 1
        return t.text

    def var_decl(self) -> VarDecl:
        n = self.name()
        self.expect(":")
        k = self.kind(VAR_KINDS)
        init = self.expr() if self.accept("=") else None
        return VarDecl(n, k, init)

    # -- terms
    def term(self):
        left = self.seq()
        if self.accept("+"):
            return Choice(left, self.term())
        return left

    def seq(self):
        t = self.tok
        if self.accept("call"):
            self.expect("(")
            pn_tok = self.tok
            pn = self.name()
            self.expect(")")
            self.calls.append((pn, pn_tok))
            return Call(pn)
        if self.accept("unicast"):
            self.expect("(")
            dest = self.expr()
            self.expect(",")
            msg = self.expr()
            self.expect(")")
            self.expect(".")
            ok = self.seq()
            self.expect("|>")
            return Unicast(None, dest, msg, ok, self.seq())
        if self.at("(") :
            self.i += 1
            p = self.term()
            self.expect(")")
            return p
        make = self.prefix()
        if make is None:
            raise self.error(f"expected a process term, found {t.text or 'end of input'!r}")
        self.expect(".")
        return make(self.seq())

    def prefix(self):
        if self.at("[") and self.peek().kind == "SYM" and self.peek().text == "[":
            self.i += 2
            assigns = self.assigns()
            self.expect("]")
            self.expect("]")
            return lambda k: Assign(None, assigns, k)
        if self.accept("<"):
            g = self.guard()
            self.expect(">")
            return lambda k: GuardT(None, g, k)
        if self.accept("broadcast"):
            m = self.paren_exprs(1)[0]
            return lambda k: Broadcast(None, m, k)
        if self.accept("groupcast"):
            ds, m = self.paren_exprs(2)
            return lambda k: Groupcast(None, ds, m, k)
        if self.accept("send"):
            m = self.paren_exprs(1)[0]
            return lambda k: Send(None, m, k)
        if self.accept("deliver"):
            d = self.paren_exprs(1)[0]
            return lambda k: Deliver(None, d, k)
        if self.accept("receive"):
            self.expect("(")
            x = self.name()
            assigns = self.assigns() if self.accept("->") else ()
            self.expect(")")
            return lambda k: Receive(None, x, assigns, k)
        return None

    def paren_exprs(self, n):
        self.expect("(")
        out = [self.expr()]
        for _ in range(n - 1):
            self.expect(",")
            out.append(self.expr())
        self.expect(")")
        return out

    def assigns(self) -> tuple:
        out = [self.assign()]
        while self.accept(";"):
            out.append(self.assign())
        return tuple(out)

    def assign(self):
        x = self.name()
        self.expect(":=")
        return (x, self.expr())

    def guard(self):
        if self.accept("match"):
            x = self.name()
            self.expect("with")
            tok = self.tok
            ctor = self.name()
            self.expect("(")
            params = []
            if not self.at(")"):
                params.append(self.name())
                while self.accept(","):
                    params.append(self.name())
            self.expect(")")
            self.check_ctor(ctor, len(params), tok)
            assigns = self.assigns() if self.accept("->") else ()
            return E.MatchBind(x, ctor, tuple(params), assigns)
        if self.accept("choose"):
            x = self.name()
            self.expect("in")
            lo = self.expr()
            self.expect("..")
            return E.Choose(x, lo, self.expr())
        return E.Filter(self.expr())

    def check_ctor(self, ctor, arity, tok):
        if ctor not in self.messages:
            raise self.error(f"undeclared message constructor {ctor}", tok)
        want = len(self.messages[ctor])
        if want != arity:
            raise self.error(f"{ctor} expects {want} arguments, got {arity}", tok)

    # -- expressions
    def expr(self):
        e = self.conj()
        while self.accept("or"):
            e = E.BinOp("or", e, self.conj())
        return e

    def conj(self):
        e = self.neg()
        while self.accept("and"):
            e = E.BinOp("and", e, self.neg())
        return e

    def neg(self):
        if self.accept("not"):
            return E.Not(self.neg())
        return self.cmp()

    def cmp(self):
        e = self.app()
        t = self.tok
        if t.kind == "SYM" and t.text in ("=", "!=", "<", "<=", ">", ">="):
            if t.text == ">" and not self.starts_expr(self.peek()):
                return e
            self.i += 1
            return E.BinOp(t.text, e, self.app())
        return e

    def app(self):
        e = self.sum()
        while self.accept("++"):
            e = E.BinOp("++", e, self.sum())
        return e

    def sum(self):
        e = self.unary()
        while self.at("+") or self.at("-"):
            op = self.tok.text
            self.i += 1
            e = E.BinOp(op, e, self.unary())
        return e

    def unary(self):
        if self.accept("-"):
            e = self.unary()
            if isinstance(e, E.Lit) and type(e.value) is int:
                return E.Lit(-e.value)
            return E.BinOp("-", E.Lit(0), e)
        return self.atom()

    def atom(self):
        t = self.tok
        if t.kind == "INT":
            self.i += 1
            return E.Lit(int(t.text))
        if t.kind == "ADDR":
            self.i += 1
            return E.Lit(Addr(int(t.text[1:])))
        if self.accept("true"):
            return E.Lit(True)
        if self.accept("false"):
            return E.Lit(False)
        if self.accept("undef"):
            return E.Lit(UNDEF)
        if self.accept("if"):
            c = self.expr()
            self.expect("then")
            a = self.expr()
            self.expect("else")
            return E.Cond(c, a, self.expr())
        if self.accept("("):
            e = self.expr()
            self.expect(")")
            return e
        if self.accept("["):
            items = []
            if not self.at("]"):
                items.append(self.expr())
                while self.accept(","):
                    items.append(self.expr())
            self.expect("]")
            return E.ListLit(tuple(items))
        if t.kind == "NAME" and t.text not in KEYWORDS:
            self.i += 1
            if not self.at("("):
                return E.Var(t.text)
            self.i += 1
            args = []
            if not self.at(")"):
                args.append(self.expr())
                while self.accept(","):
                    args.append(self.expr())
            self.expect(")")
            if t.text in E.BUILTINS:
                if len(args) != E.BUILTINS[t.text]:
                    raise self.error(f"{t.text} expects {E.BUILTINS[t.text]} arguments", t)
                return E.Func(t.text, tuple(args))
            self.check_ctor(t.text, len(args), t)
            return E.MsgCons(t.text, tuple(args))
        raise self.error(f"expected an expression, found {t.text or 'end of input'!r}")


def parse_spec(text: str, name: str = "spec") -> Spec:
    """Parse DSL source into an unlabelled Spec."""
    return Parser(text).spec(name)


def parse_expr(text: str, messages=None) -> E.Expr:
    p = Parser(text)
    p.messages = dict(messages or {})
    e = p.expr()
    if p.tok.kind != "EOF":
        raise p.error(f"unexpected {p.tok.text!r}")
    return e


def call_targets(spec: Spec) -> set[str]:
    return {q.name for p in spec.procs.values() for q in subterms(p) if isinstance(q, Call)}
