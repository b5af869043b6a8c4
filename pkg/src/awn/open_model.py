"""Open semantics: one node evolves its own entry of a global state while an
environment, constrained by assumptions, may change every other entry."""
from __future__ import annotations

from collections.abc import Mapping
from dataclasses import dataclass
from itertools import product
from typing import Callable, NamedTuple

from .semantics import Action, Automaton, ReceiveA, Step, seqp_receive, seqp_trans, ProcState
from .syntax.terms import Spec, Term
from .syntax.values import Addr, DataState, Msg
from .verify import Budget, check_invariant, explore


class GlobalState(Mapping):
    """Total, immutable map from the declared addresses to data states."""
    __slots__ = ("_items", "_d", "_h")

    def __init__(self, entries):
        d = dict(entries)
        self._d = d
        self._items = tuple(sorted(d.items(), key=lambda kv: kv[0].ip))
        self._h = hash(self._items)

    def __getitem__(self, i):
        return self._d[i]

    def __iter__(self):
        return iter(k for k, _ in self._items)

    def __len__(self):
        return len(self._items)

    def __hash__(self):
        return self._h

    def __eq__(self, other):
        return isinstance(other, GlobalState) and self._items == other._items

    def set(self, i, xi) -> "GlobalState":
        d = dict(self._d)
        d[i] = xi
        return GlobalState(d)

    def to_json(self):
        return {str(k.ip): v.to_json() for k, v in self._items}

    def __repr__(self):
        return f"GlobalState({self.to_json()})"


class OState(NamedTuple):
    sigma: GlobalState
    p: Term

    def to_json(self):
        from .syntax.pretty import show_head
        return {"sigma": self.sigma.to_json(), "p": show_head(self.p)}


@dataclass(frozen=True)
class EnvA(Action):
    """An environment step: entries other than the local node change."""

    def __str__(self):
        return "env"


ENV = EnvA()


@dataclass(frozen=True)
class Environment:
    """Finite menu of updates the environment may apply to one entry.

    Each entry may stay put, increase ``no`` by one up to ``no_cap``, or
    point ``nhid`` at any declared address.
    """
    addresses: tuple
    no_cap: int = 3
    frozen: bool = False

    def updates(self, j: Addr, xi: DataState) -> list:
        out = [xi]
        if self.frozen:
            return out
        if isinstance(xi.get("no"), int) and xi["no"] < self.no_cap:
            out.append(xi.update({"no": xi["no"] + 1}))
        if "nhid" in xi:
            out.extend(xi.update({"nhid": a}) for a in self.addresses if a != xi["nhid"])
        return out


def env_choices(env: Environment, i: Addr, sigma: GlobalState) -> list:
    """Every combination of per-entry updates for the entries other than ``i``."""
    others = [j for j in sigma if j != i]
    out = []
    for combo in product(*(env.updates(j, sigma[j]) for j in others)):
        d = dict(zip(others, combo))
        d[i] = sigma[i]
        out.append(GlobalState(d))
    return out


# -- assumptions -------------------------------------------------------------

def otherwith(E: Callable, N, I: Callable) -> Callable:
    """Synchronised-step assumption: entries outside N change per E and I(sigma, a)."""
    N = frozenset(N)
    return lambda sigma, sigma2, a: (all(E(sigma[j], sigma2[j]) for j in sigma if j not in N)
                                     and I(sigma, a))


def other(F: Callable, N) -> Callable:
    """Interleaved-step assumption: entries in N stay, the others change per F."""
    N = frozenset(N)
    return lambda sigma, sigma2: all(sigma2[j] == sigma[j] if j in N else F(sigma[j], sigma2[j])
                                     for j in sigma)


def orecvmsg(M: Callable) -> Callable:
    """Apply M to received messages; every other action is accepted."""
    return lambda sigma, a: M(sigma, a.msg) if isinstance(a, ReceiveA) else True


def msg_ok(sigma, m: Msg) -> bool:
    if m.ctor == "pkt":
        d, src = m.args
        return d <= sigma[src]["no"]
    return True


def nos_inc(xi, xi2) -> bool:
    return xi["no"] <= xi2["no"]


def anything(*_):
    return True


def unchanged(sigma, sigma2) -> bool:
    return sigma == sigma2


# -- automaton ----------------------------------------------------------------

def oseqp_steps(i: Addr, spec: Spec, s: OState, env: Environment, universe=()) -> list:
    """Local steps of node ``i``, each paired with every environment choice."""
    local = ProcState(s.sigma[i], s.p)
    moves = list(seqp_trans(spec, local))
    for m in universe:
        moves.extend(Step(ReceiveA(m), t) for t in seqp_receive(spec, local, m))
    if not moves:
        return []
    choices = env_choices(env, i, s.sigma)
    return [Step(a, OState(sig.set(i, t.xi), t.p)) for a, t in moves for sig in choices]


def mk_oseqp(spec: Spec, i, init_sigma: GlobalState, env: Environment, universe=(),
             S: Callable = None, U: Callable = None) -> Automaton:
    """Open automaton of node ``i`` with synchronised (S) and interleaved (U) assumptions.

    S defaults to accepting any step, U to rejecting every environment move.
    """
    i = i if isinstance(i, Addr) else Addr(i)
    S = S or (lambda *_: True)

    def trans(s: OState):
        out = [st for st in oseqp_steps(i, spec, s, env, universe)
               if S(s.sigma, st.target.sigma, st.action)]
        if U is not None:
            for sig in env_choices(env, i, s.sigma):
                if sig != s.sigma and U(s.sigma, sig):
                    out.append(Step(ENV, OState(sig, s.p)))
        return out

    return Automaton((OState(init_sigma, spec[spec.main]),), trans, kind="open",
                     info={"addr": i, "spec": spec})


def oreachable_explore(A: Automaton, budget: Budget = Budget(), jobs: int = 1):
    return explore(A, None, budget, jobs)


def check_oinvariant(A: Automaton, P: Callable, budget: Budget = Budget(), jobs: int = 1):
    return check_invariant(A, P, None, budget, jobs)
