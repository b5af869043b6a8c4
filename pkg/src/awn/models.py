"""Built-in fixtures: the toy protocol, the message queue, example nets and
a catalog of named invariants with their expected verdicts."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from importlib.resources import files
from typing import Callable

from .semantics import (Automaton, NetPar, ReceiveA, SendA, closed, init_state,
                        injections, mk_par, mk_seqp, node, pnet)
from .syntax import Addr, DataState, Msg, Spec, label_spec, parse_spec
from .verify import Budget, first_component, netglobal, onl


def load_fixture(name: str) -> str:
    return files("awn.specs").joinpath(f"{name}.awn").read_text()


@lru_cache(maxsize=None)
def toy_spec() -> Spec:
    return label_spec(parse_spec(load_fixture("toy"), "toy"))


@lru_cache(maxsize=None)
def mutated_toy_spec() -> Spec:
    """Toy protocol with the ``num > no`` guard replaced by ``true``."""
    src = load_fixture("toy")
    assert src.count("< num > no >") == 1
    return label_spec(parse_spec(src.replace("< num > no >", "< true >"), "toy-mutant"))


@lru_cache(maxsize=None)
def qmsg_spec() -> Spec:
    return label_spec(parse_spec(load_fixture("qmsg"), "qmsg"))


def toy_init(i) -> DataState:
    return init_state(toy_spec(), i if isinstance(i, Addr) else Addr(i))


def toy_universe(data=range(3), addrs=(1, 2)) -> tuple:
    return tuple(Msg(c, (d, Addr(s))) for c in ("pkt", "newpkt") for d in data for s in addrs)


def ptoy(i, universe=None, spec: Spec | None = None) -> Automaton:
    """Toy protocol at node ``i`` as a stand-alone sequential automaton."""
    universe = toy_universe() if universe is None else universe
    return mk_seqp(spec or toy_spec(), i, universe)


def qmsg(universe=()) -> Automaton:
    return mk_seqp(qmsg_spec(), None, universe)


def toy_node_proc(spec: Spec | None = None) -> Callable:
    """Factory i -> ptoy(i) << qmsg, sharing one queue automaton."""
    q = qmsg()
    return lambda i: mk_par(mk_seqp(spec or toy_spec(), i), q)


LINEAR3 = NetPar(node(1, {2}), NetPar(node(2, {1, 3}), node(3, {2})))
PAIR2 = NetPar(node(1, {2}), node(2, {1}))
NETS = {"linear3": LINEAR3, "pair2": PAIR2}


def toy_net(tree=LINEAR3, data=(1, 2), topology_changes=False, spec: Spec | None = None,
            dsts=None) -> Automaton:
    net = pnet(toy_node_proc(spec), tree)
    if dsts is not None:
        dsts = [d if isinstance(d, Addr) else Addr(d) for d in dsts]
    return closed(net, injections(data, net.ips, dsts), topology_changes)


# -- invariants --------------------------------------------------------------

def inv1(spec: Spec) -> Callable:
    """Between taking a message and updating nhid from it, nhid equals id."""
    return onl(spec, lambda xi, l: not (2 <= l.index <= 8) or xi["nhid"] == xi["id"])


def inv2(s, a, t) -> bool:
    """The value of no never decreases."""
    return s.xi["no"] <= t.xi["no"]


def inv4(spec: Spec) -> Callable:
    """Right before no := num, num is at least no."""
    return onl(spec, lambda xi, l: l.index != 7 or xi["no"] <= xi["num"])


def no_is_zero(s) -> bool:
    return s.xi["no"] == 0


def next_hop_no(sigma, i) -> bool:
    """no at i is at most no at i's next hop."""
    xi = sigma[i]
    return xi["no"] <= sigma[xi["nhid"]]["no"]


def inv3() -> Callable:
    # addresses outside the net default to toy_init, where nhid = id
    return netglobal(lambda sigma: all(next_hop_no(sigma, i) for i in sigma),
                     toy_init, first_component)


def qprops(s, a, t) -> bool:
    """Queue contents only grow by received messages; sends come from the head."""
    old, new = s.xi["msgs"], t.xi["msgs"]
    if isinstance(a, ReceiveA):
        if not set(new) <= set(old + (a.msg,)):
            return False
    elif not set(new) <= set(old):
        return False
    if isinstance(a, SendA):
        return bool(old) and a.msg == old[0]
    return True


@dataclass(frozen=True)
class Invariant:
    name: str
    level: str          # "seq", "step", "net" or "open"
    build: Callable     # spec -> predicate
    expected: str
    doc: str


CATALOG = {
    "inv1": Invariant("inv1", "seq", inv1, "holds", inv1.__doc__),
    "inv2": Invariant("inv2", "step", lambda spec: inv2, "holds", inv2.__doc__),
    "inv3": Invariant("inv3", "net", lambda spec: inv3(), "holds",
                      "Along next-hop links no never decreases."),
    "inv4": Invariant("inv4", "seq", inv4, "holds", inv4.__doc__),
    "no_is_zero": Invariant("no_is_zero", "seq", lambda spec: no_is_zero, "violated",
                            "Deliberately false: no stays 0."),
    "qprops": Invariant("qprops", "step", lambda spec: qprops, "holds", qprops.__doc__),
    "inv9": Invariant("inv9", "open", lambda spec: inv9(1), "holds",
                      "Open model: no at i is at most no at its next hop."),
}

DEFAULT_BUDGET = Budget(max_states=200_000, max_depth=200)


# -- open model of the toy protocol ------------------------------------------

def optoy(i=1, addresses=(1, 2), no_cap=3, data=None, with_msg_ok=True, frozen=False):
    """Open toy automaton for node ``i`` over a fixed address set.

    Synchronised steps let other entries only raise ``no`` and, unless
    ``with_msg_ok`` is off, only accept packets whose number does not
    exceed the sender's current ``no``.  Interleaved environment moves
    keep entry ``i`` and only raise ``no`` elsewhere.  ``frozen`` removes
    the environment altogether.
    """
    from .open_model import (Environment, GlobalState, anything, mk_oseqp, msg_ok,
                             nos_inc, orecvmsg, other, otherwith)
    addrs = tuple(Addr(a) for a in addresses)
    i = Addr(i)
    data = range(no_cap + 1) if data is None else data
    universe = toy_universe(data, addresses)
    sigma0 = GlobalState({a: toy_init(a) for a in addrs})
    if frozen:
        return mk_oseqp(toy_spec(), i, sigma0, Environment(addrs, no_cap, frozen=True), universe)
    S = otherwith(nos_inc, {i}, orecvmsg(msg_ok) if with_msg_ok else anything)
    U = other(nos_inc, {i})
    return mk_oseqp(toy_spec(), i, sigma0, Environment(addrs, no_cap), universe, S, U)


def inv9(i=1) -> Callable:
    i = Addr(i)
    return lambda s: next_hop_no(s.sigma, i)
