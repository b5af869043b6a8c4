"""Transition enumeration for sequential processes, local parallel
composition, nodes, partial networks and closed networks.

Every automaton exposes two functions.  ``trans(s)`` lists the steps that
do not need an external message.  ``receive(s, m)`` lists successor states
for an incoming message ``m``; higher layers call it with exactly the
messages their partners offer, so closed networks are explored exactly.
``steps(s)`` adds receive steps over the automaton's own message universe
for stand-alone exploration.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable, NamedTuple

from .syntax.expr import apply_guard, eval_expr, run_assigns
from .syntax.terms import (Assign, Broadcast, Call, Choice, Deliver, GuardT,
                           Groupcast, Receive, Send, Spec, Term, Unicast)
from .syntax.values import UNDEF, Addr, DataState, Msg, show_value, value_to_json
from .syntax.expr import EvalError


# -- actions -----------------------------------------------------------------

def _ips(xs) -> str:
    return "{" + ",".join(str(a.ip) for a in sorted(xs)) + "}"


class Action:
    __slots__ = ()


@dataclass(frozen=True)
class BroadcastA(Action):
    msg: Msg

    def __str__(self):
        return f"broadcast({self.msg})"


@dataclass(frozen=True)
class GroupcastA(Action):
    dests: frozenset
    msg: Msg

    def __str__(self):
        return f"groupcast({_ips(self.dests)}, {self.msg})"


@dataclass(frozen=True)
class UnicastA(Action):
    dest: Addr
    msg: Msg

    def __str__(self):
        return f"unicast({self.dest.ip}, {self.msg})"


@dataclass(frozen=True)
class NotUnicast(Action):
    dest: Addr

    def __str__(self):
        return f"not-unicast({self.dest.ip})"


@dataclass(frozen=True)
class SendA(Action):
    msg: Msg

    def __str__(self):
        return f"send({self.msg})"


@dataclass(frozen=True)
class ReceiveA(Action):
    msg: Msg

    def __str__(self):
        return f"receive({self.msg})"


@dataclass(frozen=True)
class DeliverA(Action):
    data: object

    def __str__(self):
        return f"deliver({show_value(self.data)})"


@dataclass(frozen=True)
class TauA(Action):
    def __str__(self):
        return "tau"


TAU = TauA()


@dataclass(frozen=True)
class StarCast(Action):
    R: frozenset
    msg: Msg

    def __str__(self):
        return f"{_ips(self.R)}:*cast({self.msg})"


@dataclass(frozen=True)
class Arrive(Action):
    H: frozenset
    K: frozenset
    msg: Msg

    def __str__(self):
        return f"{_ips(self.H)}~{_ips(self.K)}:arrive({self.msg})"


@dataclass(frozen=True)
class NodeDeliver(Action):
    i: Addr
    data: object

    def __str__(self):
        return f"{self.i.ip}:deliver({show_value(self.data)})"


@dataclass(frozen=True)
class Connect(Action):
    a: Addr
    b: Addr

    def __str__(self):
        return f"connect({self.a.ip}, {self.b.ip})"


@dataclass(frozen=True)
class Disconnect(Action):
    a: Addr
    b: Addr

    def __str__(self):
        return f"disconnect({self.a.ip}, {self.b.ip})"


@dataclass(frozen=True)
class NewPkt(Action):
    i: Addr
    data: object
    dst: Addr

    def __str__(self):
        return f"{self.i.ip}:newpkt({show_value(self.data)}, {self.dst.ip})"


class Step(NamedTuple):
    action: Action
    target: object


# -- states ------------------------------------------------------------------

class ProcState(NamedTuple):
    xi: DataState
    p: Term


class NodeState:
    """Node state (i, inner, R).

    Instances are interned: building an equal triple returns the same
    object, so equality and hashing are by identity and cost nothing
    when whole networks of node states are hashed during exploration.
    """
    __slots__ = ("i", "inner", "R")
    _table: dict = {}

    def __new__(cls, i: Addr, inner, R: frozenset):
        key = (i, inner, R)
        n = cls._table.get(key)
        if n is None:
            n = object.__new__(cls)
            object.__setattr__(n, "i", i)
            object.__setattr__(n, "inner", inner)
            object.__setattr__(n, "R", R)
            cls._table[key] = n
        return n

    def __setattr__(self, name, value):
        raise AttributeError("NodeState is immutable")

    def __iter__(self):
        return iter((self.i, self.inner, self.R))

    def __reduce__(self):
        return NodeState, (self.i, self.inner, self.R)

    def __repr__(self):
        return f"NodeState({self.i!r}, {self.inner!r}, {set(self.R)!r})"


class SubnetState(NamedTuple):
    left: object
    right: object


@dataclass(frozen=True)
class NetNode:
    i: Addr
    R0: frozenset

    def __str__(self):
        return f"<{self.i.ip}; {_ips(self.R0)}>"


@dataclass(frozen=True)
class NetPar:
    left: object
    right: object

    def __str__(self):
        return f"({self.left} || {self.right})"


def node(i: int, R0=()) -> NetNode:
    return NetNode(Addr(i), frozenset(Addr(j) for j in R0))


def state_to_json(s):
    """Canonical JSON-compatible rendering of any layer's state."""
    if isinstance(s, ProcState):
        from .syntax.pretty import show_head
        return {"xi": s.xi.to_json(), "p": show_head(s.p)}
    if isinstance(s, NodeState):
        return {"node": s.i.ip, "R": sorted(a.ip for a in s.R), "inner": state_to_json(s.inner)}
    if isinstance(s, SubnetState):
        return {"left": state_to_json(s.left), "right": state_to_json(s.right)}
    if hasattr(s, "to_json"):
        return s.to_json()
    if isinstance(s, tuple):
        return [state_to_json(x) for x in s]
    return value_to_json(s)


# -- automata ----------------------------------------------------------------

def _no_receive(s, m):
    return ()


@dataclass
class Automaton:
    init: tuple
    trans: Callable
    receive: Callable = _no_receive
    universe: tuple = ()
    kind: str = "process"
    info: dict = field(default_factory=dict)

    def steps(self, s) -> list:
        out = list(self.trans(s))
        for m in self.universe:
            out.extend(Step(ReceiveA(m), t) for t in self.receive(s, m))
        return out


# -- sequential processes ----------------------------------------------------

def _seqp_trans(spec: Spec, xi: DataState, p: Term, out: list, depth=0):
    """Non-receive steps of (xi, p), following choice and call unfoldings."""
    if depth > 10_000:
        raise EvalError("call unfolding does not terminate")
    if isinstance(p, Choice):
        _seqp_trans(spec, xi, p.left, out, depth + 1)
        _seqp_trans(spec, xi, p.right, out, depth + 1)
    elif isinstance(p, Call):
        _seqp_trans(spec, xi, spec[p.name], out, depth + 1)
    elif isinstance(p, Assign):
        out.append(Step(TAU, ProcState(run_assigns(p.assigns, xi), p.cont)))
    elif isinstance(p, GuardT):
        out.extend(Step(TAU, ProcState(x, p.cont)) for x in apply_guard(p.guard, xi))
    elif isinstance(p, Unicast):
        dest = _addr(eval_expr(p.dest, xi))
        msg = _msg(eval_expr(p.msg, xi))
        out.append(Step(UnicastA(dest, msg), ProcState(xi, p.ok)))
        out.append(Step(NotUnicast(dest), ProcState(xi, p.fail)))
    elif isinstance(p, Broadcast):
        out.append(Step(BroadcastA(_msg(eval_expr(p.msg, xi))), ProcState(xi, p.cont)))
    elif isinstance(p, Groupcast):
        dests = eval_expr(p.dests, xi)
        if not isinstance(dests, tuple) or not all(isinstance(d, Addr) for d in dests):
            dests = _addr_set(dests)
        msg = _msg(eval_expr(p.msg, xi))
        out.append(Step(GroupcastA(frozenset(dests), msg), ProcState(xi, p.cont)))
    elif isinstance(p, Send):
        out.append(Step(SendA(_msg(eval_expr(p.msg, xi))), ProcState(xi, p.cont)))
    elif isinstance(p, Deliver):
        out.append(Step(DeliverA(eval_expr(p.data, xi)), ProcState(xi, p.cont)))
    elif isinstance(p, Receive):
        pass
    else:
        raise TypeError(f"not a process term: {p!r}")


def _seqp_receive(spec: Spec, xi: DataState, p: Term, m: Msg, out: list, depth=0):
    if depth > 10_000:
        raise EvalError("call unfolding does not terminate")
    if isinstance(p, Choice):
        _seqp_receive(spec, xi, p.left, m, out, depth + 1)
        _seqp_receive(spec, xi, p.right, m, out, depth + 1)
    elif isinstance(p, Call):
        _seqp_receive(spec, xi, spec[p.name], m, out, depth + 1)
    elif isinstance(p, Receive):
        out.append(ProcState(run_assigns(p.assigns, xi, {p.var: m}), p.cont))


def _addr(v) -> Addr:
    if not isinstance(v, Addr):
        raise EvalError(f"expected an address, got {show_value(v)}")
    return v


def _addr_set(v):
    raise EvalError(f"groupcast expects a list of addresses, got {show_value(v)}")


def _msg(v) -> Msg:
    if not isinstance(v, Msg):
        raise EvalError(f"expected a message, got {show_value(v)}")
    return v


def seqp_trans(spec: Spec, s: ProcState) -> list:
    out = []
    _seqp_trans(spec, s.xi, s.p, out)
    return out


def seqp_receive(spec: Spec, s: ProcState, m: Msg) -> list:
    out = []
    _seqp_receive(spec, s.xi, s.p, m, out)
    return out


def seqp_steps(spec: Spec, s: ProcState, universe=()) -> list:
    """All steps of a sequential process; receives range over ``universe``."""
    out = seqp_trans(spec, s)
    for m in universe:
        out.extend(Step(ReceiveA(m), t) for t in seqp_receive(spec, s, m))
    return out


def init_state(spec: Spec, i: Addr | None = None) -> DataState:
    """Initial data state; ``self`` in initialisers is bound to ``i``."""
    env = {"self": i if i is not None else UNDEF}
    out = {}
    for d in spec.variables:
        out[d.name] = eval_expr(d.init, env | out) if d.init is not None else UNDEF
    return DataState(out)


def concretise(spec: Spec, xi: DataState, havoc: dict) -> list:
    """Every data state obtained by replacing undef variables with values of their kind.

    ``havoc`` maps a variable kind to the finite list of values to try;
    kinds without an entry keep undef.
    """
    kinds = {d.name: d.kind for d in spec.variables}
    open_vars = [v for v in xi if xi[v] is UNDEF and havoc.get(kinds.get(v))]
    if not open_vars:
        return [xi]
    pools = [havoc[kinds[v]] for v in open_vars]
    return [DataState({**xi, **dict(zip(open_vars, vals))}) for vals in product(*pools)]


def mk_seqp(spec: Spec, i: Addr | int | None = None, universe=(), proc: str | None = None,
            xi: DataState | None = None, havoc: dict | None = None) -> Automaton:
    """Automaton of a sequential process started at ``Call``-free body ``proc``.

    With ``havoc`` (kind -> values) undef is read as an arbitrary value:
    initial and successor states branch over every concretisation.
    """
    if isinstance(i, int):
        i = Addr(i)
    pn = proc or spec.main
    xi0 = xi if xi is not None else init_state(spec, i)
    cache_t: dict = {}
    cache_r: dict = {}

    def spread(steps):
        if not havoc:
            return steps
        return [Step(a, ProcState(x, t.p)) for a, t in steps
                for x in concretise(spec, t.xi, havoc)]

    def trans(s):
        r = cache_t.get(s)
        if r is None:
            r = cache_t[s] = spread(seqp_trans(spec, s))
        return r

    def receive(s, m):
        key = (s, m)
        r = cache_r.get(key)
        if r is None:
            ts = seqp_receive(spec, s, m)
            if havoc:
                ts = [ProcState(x, t.p) for t in ts for x in concretise(spec, t.xi, havoc)]
            r = cache_r[key] = ts
        return r

    inits = concretise(spec, xi0, havoc) if havoc else [xi0]
    return Automaton(tuple(ProcState(x, spec[pn]) for x in inits), trans, receive,
                     tuple(universe), "process", {"spec": spec, "addr": i})


# -- local parallel composition ----------------------------------------------

def par_steps(sA, sB, A: Automaton, B: Automaton) -> list:
    """Steps of A << B other than the composed automaton's own receives.

    A's receive synchronises with B's send into tau; standalone receives
    of A and sends of B are suppressed; everything else interleaves.
    """
    out = []
    for a, tA in A.trans(sA):
        out.append(Step(a, (tA, sB)))
    for b, tB in B.trans(sB):
        if isinstance(b, SendA):
            for tA in A.receive(sA, b.msg):
                out.append(Step(TAU, (tA, tB)))
        else:
            out.append(Step(b, (sA, tB)))
    return out


def mk_par(A: Automaton, B: Automaton, universe=()) -> Automaton:
    def trans(s):
        return par_steps(s[0], s[1], A, B)

    def receive(s, m):
        return [(s[0], t) for t in B.receive(s[1], m)]

    init = tuple((a, b) for a in A.init for b in B.init)
    return Automaton(init, trans, receive, tuple(universe), "pair", {"left": A, "right": B})


# -- nodes -------------------------------------------------------------------

def node_trans(n: NodeState, A: Automaton, addresses) -> list:
    i, R = n.i, n.R
    out = []
    for a, t in A.trans(n.inner):
        tgt = NodeState(i, t, R)
        if isinstance(a, BroadcastA):
            out.append(Step(StarCast(R, a.msg), tgt))
        elif isinstance(a, GroupcastA):
            out.append(Step(StarCast(R & a.dests, a.msg), tgt))
        elif isinstance(a, UnicastA):
            if a.dest in R:
                out.append(Step(StarCast(frozenset([a.dest]), a.msg), tgt))
        elif isinstance(a, NotUnicast):
            if a.dest not in R:
                out.append(Step(TAU, tgt))
        elif isinstance(a, DeliverA):
            out.append(Step(NodeDeliver(i, a.data), tgt))
        elif a is TAU or isinstance(a, TauA):
            out.append(Step(TAU, tgt))
        # send is never propagated
    for a, b in topology_pairs(addresses):
        for ctor in (Connect, Disconnect):
            out.append(Step(ctor(a, b), NodeState(i, n.inner, topology_update(i, R, ctor, a, b))))
    return out


def topology_update(i: Addr, R: frozenset, ctor, a: Addr, b: Addr) -> frozenset:
    if i == a:
        other = b
    elif i == b:
        other = a
    else:
        return R
    return R | {other} if ctor is Connect else R - {other}


def topology_pairs(addresses):
    ips = sorted(addresses)
    return [(a, b) for a in ips for b in ips if a != b]


def node_arrive(n: NodeState, A: Automaton, m: Msg, arrives: bool) -> list:
    """Successors for arrival (``arrives``) or non-arrival of ``m`` at this node."""
    if not arrives:
        return [n]
    return [NodeState(n.i, t, n.R) for t in A.receive(n.inner, m)]


def node_steps(n: NodeState, A: Automaton, addresses, universe=()) -> list:
    """Node steps; arrivals are listed for messages in ``universe`` only.

    Non-arrival is always possible and is produced on demand by the
    network layer, never as a standalone step here.
    """
    out = node_trans(n, A, addresses)
    for m in universe:
        out.extend(Step(Arrive(frozenset([n.i]), frozenset(), m), t)
                   for t in node_arrive(n, A, m, True))
    return out


def mk_node(i, A: Automaton, R0=(), addresses=None, universe=()) -> Automaton:
    i = i if isinstance(i, Addr) else Addr(i)
    R0 = frozenset(r if isinstance(r, Addr) else Addr(r) for r in R0)
    addrs = tuple(sorted(addresses)) if addresses is not None else tuple(sorted(R0 | {i}))

    def trans(n):
        return node_trans(n, A, addrs)

    def receive(n, m):
        return node_arrive(n, A, m, True)

    init = tuple(NodeState(i, a, R0) for a in A.init)
    return Automaton(init, trans, receive, tuple(universe), "node", {"addr": i, "inner": A})


# -- partial networks --------------------------------------------------------

def net_tree_ips(tree) -> frozenset:
    if isinstance(tree, NetNode):
        return frozenset([tree.i])
    return net_tree_ips(tree.left) | net_tree_ips(tree.right)


def net_ips(s) -> frozenset:
    if isinstance(s, NodeState):
        return frozenset([s.i])
    return net_ips(s.left) | net_ips(s.right)


def wf_net_tree(tree) -> bool:
    if isinstance(tree, NetNode):
        return True
    return (wf_net_tree(tree.left) and wf_net_tree(tree.right)
            and not (net_tree_ips(tree.left) & net_tree_ips(tree.right)))


class PNet:
    """Partial network over a net tree, one node automaton per leaf.

    States mirror the tree.  Step lists of nodes and proper subnets are
    memoised because the same local states recur across many global ones.
    Connect/disconnect synchronise every node, so they are generated in
    one pass over the whole tree rather than pairwise.
    """

    def __init__(self, tree, np: Callable[[Addr], Automaton]):
        self.tree = tree
        self.ips = net_tree_ips(tree)
        self.procs = {i: np(i) for i in sorted(self.ips)}
        self.leaves = {}
        self._sub_ips = {}
        self._index(tree)
        self._tcache: dict = {}
        self._acache: dict = {}

    def _index(self, tree):
        self._sub_ips[id(tree)] = net_tree_ips(tree)
        if isinstance(tree, NetNode):
            self.leaves[tree.i] = tree
        else:
            self._index(tree.left)
            self._index(tree.right)

    def init_states(self, tree=None) -> list:
        tree = tree if tree is not None else self.tree
        if isinstance(tree, NetNode):
            return [NodeState(tree.i, a, tree.R0) for a in self.procs[tree.i].init]
        return [SubnetState(l, r) for l in self.init_states(tree.left)
                for r in self.init_states(tree.right)]

    # arrivals

    def _node_receive(self, n: NodeState, m: Msg) -> list:
        key = (n, m)
        r = self._acache.get(key)
        if r is None:
            r = self._acache[key] = node_arrive(n, self.procs[n.i], m, True)
        return r

    def _arrive(self, tree, s, m, H) -> list:
        ips = self._sub_ips[id(tree)]
        if H.isdisjoint(ips):
            return [s]
        if len(H) == 1 or isinstance(tree, NetNode):
            (i,) = H & ips
            return self._arrive_at(tree, s, i, m)
        if isinstance(tree, NetNode):
            return self._node_receive(s, m)
        lefts = self._arrive(tree.left, s.left, m, H)
        if not lefts:
            return []
        rights = self._arrive(tree.right, s.right, m, H)
        return [SubnetState(l, r) for l in lefts for r in rights]

    def _arrive_at(self, tree, s, i, m) -> list:
        """Arrival at the single node ``i``; only the path to ``i`` is rebuilt."""
        if isinstance(tree, NetNode):
            return self._node_receive(s, m)
        if i in self._sub_ips[id(tree.left)]:
            return [SubnetState(l, s.right) for l in self._arrive_at(tree.left, s.left, i, m)]
        return [SubnetState(s.left, r) for r in self._arrive_at(tree.right, s.right, i, m)]

    def arrive(self, s, m: Msg, H: frozenset) -> list:
        """Successors when exactly the nodes of ``H`` receive ``m``."""
        if len(H) == 1:
            (i,) = H
            if i in self.ips:
                return self._arrive_at(self.tree, s, i, m)
        return self._arrive(self.tree, s, m, H)

    def arrive_steps(self, s, m: Msg) -> list:
        """Every consistent Arrive(H, K, m) offer of the network."""
        ips = sorted(self.ips)
        out = []
        for bits in product((True, False), repeat=len(ips)):
            H = frozenset(i for i, b in zip(ips, bits) if b)
            out.extend(Step(Arrive(H, self.ips - H, m), t) for t in self.arrive(s, m, H))
        return out

    def receive(self, s, m):
        return self.arrive(s, m, self.ips)

    # local steps

    def _trans(self, tree, s, root=False) -> list:
        if not root:
            r = self._tcache.get(s)
            if r is not None:
                return r
        if isinstance(tree, NetNode):
            out = node_trans(s, self.procs[s.i], ())
        else:
            out = []
            left, right = s.left, s.right
            for a, t in self._trans(tree.left, left):
                if isinstance(a, StarCast):
                    for t2 in self._arrive(tree.right, right, a.msg, a.R):
                        out.append(Step(a, SubnetState(t, t2)))
                else:
                    out.append(Step(a, SubnetState(t, right)))
            for a, t in self._trans(tree.right, right):
                if isinstance(a, StarCast):
                    for t1 in self._arrive(tree.left, left, a.msg, a.R):
                        out.append(Step(a, SubnetState(t1, t)))
                else:
                    out.append(Step(a, SubnetState(left, t)))
        if not root:
            self._tcache[s] = out
        return out

    def _retopo(self, s, ctor, a, b):
        if isinstance(s, NodeState):
            if s.i != a and s.i != b:
                return s
            key = (s, ctor, a, b)
            r = self._acache.get(key)
            if r is None:
                r = self._acache[key] = NodeState(s.i, s.inner, topology_update(s.i, s.R, ctor, a, b))
            return r
        return SubnetState(self._retopo(s.left, ctor, a, b), self._retopo(s.right, ctor, a, b))

    def topology_steps(self, s) -> list:
        return [Step(ctor(a, b), self._retopo(s, ctor, a, b))
                for a, b in topology_pairs(self.ips) for ctor in (Connect, Disconnect)]

    def trans(self, s, topology: bool = True) -> list:
        out = self._trans(self.tree, s, root=True)
        if topology:
            out = out + self.topology_steps(s)
        return out

    def automaton(self, universe=()) -> Automaton:
        return Automaton(tuple(self.init_states()), self.trans, self.receive, tuple(universe),
                         "net", {"pnet": self})


def pnet_steps(net: PNet, s) -> list:
    return net.trans(s)


def pnet(np: Callable[[Addr], Automaton], tree) -> PNet:
    if not wf_net_tree(tree):
        raise ValueError(f"net tree {tree} has duplicate addresses")
    return PNet(tree, np)


# -- closed networks ---------------------------------------------------------

def injections(data, ips, dsts=None) -> tuple:
    """Every (data, dst, target) triple; ``dsts`` defaults to all addresses."""
    ips = sorted(ips)
    dsts = ips if dsts is None else sorted(dsts)
    return tuple((d, dst, i) for i in ips for d in data for dst in dsts)


def cnet_steps(net: PNet, s, inject=(), topology_changes=False, ctor="newpkt") -> list:
    out = []
    for a, t in net.trans(s, topology_changes):
        out.append(Step(TAU, t) if isinstance(a, StarCast) else Step(a, t))
    for d, dst, i in inject:
        m = Msg(ctor, (d, dst))
        for t in net.arrive(s, m, frozenset([i])):
            out.append(Step(NewPkt(i, d, dst), t))
    return out


def closed(net: PNet, inject=(), topology_changes=False, ctor="newpkt") -> Automaton:
    inject = tuple((d, dst if isinstance(dst, Addr) else Addr(dst), i if isinstance(i, Addr) else Addr(i))
                   for d, dst, i in inject)
    singles = {i: frozenset([i]) for _, _, i in inject}
    msgs = {(d, dst): Msg(ctor, (d, dst)) for d, dst, _ in inject}

    def trans(s):
        out = []
        for a, t in net.trans(s, topology_changes):
            out.append(Step(TAU, t) if isinstance(a, StarCast) else Step(a, t))
        for d, dst, i in inject:
            for t in net.arrive(s, msgs[d, dst], singles[i]):
                out.append(Step(NewPkt(i, d, dst), t))
        return out

    return Automaton(tuple(net.init_states()), trans, kind="net",
                     info={"pnet": net, "inject": inject, "topology_changes": topology_changes})
