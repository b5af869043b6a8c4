"""Bounded explicit-state reachability and invariant checking."""
from __future__ import annotations

import hashlib
import json
import logging
import time
from collections.abc import Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

from .cterms import cterms, sterms
from .semantics import (Automaton, NewPkt, NodeState, ProcState,
                        net_ips, net_tree_ips, state_to_json, wf_net_tree)
from .syntax.expr import EvalError
from .syntax.terms import Spec, labels

log = logging.getLogger(__name__)

__all__ = [
    "Budget", "Exploration", "Trace", "Verdict", "Obligation", "explore",
    "check_invariant", "check_step_invariant", "onl", "onll", "obligations",
    "replay", "digest", "netlift", "default", "netglobal", "stray_start_terms",
    "net_tree_ips", "net_ips", "wf_net_tree",
]


@dataclass(frozen=True)
class Budget:
    max_states: int = 1_000_000
    max_depth: int = 10_000
    max_newpkts: int | None = None
    max_seconds: float | None = None    # wall clock, checked between expansions


def digest(state) -> str:
    """Short content hash of a state, stable across runs."""
    blob = json.dumps(state_to_json(state), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass
class Trace:
    init: object
    steps: list = field(default_factory=list)   # [(action, state)]

    def __len__(self):
        return len(self.steps)

    def states(self) -> list:
        return [self.init] + [t for _, t in self.steps]

    def records(self) -> list[dict]:
        out = [{"step": 0, "action": "init", "state": state_to_json(self.init)}]
        for n, (a, t) in enumerate(self.steps, 1):
            out.append({"step": n, "action": str(a), "state": state_to_json(t)})
        return out

    def jsonl(self) -> str:
        return "\n".join(json.dumps(r) for r in self.records())

    def digests(self) -> list:
        """(digest, action, digest) triples along the trace."""
        ss = self.states()
        return [(digest(s), str(a), digest(t)) for s, (a, t) in zip(ss, self.steps)]


def replay(A: Automaton, trace: Trace) -> bool:
    """Re-execute ``trace``; true iff every step is an enabled step of ``A``."""
    if trace.init not in A.init:
        return False
    s = trace.init
    for a, t in trace.steps:
        if not any(a2 == a and t2 == t for a2, t2 in A.steps(s)):
            return False
        s = t
    return True


# -- exploration -------------------------------------------------------------

@dataclass
class Exploration:
    automaton: Automaton
    parent: dict          # key -> (parent key, action), None for initial keys or lean runs
    levels: list          # number of new states first reached at each BFS depth
    transitions: list     # (src key, action, dst key)
    complete: bool
    stuck: dict           # key -> error message
    stopped: object = None
    n_transitions: int = 0

    @property
    def states(self) -> set:
        return {k[0] for k in self.parent}

    def edges(self) -> set:
        return {(s[0], a, t[0]) for s, a, t in self.transitions}

    def trace_to(self, key) -> Trace:
        path = []
        while self.parent[key] is not None:
            prev, a = self.parent[key]
            path.append((a, key[0]))
            key = prev
        path.reverse()
        return Trace(key[0], path)

    def per_depth(self) -> list[int]:
        return list(self.levels)


def _expand(A, key, I, max_newpkts):
    s, injected = key
    try:
        steps = A.steps(s)
    except EvalError as exc:
        return key, None, str(exc)
    out = []
    for a, t in steps:
        if I is not None and not I(a):
            continue
        n = injected
        if isinstance(a, NewPkt):
            if max_newpkts is not None and injected >= max_newpkts:
                continue
            n += 1
        out.append((a, (t, n)))
    return key, out, None


def explore(A: Automaton, I: Callable | None = None, budget: Budget = Budget(),
            jobs: int = 1, on_state: Callable | None = None,
            on_step: Callable | None = None, keep_transitions: bool = True,
            lean: bool = False) -> Exploration:
    """Breadth-first search from ``A.init``; steps are followed iff ``I(action)``.

    Keys are (state, injections so far) so that the newpkt bound is exact.
    ``on_state(state)`` / ``on_step(src, action, dst)`` may return a truthy
    value to stop the search; it is stored in ``Exploration.stopped``.
    A ``lean`` run keeps no parent pointers, so it cannot produce traces.
    """
    parent = {}
    transitions, stuck = [], {}
    frontier = []
    levels = [0]
    complete = True

    count = 0

    def result(done, stopped=None):
        return Exploration(A, parent, levels, transitions, done, stuck, stopped, count)

    for s in A.init:
        key = (s, 0)
        if key in parent:
            continue
        parent[key] = None
        levels[0] += 1
        frontier.append(key)
        if on_state and (r := on_state(s)):
            return result(False, (r, key))

    timed_out = False
    deadline = None if budget.max_seconds is None else time.monotonic() + budget.max_seconds
    pool = ThreadPoolExecutor(jobs) if jobs > 1 else None
    try:
        d = 0
        while frontier:
            if d >= budget.max_depth:
                complete = False
                break
            if timed_out or deadline is not None and time.monotonic() > deadline:
                complete = False
                break
            if pool is not None:
                results = pool.map(lambda k: _expand(A, k, I, budget.max_newpkts), frontier)
            else:
                results = (_expand(A, k, I, budget.max_newpkts) for k in frontier)
            nxt = []
            for n, (key, steps, err) in enumerate(results):
                if deadline is not None and not n & 1023 and time.monotonic() > deadline:
                    timed_out = True
                    break
                if err is not None:
                    stuck[key] = err
                    continue
                count += len(steps)
                for a, tkey in steps:
                    if keep_transitions:
                        transitions.append((key, a, tkey))
                    new = tkey not in parent
                    if new:
                        if len(parent) >= budget.max_states:
                            complete = False
                            continue
                        parent[tkey] = None if lean else (key, a)
                        nxt.append(tkey)
                    if on_step and (r := on_step(key[0], a, tkey[0])):
                        return result(False, (r, key, a, tkey))
                    if new and on_state and (r := on_state(tkey[0])):
                        return result(False, (r, tkey))
            frontier = nxt
            if nxt:
                levels.append(len(nxt))
            d += 1
    finally:
        if pool is not None:
            pool.shutdown()
    if stuck:
        log.warning("%d state(s) stuck on evaluation errors", len(stuck))
    return result(complete)


# -- verdicts ----------------------------------------------------------------

@dataclass
class Verdict:
    status: str                 # "holds", "violated" or "error"
    complete: bool
    states: int
    transitions: int
    trace: Trace | None = None
    error: str | None = None
    stuck: int = 0

    @property
    def holds(self) -> bool:
        return self.status == "holds"

    def summary(self) -> dict:
        out = {"status": self.status, "complete": self.complete, "states": self.states,
               "transitions": self.transitions, "stuck": self.stuck}
        if self.trace is not None:
            out["trace_length"] = len(self.trace)
            out["trace_digests"] = [list(t) for t in self.trace.digests()]
        if self.error:
            out["error"] = self.error
        return out


class _PredError(Exception):
    pass


def _guarded(P):
    def check(*args):
        try:
            return bool(P(*args))
        except (EvalError, KeyError, TypeError) as exc:
            raise _PredError(str(exc)) from exc
    return check


def _verdict(ex: Exploration, status, trace=None, error=None) -> Verdict:
    return Verdict(status, ex.complete, len(ex.parent), ex.n_transitions, trace, error,
                   len(ex.stuck))


def check_invariant(A: Automaton, P: Callable, I: Callable | None = None,
                    budget: Budget = Budget(), jobs: int = 1, lean: bool = False) -> Verdict:
    """Check state predicate ``P`` on every reachable state; BFS gives a shortest trace.

    With ``lean`` the search keeps only the visited set and, on a
    violation, repeats itself with parent pointers to build the trace.
    """
    P = _guarded(P)
    try:
        ex = explore(A, I, budget, jobs, on_state=lambda s: not P(s),
                     keep_transitions=not lean, lean=lean)
        if ex.stopped is not None and lean:
            ex = explore(A, I, budget, jobs, on_state=lambda s: not P(s), keep_transitions=False)
    except _PredError as exc:
        return Verdict("error", False, 0, 0, error=str(exc))
    if ex.stopped is not None:
        return _verdict(ex, "violated", ex.trace_to(ex.stopped[1]))
    return _verdict(ex, "holds")


def check_step_invariant(A: Automaton, P: Callable, I: Callable | None = None,
                         budget: Budget = Budget(), jobs: int = 1, lean: bool = False) -> Verdict:
    """Check ``P(s, a, s')`` on every explored transition."""
    P = _guarded(P)
    try:
        ex = explore(A, I, budget, jobs, on_step=lambda s, a, t: not P(s, a, t),
                     keep_transitions=not lean, lean=lean)
        if ex.stopped is not None and lean:
            ex = explore(A, I, budget, jobs, on_step=lambda s, a, t: not P(s, a, t),
                         keep_transitions=False)
    except _PredError as exc:
        return Verdict("error", False, 0, 0, error=str(exc))
    if ex.stopped is not None:
        _, src, a, tkey = ex.stopped
        tr = ex.trace_to(src)
        tr.steps.append((a, tkey[0]))
        return _verdict(ex, "violated", tr)
    return _verdict(ex, "holds")


# -- label wrappers ----------------------------------------------------------

def onl(spec: Spec, P: Callable) -> Callable:
    """Lift ``P(xi, label)`` to process states, over every label of the term."""
    def pred(s: ProcState):
        return all(P(s.xi, l) for l in labels(spec, s.p))
    return pred


def onll(spec: Spec, P: Callable) -> Callable:
    """Lift ``P((xi, l), a, (xi', l'))`` to transitions of process states."""
    def pred(s: ProcState, a, t: ProcState):
        return all(P((s.xi, l), a, (t.xi, l2))
                   for l in labels(spec, s.p) for l2 in labels(spec, t.p))
    return pred


# -- per-control-term obligations ------------------------------------------

@dataclass
class Obligation:
    kind: str                   # "init" or "trans"
    cterm: object
    status: str                 # "holds", "violated" or "uncovered"
    instances: int = 0
    trace: Trace | None = None


def obligations(spec: Spec, A: Automaton, P: Callable, I: Callable | None = None,
                budget: Budget = Budget(), jobs: int = 1) -> tuple[list[Obligation], Exploration]:
    """One init obligation plus one preservation obligation per control term.

    A transition counts towards control term ``c`` when ``c`` is a start
    term of its source; ``P`` must then carry over from source to target.
    """
    ex = explore(A, I, budget, jobs)
    out = []
    bad = [s for s in A.init if not P(s)]
    out.append(Obligation("init", None, "violated" if bad else "holds", len(A.init),
                          Trace(bad[0]) if bad else None))
    cache: dict = {}
    by_cterm: dict = {c: [] for c in cterms(spec)}
    for src, a, dst in ex.transitions:
        p = src[0].p
        st = cache.get(p)
        if st is None:
            st = cache[p] = sterms(spec, p)
        for c in st:
            by_cterm.setdefault(c, []).append((src, a, dst))
    pcache: dict = {}

    def Pc(key):
        r = pcache.get(key)
        if r is None:
            r = pcache[key] = bool(P(key[0]))
        return r

    for c in sorted(by_cterm, key=_cterm_order):
        ts = by_cterm[c]
        if not ts:
            out.append(Obligation("trans", c, "uncovered"))
            continue
        viol = next(((s, a, t) for s, a, t in ts if Pc(s) and not Pc(t)), None)
        if viol is None:
            out.append(Obligation("trans", c, "holds", len(ts)))
        else:
            s, a, t = viol
            tr = ex.trace_to(s)
            tr.steps.append((a, t[0]))
            out.append(Obligation("trans", c, "violated", len(ts), tr))
    return out, ex


def _cterm_order(c):
    lab = getattr(c, "label", None)
    return (lab.proc, lab.index, str(type(c).__name__)) if lab else ("", -1, type(c).__name__)


def stray_start_terms(spec: Spec, states) -> list:
    """Reachable process states whose start terms escape the control terms."""
    cs = cterms(spec)
    seen, bad = set(), []
    for s in states:
        p = s.p
        if p in seen:
            continue
        seen.add(p)
        if not sterms(spec, p) <= cs:
            bad.append(s)
    return bad


# -- global states of networks ---------------------------------------------

def netlift(ps: Callable, s) -> dict:
    """Partial map from node address to the protocol data state at that node."""
    if isinstance(s, NodeState):
        return {s.i: ps(s.inner)}
    left, right = netlift(ps, s.left), netlift(ps, s.right)
    if left.keys() & right.keys():
        raise ValueError(f"duplicate addresses {sorted(left.keys() & right.keys())}")
    return left | right


class default(Mapping):
    """Total map: ``m`` where defined, ``df(i)`` elsewhere."""

    def __init__(self, df: Callable, m: Mapping):
        self.df, self.m = df, m

    def __getitem__(self, i):
        try:
            return self.m[i]
        except KeyError:
            return self.df(i)

    def __iter__(self):
        return iter(self.m)

    def __len__(self):
        return len(self.m)


def netglobal(P: Callable, df: Callable, ps: Callable) -> Callable:
    """Lift a predicate over global states to network states."""
    return lambda s: P(default(df, netlift(ps, s)))


def first_component(inner):
    """Protocol data state of a node running ``A << queue`` (or just ``A``)."""
    while isinstance(inner, tuple) and not isinstance(inner, ProcState):
        inner = inner[0]
    return inner.xi

