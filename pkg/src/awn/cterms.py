"""Control terms: microsteps, well-formedness, start/derivative/control terms."""
from __future__ import annotations

from .syntax.terms import (Call, Choice, Spec, Term, continuations, is_prefix,
                           subterms)


class NotWellFormed(Exception):
    pass


def microsteps(spec: Spec, p: Term) -> tuple:
    """Immediate successors of ``p`` under the unfolding relation."""
    if isinstance(p, Choice):
        return (p.left, p.right)
    if isinstance(p, Call):
        return (spec[p.name],)
    return ()


def microstep_graph(spec: Spec) -> dict:
    """The unfolding relation restricted to terms reachable from the bodies."""
    graph = {}
    stack = list(spec.procs.values())
    while stack:
        p = stack.pop()
        if p in graph:
            continue
        succ = microsteps(spec, p)
        graph[p] = succ
        stack.extend(succ)
    return graph


def wellformed(spec: Spec) -> bool:
    """True iff there is no infinite chain of choice/call unfoldings."""
    graph = microstep_graph(spec)
    WHITE, GREY, BLACK = 0, 1, 2
    colour = dict.fromkeys(graph, WHITE)
    for root in graph:
        if colour[root] != WHITE:
            continue
        colour[root] = GREY
        stack = [(root, iter(graph[root]))]
        while stack:
            node, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                colour[node] = BLACK
                stack.pop()
            elif colour[nxt] == GREY:
                return False
            elif colour[nxt] == WHITE:
                colour[nxt] = GREY
                stack.append((nxt, iter(graph[nxt])))
    return True


def no_direct_calls(spec: Spec) -> bool:
    """Sufficient syntactic condition for well-formedness."""
    return not any(isinstance(q, Call) for p in spec.procs.values() for q in stermsl(p))


def stermsl(p: Term) -> frozenset:
    if isinstance(p, Choice):
        return stermsl(p.left) | stermsl(p.right)
    return frozenset([p])


def sterms(spec: Spec, p: Term, _active=frozenset()) -> frozenset:
    """Maximal unfoldings of ``p``: the prefixes that can act directly."""
    if isinstance(p, Choice):
        return sterms(spec, p.left, _active) | sterms(spec, p.right, _active)
    if isinstance(p, Call):
        if p.name in _active:
            raise NotWellFormed(f"unguarded recursion through {p.name}")
        return sterms(spec, spec[p.name], _active | {p.name})
    return frozenset([p])


def dterms(spec: Spec, p: Term, _active=frozenset()) -> frozenset:
    """Start terms of the continuations of ``p``'s prefixes."""
    if isinstance(p, Choice):
        return dterms(spec, p.left, _active) | dterms(spec, p.right, _active)
    if isinstance(p, Call):
        if p.name in _active:
            raise NotWellFormed(f"unguarded recursion through {p.name}")
        return dterms(spec, spec[p.name], _active | {p.name})
    out = frozenset()
    for k in continuations(p):
        out |= sterms(spec, k)
    return out


def ctermsl(p: Term) -> frozenset:
    """Local control terms; call terms are kept, choices dropped."""
    out = set()
    stack = [p]
    while stack:
        q = stack.pop()
        if isinstance(q, Choice):
            stack += [q.left, q.right]
        elif isinstance(q, Call):
            out.add(q)
        elif q not in out:
            out.add(q)
            stack.extend(continuations(q))
    return frozenset(out)


def _require_wellformed(spec):
    if not wellformed(spec):
        raise NotWellFormed(f"specification {spec.name} is not well formed")


def cterms(spec: Spec) -> frozenset:
    """Least set containing the start terms of every body, closed under dterms."""
    _require_wellformed(spec)
    out = set()
    work = []
    for body in spec.procs.values():
        work.extend(sterms(spec, body))
    while work:
        p = work.pop()
        if p in out:
            continue
        out.add(p)
        work.extend(dterms(spec, p))
    return frozenset(out)


def cterms_alt(spec: Spec) -> frozenset:
    """Control terms generated from the local control terms of each body."""
    _require_wellformed(spec)
    out = set()
    for body in spec.procs.values():
        out |= {q for q in ctermsl(body) if not isinstance(q, Call)}
    return frozenset(out)


def prefix_subterms(spec: Spec) -> frozenset:
    """All subterms of the bodies that are neither calls nor choices."""
    return frozenset(q for body in spec.procs.values() for q in subterms(body) if is_prefix(q))
