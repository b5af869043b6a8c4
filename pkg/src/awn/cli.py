"""Command-line front end: ``awn <command> SPEC [options]``.

SPEC is a path to an ``.awn`` file or one of the built-in names ``toy``
and ``qmsg``.  Every command prints one JSON summary object on stdout
(``cterms`` prints plain text).  Exit status: 0 success or holds at the
bound, 1 violation, 2 usage, parse or evaluation error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import re
import sys
from itertools import product
from pathlib import Path

from . import models
from .cterms import NotWellFormed, ctermsl, cterms, dterms, sterms, wellformed
from .semantics import NetPar, ProcState, closed, injections, mk_par, mk_seqp, node, pnet
from .syntax import (Addr, CallCycle, Msg, ParseError, Spec, eval_expr, label_spec, labels,
                     parse_expr, parse_spec, simple_labels)
from .syntax.expr import EvalError
from .syntax.pretty import show_head
from .verify import (Budget, check_invariant, check_step_invariant, explore,
                     obligations)

log = logging.getLogger("awn")


class UsageError(Exception):
    pass


# -- inputs ------------------------------------------------------------------

def load_spec(ref: str) -> Spec:
    if ref in ("toy", "qmsg") and not Path(ref).exists():
        return models.toy_spec() if ref == "toy" else models.qmsg_spec()
    path = Path(ref)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise UsageError(f"cannot read {ref}: {exc.strerror}") from None
    return label_spec(parse_spec(text, path.stem))


def int_range(text: str) -> range:
    m = re.fullmatch(r"\s*(-?\d+)\s*(?:\.\.\s*(-?\d+)\s*)?", text)
    if not m:
        raise argparse.ArgumentTypeError(f"expected lo..hi, got {text!r}")
    lo = int(m.group(1))
    hi = int(m.group(2)) if m.group(2) is not None else lo
    return range(lo, hi + 1)


def int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


_NET_TOKEN = re.compile(r"\s*(\|\||node|\d+|[(){},])")


def parse_net(text: str):
    """``node(i, {j, ..}) || ...`` with parentheses; ``||`` nests to the right."""
    if text in models.NETS:
        return models.NETS[text]
    toks, pos = [], 0
    text = text.strip()
    while pos < len(text):
        m = _NET_TOKEN.match(text, pos)
        if not m:
            raise UsageError(f"bad net expression at {text[pos:]!r}")
        toks.append(m.group(1))
        pos = m.end()
    toks.append("")
    i = 0

    def eat(t=None):
        nonlocal i
        tok = toks[i]
        if t is not None and tok != t:
            raise UsageError(f"net expression: expected {t!r}, got {tok or 'end'!r}")
        i += 1
        return tok

    def leaf():
        if toks[i] == "(":
            eat("(")
            t = par()
            eat(")")
            return t
        eat("node")
        eat("(")
        ip = int(eat())
        eat(",")
        eat("{")
        rng = []
        while toks[i] != "}":
            rng.append(int(eat()))
            if toks[i] == ",":
                eat(",")
        eat("}")
        eat(")")
        return node(ip, rng)

    def par():
        left = leaf()
        if toks[i] == "||":
            eat("||")
            return NetPar(left, par())
        return left

    tree = par()
    if toks[i] != "":
        raise UsageError(f"net expression: trailing {toks[i]!r}")
    return tree


def message_universe(spec: Spec, data, addresses) -> tuple:
    """Every declared message with int fields over ``data`` and ip fields over ``addresses``."""
    out = []
    for ctor, kinds in spec.messages.items():
        pools = [list(data) if k == "int" else [Addr(a) for a in addresses] for k in kinds]
        out.extend(Msg(ctor, args) for args in product(*pools))
    return tuple(out)


def inline_state_pred(spec: Spec, text: str):
    """Predicate over data variables plus ``label`` (checked at every label)."""
    e = parse_expr(text, spec.messages)

    def pred(s: ProcState):
        for l in labels(spec, s.p):
            if not eval_expr(e, dict(s.xi) | {"label": l.index}):
                return False
        return True
    return pred


def budget_of(args) -> Budget:
    return Budget(args.max_states, args.max_depth, args.max_newpkts, args.max_seconds)


def build_net(spec: Spec, args):
    tree = parse_net(args.net)
    q = mk_seqp(models.qmsg_spec())
    net = pnet(lambda i: mk_par(mk_seqp(spec, i), q), tree)
    data = args.data if args.data is not None else range(1, 3)
    dsts = None if args.dst is None else [Addr(d) for d in args.dst]
    return closed(net, injections(data, net.ips, dsts), args.topology_changes == "on"), tree


def seq_automaton(spec: Spec, args):
    data = args.data if args.data is not None else range(0, 3)
    addrs = args.addresses or [1, 2]
    return mk_seqp(spec, args.node, message_universe(spec, data, addrs))


def write_trace(trace, path):
    if path and trace is not None:
        Path(path).write_text(trace.jsonl() + "\n", encoding="utf-8")


# -- commands ----------------------------------------------------------------

def cmd_check(args) -> int:
    spec = load_spec(args.spec)
    wf = wellformed(spec)
    out = {"command": "check", "spec": spec.name, "processes": list(spec.procs),
           "messages": {k: list(v) for k, v in spec.messages.items()},
           "variables": [d.name for d in spec.variables], "wellformed": wf}
    if wf:
        out["simple_labels"] = simple_labels(spec)
    print(json.dumps(out))
    return 0 if wf and out["simple_labels"] else 1


def _show_set(title, terms) -> list[str]:
    lines = [f"{title}: {len(terms)}"]
    lines += sorted(f"  {show_head(t)}" for t in terms)
    return lines


def cmd_cterms(args) -> int:
    spec = load_spec(args.spec)
    if not wellformed(spec):
        print(f"{spec.name}: not well formed", file=sys.stderr)
        return 1
    lines = []
    procs = [args.proc] if args.proc else list(spec.procs)
    for pn in procs:
        if pn not in spec.procs:
            raise UsageError(f"unknown process {pn}")
        body = spec[pn]
        lines += _show_set(f"sterms({pn})", sterms(spec, body))
        lines += _show_set(f"dterms({pn})", dterms(spec, body))
        lines += _show_set(f"ctermsl({pn})", ctermsl(body))
    lines += _show_set("cterms", cterms(spec))
    print("\n".join(lines))
    return 0


def cmd_explore(args) -> int:
    spec = load_spec(args.spec)
    A, tree = build_net(spec, args)
    ex = explore(A, budget=budget_of(args), jobs=args.jobs, keep_transitions=False)
    levels = ex.per_depth()
    out = {"command": "explore", "spec": spec.name, "net": str(tree),
           "topology_changes": args.topology_changes, "states": len(ex.parent),
           "transitions": ex.n_transitions, "complete": ex.complete, "depth": len(levels) - 1,
           "per_depth": levels, "stuck": len(ex.stuck), "seed": args.seed}
    if args.trace:
        deepest = next(k for k in reversed(list(ex.parent)))
        write_trace(ex.trace_to(deepest), args.trace)
        out["trace"] = args.trace
    if args.figure:
        from .report import plot_levels
        out["figure"] = plot_levels(levels, args.figure)
    print(json.dumps(out))
    return 0


def _resolve_inv(spec: Spec, args):
    """Return (kind, predicate, expected) for --inv."""
    entry = models.CATALOG.get(args.inv)
    if entry is not None:
        if entry.level == "open":
            raise UsageError(f"{args.inv} is an open-model invariant; use opencheck")
        kind = {"seq": "state", "step": "step", "net": "global"}[entry.level]
        return kind, entry.build(spec), entry.expected
    try:
        return "state", inline_state_pred(spec, args.inv), None
    except ParseError as exc:
        raise UsageError(f"--inv: not a known invariant or predicate: {exc}") from None


def cmd_invariant(args) -> int:
    spec = load_spec(args.spec)
    kind, P, expected = _resolve_inv(spec, args)
    budget = budget_of(args)
    if kind == "global" and args.level != "global":
        raise UsageError(f"{args.inv} is a global invariant; use --level global")
    if args.level == "seq":
        A = seq_automaton(spec, args)
        pred = P
    else:
        A, _ = build_net(spec, args)
        if args.level == "global":
            if kind != "global":
                raise UsageError("--level global needs a global invariant such as inv3")
            pred = P
        elif kind == "step":
            pred = lambda s, a, t: all(P(x, a, y) for x, y in zip(_procs(s), _procs(t)))
        else:
            pred = lambda s: all(P(x) for x in _procs(s))
    check = check_step_invariant if kind == "step" else check_invariant
    v = check(A, pred, budget=budget, jobs=args.jobs, lean=args.level != "seq")
    out = {"command": "invariant", "spec": spec.name, "invariant": args.inv, "level": args.level,
           **v.summary(), "seed": args.seed}
    if expected is not None:
        out["expected"] = expected
    write_trace(v.trace, args.trace)
    if v.trace is not None and not args.trace:
        out["trace"] = v.trace.records()
    print(json.dumps(out))
    return {"holds": 0, "violated": 1}.get(v.status, 2)


def _procs(s):
    """Protocol process states of every node of a network state, in tree order."""
    if hasattr(s, "inner"):
        inner = s.inner
        while isinstance(inner, tuple) and not isinstance(inner, ProcState):
            inner = inner[0]
        return [inner]
    return _procs(s.left) + _procs(s.right)


def cmd_obligations(args) -> int:
    spec = load_spec(args.spec)
    kind, P, _ = _resolve_inv(spec, args)
    if kind != "state":
        raise UsageError("obligations need a state invariant")
    A = seq_automaton(spec, args)
    obls, ex = obligations(spec, A, P, budget=budget_of(args), jobs=args.jobs)
    rows = []
    for o in obls:
        name = "init" if o.kind == "init" else show_head(o.cterm)
        rows.append({"kind": o.kind, "cterm": name, "status": o.status, "instances": o.instances})
    verdict = "violated" if any(o.status == "violated" for o in obls) else "holds"
    out = {"command": "obligations", "spec": spec.name, "invariant": args.inv,
           "trans_obligations": sum(o.kind == "trans" for o in obls), "verdict": verdict,
           "complete": ex.complete, "obligations": rows}
    if args.figure:
        from .report import plot_obligations
        out["figure"] = plot_obligations([(r["cterm"], r["instances"], r["status"]) for r in rows],
                                         args.figure)
    print(json.dumps(out))
    return 0 if verdict == "holds" else 1


def cmd_opencheck(args) -> int:
    spec = load_spec(args.spec)
    if spec is not models.toy_spec() and set(spec.procs) != set(models.toy_spec().procs):
        raise UsageError("opencheck supports the toy protocol only")
    addrs = args.addresses or [1, 2]
    if args.node not in addrs:
        raise UsageError(f"--node {args.node} not among --addresses {addrs}")
    A = models.optoy(args.node, addrs, args.no_cap, args.data,
                     with_msg_ok=args.assume != "no-msg-ok", frozen=args.assume == "frozen")
    v = check_invariant(A, models.inv9(args.node), budget=budget_of(args), jobs=args.jobs)
    out = {"command": "opencheck", "spec": spec.name, "node": args.node, "addresses": addrs,
           "assume": args.assume, "no_cap": args.no_cap, **v.summary()}
    write_trace(v.trace, args.trace)
    print(json.dumps(out))
    return {"holds": 0, "violated": 1}.get(v.status, 2)


# -- argument parsing ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="awn", description="Explore and check AWN process specifications.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, budget=True):
        sp.add_argument("spec", help="path to an .awn file, or 'toy' / 'qmsg'")
        if budget:
            sp.add_argument("--max-states", type=int, default=2_000_000)
            sp.add_argument("--max-depth", type=int, default=10_000)
            sp.add_argument("--max-newpkts", type=int, default=2)
            sp.add_argument("--max-seconds", type=float, default=None,
                            help="wall-clock limit; hitting it marks the run incomplete")
            sp.add_argument("--data", type=int_range, default=None, help="data values lo..hi")
            sp.add_argument("--jobs", type=int, default=1)
            sp.add_argument("--seed", type=int, default=0,
                            help="recorded in the summary; exploration itself is deterministic")
            sp.add_argument("--trace", metavar="PATH", help="write the trace as JSON lines")

    def net_opts(sp):
        sp.add_argument("--net", default="linear3",
                        help="net expression, e.g. 'node(1,{2}) || node(2,{1})', or linear3 / pair2")
        sp.add_argument("--topology-changes", choices=["on", "off"], default="off")
        sp.add_argument("--dst", type=int_list, default=None,
                        help="destinations of injected packets (default: every node)")

    sp = sub.add_parser("check", help="parse, well-formedness and label report")
    common(sp, budget=False)
    sp.set_defaults(func=cmd_check)

    sp = sub.add_parser("cterms", help="start, derivative and control terms")
    common(sp, budget=False)
    sp.add_argument("--proc")
    sp.set_defaults(func=cmd_cterms)

    sp = sub.add_parser("explore", help="explore a closed network")
    common(sp)
    net_opts(sp)
    sp.add_argument("--figure", metavar="PNG", help="plot new states per BFS depth")
    sp.set_defaults(func=cmd_explore)

    sp = sub.add_parser("invariant", help="check a named or inline invariant")
    common(sp)
    net_opts(sp)
    sp.add_argument("--inv", required=True, help="catalog name or predicate over variables and 'label'")
    sp.add_argument("--level", choices=["seq", "net", "global"], default="seq")
    sp.add_argument("--node", type=int, default=1)
    sp.add_argument("--addresses", type=int_list, default=None)
    sp.set_defaults(func=cmd_invariant)

    sp = sub.add_parser("obligations", help="per-control-term verification conditions")
    common(sp)
    sp.add_argument("--inv", required=True)
    sp.add_argument("--node", type=int, default=1)
    sp.add_argument("--addresses", type=int_list, default=None)
    sp.add_argument("--figure", metavar="PNG", help="plot instances per control term")
    sp.set_defaults(func=cmd_obligations)

    sp = sub.add_parser("opencheck", help="open-model check of the next-hop invariant")
    common(sp)
    sp.add_argument("--node", type=int, default=1)
    sp.add_argument("--addresses", type=int_list, default=None)
    sp.add_argument("--no-cap", type=int, default=3)
    sp.add_argument("--assume", choices=["msg-ok", "no-msg-ok", "frozen"], default="msg-ok")
    sp.set_defaults(func=cmd_opencheck)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("AWN_LOG", "WARNING").upper(),
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, NotWellFormed, CallCycle, EvalError, ValueError) as exc:
        print(f"awn: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
