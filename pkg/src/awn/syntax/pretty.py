"""Render specifications back to DSL source (labels become comments)."""
from __future__ import annotations

from .expr import show_assigns
from .terms import (Assign, Broadcast, Call, Choice, Deliver, GuardT, Groupcast,
                    Receive, Send, Spec, Term, Unicast)


def show_head(p: Term, with_label: bool = True) -> str:
    """The prefix (or glue constructor) at the top of ``p``, without continuation."""
    lab = ""
    if with_label and getattr(p, "label", None) is not None:
        lab = f"{{{p.label}}}"
    if isinstance(p, Assign):
        return f"{lab}[[{show_assigns(p.assigns)}]]"
    if isinstance(p, GuardT):
        return f"{lab}<{p.guard}>"
    if isinstance(p, Unicast):
        return f"{lab}unicast({p.dest}, {p.msg})"
    if isinstance(p, Broadcast):
        return f"{lab}broadcast({p.msg})"
    if isinstance(p, Groupcast):
        return f"{lab}groupcast({p.dests}, {p.msg})"
    if isinstance(p, Send):
        return f"{lab}send({p.msg})"
    if isinstance(p, Deliver):
        return f"{lab}deliver({p.data})"
    if isinstance(p, Receive):
        body = f"{p.var} -> {show_assigns(p.assigns)}" if p.assigns else p.var
        return f"{lab}receive({body})"
    if isinstance(p, Choice):
        return show_head(p.left, with_label) + " + " + show_head(p.right, with_label)
    if isinstance(p, Call):
        return f"call({p.name})"
    raise TypeError(p)


def _prefix_src(p: Term) -> str:
    if isinstance(p, Assign):
        return f"[[ {show_assigns(p.assigns)} ]]"
    if isinstance(p, GuardT):
        return f"< {p.guard} >"
    return show_head(p, with_label=False)


def show_term(p: Term, indent: int = 0, labels: bool = True) -> str:
    """Multi-line DSL rendering; parsing the result yields the unlabelled term."""
    pad = " " * indent
    if isinstance(p, Call):
        return f"call({p.name})"
    if isinstance(p, Choice):
        branches = []
        q = p
        while isinstance(q, Choice):
            branches.append(q.left)
            q = q.right
        branches.append(q)
        parts = [_seq(b, indent + 4, labels) for b in branches]
        return "(   " + f"\n{pad}  + ".join(parts) + " )"
    return _seq(p, indent, labels)


def _seq(p: Term, indent: int, labels: bool) -> str:
    pad = " " * indent
    lines = []
    while True:
        if isinstance(p, Call):
            lines.append(f"call({p.name})")
            break
        if isinstance(p, Choice):
            lines.append(show_term(p, indent, labels))
            break
        if isinstance(p, Unicast):
            tag = f"  # {p.label}" if labels and p.label is not None else ""
            ok = show_term(p.ok, indent + 4, labels)
            fail = show_term(p.fail, indent + 4, labels)
            lines.append(f"unicast({p.dest}, {p.msg}) .{tag}\n{pad}    ({ok})\n{pad} |> ({fail})")
            break
        tag = f"  # {p.label}" if labels and p.label is not None else ""
        lines.append(f"{_prefix_src(p)} .{tag}")
        p = p.cont
    return f"\n{pad}".join(lines)


def show_spec(spec: Spec, labels: bool = True) -> str:
    out = []
    for ctor, kinds in spec.messages.items():
        out.append(f"message {ctor}({', '.join(kinds)})")
    if out:
        out.append("")
    decls = {d.name: d for d in spec.variables}
    first = True
    for pn, body in spec.procs.items():
        params = []
        if first:
            for d in decls.values():
                params.append(f"{d.name}: {d.kind}" + (f" = {d.init}" if d.init is not None else ""))
            first = False
        out.append(f"proc {pn}({', '.join(params)}) =")
        out.append("    " + show_term(body, 4, labels))
        out.append("")
    return "\n".join(out)
