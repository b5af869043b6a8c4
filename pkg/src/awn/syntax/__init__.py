"""Abstract syntax, expression language and the ``.awn`` parser."""
from .expr import EvalError, eval_expr
from .parser import ParseError, parse_expr, parse_spec
from .pretty import show_spec, show_term
from .terms import (Assign, Broadcast, Call, CallCycle, Choice, Deliver, GuardT,
                    Groupcast, Label, Receive, Send, Spec, Term, Unicast,
                    label_spec, labelled, labels, simple_labels, strip_labels,
                    subterms)
from .values import UNDEF, Addr, DataState, Msg

__all__ = [
    "Addr", "Assign", "Broadcast", "Call", "CallCycle", "Choice", "DataState",
    "Deliver", "EvalError", "GuardT", "Groupcast", "Label", "Msg", "ParseError",
    "Receive", "Send", "Spec", "Term", "UNDEF", "Unicast", "eval_expr",
    "label_spec", "labelled", "labels", "parse_expr", "parse_spec", "show_spec",
    "show_term", "simple_labels", "strip_labels", "subterms",
]
