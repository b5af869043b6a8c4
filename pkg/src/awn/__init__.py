"""Executable AWN semantics with control-term analysis and bounded invariant checking."""
from .cterms import cterms, cterms_alt, ctermsl, dterms, sterms, wellformed
from .semantics import closed, mk_node, mk_par, mk_seqp, node, pnet
from .syntax import label_spec, parse_spec
from .verify import Budget, check_invariant, check_step_invariant, explore, obligations

__all__ = [
    "Budget", "check_invariant", "check_step_invariant", "closed", "cterms", "cterms_alt",
    "ctermsl", "dterms", "explore", "label_spec", "mk_node", "mk_par", "mk_seqp", "node",
    "obligations", "parse_spec", "pnet", "sterms", "wellformed",
]
