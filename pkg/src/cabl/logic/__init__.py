"""Horn-clause parsing and depth-first resolution."""

from .engine import (
    NO_PROOF,
    DepthExceeded,
    InstantiationError,
    QueryTemplate,
    SolveLimits,
    Verdict,
    apply_substitution,
    deduce,
    entails,
    solve,
    unify,
)
from .program import KBError, KBValidationError, KnowledgeBase, ParseError, Rule, parse_program
from .terms import NIL, Atom, Builtin, Struct, Var, format_term, list_items, make_list

__all__ = [
    "NIL",
    "NO_PROOF",
    "Atom",
    "Builtin",
    "DepthExceeded",
    "InstantiationError",
    "KBError",
    "KBValidationError",
    "KnowledgeBase",
    "ParseError",
    "QueryTemplate",
    "Rule",
    "SolveLimits",
    "Struct",
    "Var",
    "Verdict",
    "apply_substitution",
    "deduce",
    "entails",
    "format_term",
    "list_items",
    "make_list",
    "parse_program",
    "solve",
    "unify",
]
