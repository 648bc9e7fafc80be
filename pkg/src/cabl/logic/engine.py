"""Depth-first SLD resolution with arithmetic builtins.

Clauses are tried in source order and the leftmost literal is selected.
The search keeps an explicit choice-point stack, so the only bound on
recursion is the resolution-step budget in ``SolveLimits``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence

from .program import KnowledgeBase, Rule, build_head_index
from .terms import Atom, Builtin, Struct, Var, fresh_var, is_ground, term_vars

Substitution = dict  # variable name -> Term


class DepthExceeded(Exception):
    """Resolution-step budget exhausted; the query may not terminate."""


class InstantiationError(Exception):
    """Arithmetic saw an unbound variable."""


class _NoProof:
    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NO_PROOF"

    def __bool__(self) -> bool:
        return False


NO_PROOF = _NoProof()


class Verdict(enum.Enum):
    TRUE = "true"
    FALSE = "false"
    INDETERMINATE = "indeterminate"

    def __bool__(self) -> bool:
        if self is Verdict.INDETERMINATE:
            raise TypeError("an indeterminate verdict has no truth value")
        return self is Verdict.TRUE


@dataclass(frozen=True)
class SolveLimits:
    max_depth: int = 10_000
    max_solutions: int | None = None
    occurs_check: bool = False

    def __post_init__(self):
        if self.max_depth <= 0:
            raise ValueError("max_depth must be positive")
        if self.max_solutions is not None and self.max_solutions <= 0:
            raise ValueError("max_solutions must be positive")


DEFAULT_LIMITS = SolveLimits()


# --------------------------------------------------------------------------- terms under bindings

def walk(term, bindings: Mapping):
    while type(term) is Var:
        bound = bindings.get(term)
        if bound is None:
            return term
        term = bound
    return term


def resolve(term, bindings: Mapping):
    """Apply bindings all the way down."""
    term = walk(term, bindings)
    if isinstance(term, Struct):
        return Struct(term.functor, tuple(resolve(a, bindings) for a in term.args))
    return term


def _occurs(var: Var, term, bindings) -> bool:
    term = walk(term, bindings)
    if term == var:
        return True
    if isinstance(term, Struct):
        return any(_occurs(var, a, bindings) for a in term.args)
    return False


def _unify(a, b, bindings: dict, trail: list, occurs_check: bool) -> bool:
    return _unify_pairs([(a, b)], bindings, trail, occurs_check)


def _unify_pairs(stack: list, bindings: dict, trail: list, occurs_check: bool) -> bool:
    get = bindings.get
    while stack:
        x, y = stack.pop()
        while type(x) is Var:
            b = get(x)
            if b is None:
                break
            x = b
        while type(y) is Var:
            b = get(y)
            if b is None:
                break
            y = b
        if x is y:
            continue
        tx = type(x)
        if tx is Var:
            if occurs_check and _occurs(x, y, bindings):
                return False
            bindings[x] = y
            trail.append(x)
        elif type(y) is Var:
            if occurs_check and _occurs(y, x, bindings):
                return False
            bindings[y] = x
            trail.append(y)
        elif tx is Struct:
            if type(y) is not Struct or x.functor != y.functor or len(x.args) != len(y.args):
                return False
            stack.extend(zip(x.args, y.args))
        elif tx is not type(y) or x != y:
            return False
    return True


def _to_bindings(s: Mapping | None) -> dict:
    return {Var(k): v for k, v in (s or {}).items()}


def apply_substitution(term, s: Mapping):
    """Apply a name-keyed substitution to a term."""
    return resolve(term, _to_bindings(s))


def unify(a, b, s: Mapping | None = None, occurs_check: bool = False) -> Substitution | None:
    """Most general unifier extending ``s``; None when the terms do not unify.

    The result is idempotent: every binding is fully resolved.  A variable
    bound to a term containing itself has no such form, so that case is
    reported as failure even when ``occurs_check`` is off (the flag only
    makes the check eager).
    """
    bindings = _to_bindings(s)
    if not _unify(a, b, bindings, [], occurs_check):
        return None
    try:
        return {v.name: _resolve_acyclic(t, bindings, frozenset((v,))) for v, t in bindings.items()}
    except _Cyclic:
        return None


class _Cyclic(Exception):
    pass


def _resolve_acyclic(term, bindings, path: frozenset):
    """Like ``resolve`` but raises _Cyclic when a bound variable recurs along a path."""
    while type(term) is Var:
        if term in path:
            raise _Cyclic
        bound = bindings.get(term)
        if bound is None:
            return term
        path = path | {term}
        term = bound
    if isinstance(term, Struct):
        return Struct(term.functor, tuple(_resolve_acyclic(x, bindings, path) for x in term.args))
    return term


# --------------------------------------------------------------------------- arithmetic

class _EvalFailure(Exception):
    pass


def _eval(term, bindings):
    term = walk(term, bindings)
    if isinstance(term, bool):
        raise _EvalFailure
    if isinstance(term, int):
        return term
    if isinstance(term, Var):
        raise InstantiationError(f"unbound variable {term.name} in arithmetic")
    if isinstance(term, Struct):
        if term.functor == "abs" and len(term.args) == 1:
            return abs(_eval(term.args[0], bindings))
        if len(term.args) == 2:
            x = _eval(term.args[0], bindings)
            y = _eval(term.args[1], bindings)
            op = term.functor
            if op == "+":
                return x + y
            if op == "-":
                return x - y
            if op == "*":
                return x * y
            if op == "//":
                if y == 0:
                    raise _EvalFailure
                q = abs(x) // abs(y)
                return q if (x >= 0) == (y >= 0) else -q
            if op == "mod":
                if y == 0:
                    raise _EvalFailure
                return x % y
    # symbols and other compounds are not numbers: the goal simply fails
    raise _EvalFailure


_COMPARE = {
    "lt": lambda x, y: x < y,
    "le": lambda x, y: x <= y,
    "gt": lambda x, y: x > y,
    "ge": lambda x, y: x >= y,
}


def _builtin(lit: Builtin, bindings: dict, trail: list, occurs_check: bool) -> bool:
    kind = lit.kind
    if kind == "eq":
        return _unify(lit.lhs, lit.rhs, bindings, trail, occurs_check)
    if kind == "neq":
        mark = len(trail)
        ok = _unify(lit.lhs, lit.rhs, bindings, trail, occurs_check)
        _undo(bindings, trail, mark)
        return not ok
    try:
        if kind == "is":
            return _unify(lit.lhs, _eval(lit.rhs, bindings), bindings, trail, occurs_check)
        return _COMPARE[kind](_eval(lit.lhs, bindings), _eval(lit.rhs, bindings))
    except _EvalFailure:
        return False


def _undo(bindings: dict, trail: list, mark: int) -> None:
    while len(trail) > mark:
        del bindings[trail.pop()]


# --------------------------------------------------------------------------- renaming

def _rename(term, mapping: dict):
    cls = type(term)
    if cls is str or cls is int:
        return term
    if cls is Var:
        v = mapping.get(term)
        if v is None:
            v = mapping[term] = fresh_var(term.name)
        return v
    if cls is Struct:
        return Struct(term.functor, tuple([_rename(a, mapping) for a in term.args]))
    if cls is Atom:
        return Atom(term.predicate, tuple([_rename(a, mapping) for a in term.args]))
    if cls is Builtin:
        return Builtin(term.kind, _rename(term.lhs, mapping), _rename(term.rhs, mapping))
    return term


# --------------------------------------------------------------------------- search

def _first_arg_clash(goal_arg, head_arg) -> bool:
    tg, th = type(goal_arg), type(head_arg)
    if tg is Var or th is Var:
        return False
    if tg is Struct:
        return th is not Struct or goal_arg.functor != head_arg.functor or len(goal_arg.args) != len(head_arg.args)
    if th is Struct:
        return True
    return tg is not th or goal_arg != head_arg


def solve(
    kb: KnowledgeBase,
    goal: Sequence,
    limits: SolveLimits = DEFAULT_LIMITS,
    facts: Iterable[Atom] = (),
) -> Iterator[Substitution]:
    """Yield answer substitutions for the conjunction ``goal``.

    ``facts`` are extra ground atoms (concept labels, per-example inputs)
    consulted before the rules of ``kb``.
    """
    fact_index = build_head_index(Rule(-1, f) for f in facts)
    head_index = kb.head_index
    query_vars = {}
    for lit in goal:
        for v in term_vars(lit):
            query_vars.setdefault(v.name, v)

    bindings: dict = {}
    trail: list = []
    # choice point: [rest-of-goals, selected literal, remaining clauses, trail mark]
    stack: list = []
    goals = None
    for lit in reversed(tuple(goal)):
        goals = (lit, goals)
    steps = 0
    found = 0
    occurs = limits.occurs_check

    def try_clauses(lit: Atom, rest, clauses, start: int):
        """Resolve lit against clauses[start:]; returns new goal list or None."""
        mark = len(trail)
        n = len(clauses)
        first = walk(lit.args[0], bindings) if lit.args else None
        for k in range(start, n):
            rule = clauses[k]
            if rule.id == -1:
                mapping = None
                head_args = rule.head.args
            else:
                if lit.args and _first_arg_clash(first, rule.head.args[0]):
                    continue
                lead = rule.lead_key
                if lead is not None and lead not in fact_index and lead not in head_index:
                    continue
                mapping = {}
                head_args = [_rename(a, mapping) for a in rule.head.args]
            if _unify_pairs(list(zip(lit.args, head_args)), bindings, trail, occurs):
                if k + 1 < n:
                    stack.append((rest, lit, clauses, k + 1, mark))
                new = rest
                if mapping is not None:
                    for b in reversed(rule.body):
                        new = (_rename(b, mapping), new)
                return True, new
            _undo(bindings, trail, mark)
        return False, None

    while True:
        if goals is None:
            yield {name: resolve(v, bindings) for name, v in query_vars.items()}
            found += 1
            if limits.max_solutions is not None and found >= limits.max_solutions:
                return
            ok = False
        else:
            lit, rest = goals
            steps += 1
            if steps > limits.max_depth:
                raise DepthExceeded(f"resolution exceeded {limits.max_depth} steps")
            if isinstance(lit, Builtin):
                ok = _builtin(lit, bindings, trail, occurs)
                if ok:
                    goals = rest
                    continue
                # builtins leave no choice points; fall through to backtrack
                ok = False
            else:
                clauses = fact_index.get(lit.key, ()) + kb.head_index.get(lit.key, ())
                ok, new_goals = try_clauses(lit, rest, clauses, 0)
                if ok:
                    goals = new_goals
                    continue
        # backtrack
        while not ok:
            if not stack:
                return
            rest, lit, clauses, start, mark = stack.pop()
            _undo(bindings, trail, mark)
            ok, new_goals = try_clauses(lit, rest, clauses, start)
        goals = new_goals


# --------------------------------------------------------------------------- deduction

@dataclass(frozen=True)
class QueryTemplate:
    """How a concept-label sequence becomes a query.

    Position ``i`` is the constant ``positions[i]``; label ``z[i]`` is
    asserted as the fact ``z[i](positions[i])``.  ``answer`` names the goal
    variable carrying the target value, or is None for yes/no goals.
    """

    goal: tuple
    positions: tuple
    answer: Var | None = None
    closed_world: bool = False

    @property
    def arity(self) -> int:
        return len(self.positions)

    def label_facts(self, z: Sequence[str]) -> list[Atom]:
        if len(z) != len(self.positions):
            raise ValueError(f"expected {len(self.positions)} labels, got {len(z)}")
        return [Atom(label, (pos,)) for label, pos in zip(z, self.positions)]


def deduce(
    kb: KnowledgeBase,
    z: Sequence[str],
    template: QueryTemplate,
    context: Iterable[Atom] = (),
    limits: SolveLimits = DEFAULT_LIMITS,
):
    """Target value entailed by ``z`` and the KB, or NO_PROOF.

    Yes/no templates return True on success; with ``closed_world`` a failed
    proof reads as False instead of NO_PROOF.
    """
    concepts = set(kb.concept_names)
    for label in z:
        if label not in concepts:
            raise ValueError(f"label {label!r} is not a concept of this knowledge base")
    facts = template.label_facts(z) + list(context)
    for answer in solve(kb, template.goal, SolveLimits(limits.max_depth, 1, limits.occurs_check), facts):
        if template.answer is None:
            return True
        return answer[template.answer.name]
    return False if template.closed_world else NO_PROOF


def entails(
    kb: KnowledgeBase,
    query: Atom,
    limits: SolveLimits = DEFAULT_LIMITS,
    facts: Iterable[Atom] = (),
) -> Verdict:
    """Whether a ground atom follows from the KB (plus ``facts``)."""
    if not is_ground(query):
        raise ValueError(f"query {query!r} is not ground")
    try:
        for _ in solve(kb, (query,), SolveLimits(limits.max_depth, 1, limits.occurs_check), facts):
            return Verdict.TRUE
    except (DepthExceeded, InstantiationError):
        return Verdict.INDETERMINATE
    return Verdict.FALSE
