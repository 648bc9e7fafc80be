"""Rules and knowledge bases, plus the text parser for the KB format.

The accepted language is a small Prolog subset::

    @concept zero/1.
    @target digit/2.
    digit(Pos, 0) :- zero(Pos).
    number([H|T], Acc, Res) :- digit(H, D), Acc1 is D + 10 * Acc, number(T, Acc1, Res).
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .terms import NIL, Atom, Builtin, Struct, Var, make_list, term_vars

PredKey = tuple[str, int]


class KBError(Exception):
    """Base class for knowledge-base errors."""


class ParseError(KBError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class KBValidationError(KBError):
    pass


@dataclass(frozen=True)
class Rule:
    id: int
    head: Atom
    body: tuple = ()
    # predicate of the leading body atom, used to skip clauses that cannot fire
    lead_key: tuple | None = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        lead = self.body[0] if self.body and isinstance(self.body[0], Atom) else None
        object.__setattr__(self, "lead_key", lead.key if lead is not None else None)

    def body_atoms(self) -> Iterable[Atom]:
        return (lit for lit in self.body if isinstance(lit, Atom))

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head!r}."
        return f"{self.head!r} :- {', '.join(repr(b) for b in self.body)}."


@dataclass(frozen=True)
class KnowledgeBase:
    rules: tuple
    concepts: tuple
    target: PredKey
    head_index: Mapping[PredKey, tuple] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.head_index is None:
            object.__setattr__(self, "head_index", build_head_index(self.rules))

    @property
    def concept_names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.concepts)

    @property
    def rule_ids(self) -> frozenset:
        return frozenset(r.id for r in self.rules)

    def rule(self, rule_id: int) -> Rule:
        for r in self.rules:
            if r.id == rule_id:
                return r
        raise KeyError(rule_id)

    def clauses_for(self, key: PredKey) -> tuple:
        return self.head_index.get(key, ())

    def head_predicates(self) -> set:
        return {r.head.key for r in self.rules}

    def body_predicates(self) -> set:
        return {a.key for r in self.rules for a in r.body_atoms()}

    def extensional_predicates(self) -> set:
        """Body predicates with no defining rule that are not concepts (per-example inputs)."""
        return self.body_predicates() - self.head_predicates() - set(self.concepts)

    def restrict(self, rule_ids: Iterable[int], concepts: Iterable[PredKey] | None = None) -> "KnowledgeBase":
        """Sub-base view sharing this KB's Rule objects."""
        keep = set(rule_ids)
        rules = tuple(r for r in self.rules if r.id in keep)
        if concepts is None:
            concepts = self.concepts
        else:
            wanted = set(concepts)
            concepts = tuple(c for c in self.concepts if c in wanted)
        return KnowledgeBase(rules, concepts, self.target)

    def with_rules(self, extra: Iterable[Rule]) -> "KnowledgeBase":
        return KnowledgeBase(self.rules + tuple(extra), self.concepts, self.target)

    def to_text(self) -> str:
        lines = [f"@concept {n}/{a}." for n, a in self.concepts]
        lines.append(f"@target {self.target[0]}/{self.target[1]}.")
        lines.extend(str(r) for r in self.rules)
        return "\n".join(lines) + "\n"


def build_head_index(rules: Iterable[Rule]) -> dict:
    index: dict = {}
    for r in rules:
        index.setdefault(r.head.key, []).append(r)
    return {k: tuple(v) for k, v in index.items()}


# --------------------------------------------------------------------------- lexer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>%[^\n]*)
  | (?P<decl>@[a-z]+)
  | (?P<var>[A-Z_][A-Za-z0-9_]*)
  | (?P<name>[a-z][A-Za-z0-9_]*)
  | (?P<int>[0-9]+)
  | (?P<op>:-|\\=|=<|>=|//|[=<>+\-*()\[\]|,./])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    line: int
    col: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ParseError(f"unexpected character {text[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind not in ("ws", "comment"):
            tokens.append(Token(kind, m.group(), line, m.start() - line_start + 1))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# --------------------------------------------------------------------------- parser

_COMPARISONS = {"=": "eq", "\\=": "neq", "<": "lt", "=<": "le", ">": "gt", ">=": "ge"}


class _Parser:
    def __init__(self, text: str):
        self.tokens = tokenize(text)
        self.i = 0
        self.varmap: dict[str, Var] = {}

    # token helpers
    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message: str, tok: Token | None = None):
        tok = tok or self.peek()
        found = tok.text or "end of input"
        raise ParseError(f"{message} (found {found!r})", tok.line, tok.col)

    def expect(self, text: str) -> Token:
        tok = self.peek()
        if tok.text != text or tok.kind not in ("op", "name"):
            self.error(f"expected {text!r}")
        return self.next()

    def at(self, text: str) -> bool:
        tok = self.peek()
        return tok.text == text and tok.kind in ("op", "name")

    # grammar
    def program(self):
        concepts: list = []
        target = None
        target_tok = None
        clauses = []
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "decl":
                self.next()
                if tok.text not in ("@concept", "@target"):
                    self.error("unknown declaration", tok)
                key = self.predicate_indicator()
                self.expect(".")
                if tok.text == "@concept":
                    if key not in concepts:
                        concepts.append(key)
                else:
                    if target is not None and target != key:
                        self.error("target declared twice", tok)
                    target, target_tok = key, tok
            else:
                self.varmap = {}
                clauses.append((tok, self.clause()))
        return concepts, target, target_tok, clauses

    def predicate_indicator(self) -> tuple[str, int]:
        name = self.next()
        if name.kind != "name":
            self.error("expected predicate name", name)
        self.expect("/")
        arity = self.next()
        if arity.kind != "int":
            self.error("expected arity", arity)
        return (name.text, int(arity.text))

    def clause(self):
        head = self.atom()
        body = []
        if self.at(":-"):
            self.next()
            body.append(self.literal())
            while self.at(","):
                self.next()
                body.append(self.literal())
        self.expect(".")
        return head, tuple(body)

    def atom(self) -> Atom:
        tok = self.next()
        if tok.kind != "name":
            self.error("expected predicate name", tok)
        args = self.arguments() if self.at("(") else ()
        return Atom(tok.text, args)

    def arguments(self) -> tuple:
        self.expect("(")
        args = [self.term()]
        while self.at(","):
            self.next()
            args.append(self.term())
        self.expect(")")
        return tuple(args)

    def literal(self):
        start = self.peek()
        left = self.term()
        if self.at("is"):
            self.next()
            return Builtin("is", left, self.expr())
        tok = self.peek()
        if tok.kind == "op" and tok.text in _COMPARISONS:
            self.next()
            return Builtin(_COMPARISONS[tok.text], left, self.term())
        if isinstance(left, str) and left != NIL and start.kind == "name":
            return Atom(left)
        if isinstance(left, Struct) and start.kind == "name":
            return Atom(left.functor, left.args)
        self.error("expected a literal", start)

    def term(self):
        tok = self.peek()
        if tok.kind == "var":
            self.next()
            return self.variable(tok.text)
        if tok.kind == "int":
            self.next()
            return int(tok.text)
        if tok.kind == "op" and tok.text == "-" and self.peek(1).kind == "int":
            self.next()
            return -int(self.next().text)
        if tok.kind == "name":
            self.next()
            if self.at("("):
                return Struct(tok.text, self.arguments())
            return tok.text
        if self.at("["):
            return self.list_term()
        self.error("expected a term")

    def list_term(self):
        self.expect("[")
        if self.at("]"):
            self.next()
            return NIL
        items = [self.term()]
        while self.at(","):
            self.next()
            items.append(self.term())
        tail = NIL
        if self.at("|"):
            bar = self.next()
            tail = self.term()
            if not (isinstance(tail, Var) or tail == NIL or (isinstance(tail, Struct) and tail.functor == ".")):
                self.error("list tail must be a variable or a list", bar)
        self.expect("]")
        return make_list(items, tail)

    def variable(self, name: str) -> Var:
        if name == "_":
            return Var(f"_#{len(self.varmap)}_{self.i}")
        var = self.varmap.get(name)
        if var is None:
            var = self.varmap[name] = Var(name)
        return var

    # arithmetic: additive > multiplicative > primary
    def expr(self):
        left = self.mul_expr()
        while self.at("+") or self.at("-"):
            op = self.next().text
            left = Struct(op, (left, self.mul_expr()))
        return left

    def mul_expr(self):
        left = self.primary()
        while self.at("*") or self.at("//") or self.at("mod"):
            op = self.next().text
            left = Struct(op, (left, self.primary()))
        return left

    def primary(self):
        tok = self.peek()
        if tok.kind == "int":
            self.next()
            return int(tok.text)
        if tok.kind == "var":
            self.next()
            return self.variable(tok.text)
        if tok.kind == "op" and tok.text == "-" and self.peek(1).kind == "int":
            self.next()
            return -int(self.next().text)
        if tok.kind == "name" and tok.text == "abs":
            self.next()
            self.expect("(")
            inner = self.expr()
            self.expect(")")
            return Struct("abs", (inner,))
        if self.at("("):
            self.next()
            inner = self.expr()
            self.expect(")")
            return inner
        self.error("expected an arithmetic expression")


def parse_program(text: str) -> KnowledgeBase:
    """Parse KB source text and check the declarations against the rules."""
    parser = _Parser(text)
    concepts, target, target_tok, clauses = parser.program()

    rules = []
    usages: dict[str, dict[int, Token]] = {}
    for rule_id, (tok, (head, body)) in enumerate(clauses):
        for atom in (head, *(lit for lit in body if isinstance(lit, Atom))):
            usages.setdefault(atom.predicate, {}).setdefault(len(atom.args), tok)
        rules.append(Rule(rule_id, head, body))

    # predicates are name/arity pairs; a declared name must keep its declared arity
    declared = list(concepts) + ([target] if target else [])
    for name, arity in declared:
        for used_arity, tok in usages.get(name, {}).items():
            if used_arity != arity:
                raise ParseError(f"{name}/{arity} is declared but used with arity {used_arity}", tok.line, tok.col)

    if target is None:
        raise KBValidationError("no @target declaration")
    kb = KnowledgeBase(tuple(rules), tuple(concepts), target)
    if target not in kb.head_index:
        raise KBValidationError(f"target {target[0]}/{target[1]} has no defining rule")
    body_preds = kb.body_predicates()
    for c in concepts:
        if c not in body_preds:
            raise KBValidationError(f"concept {c[0]}/{c[1]} is never referenced in a rule body")
        if c in kb.head_index:
            raise KBValidationError(f"concept {c[0]}/{c[1]} must not be defined by a rule")
    return kb


def rule_variables(rule: Rule) -> set[Var]:
    out = set(term_vars(rule.head))
    for lit in rule.body:
        out.update(term_vars(lit))
    return out
