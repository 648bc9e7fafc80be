"""Term representation for the Horn-clause engine.

Terms are plain Python values:

* ``Var``    -- a logic variable (name starts with an uppercase letter or ``_``)
* ``str``    -- a symbol (``one``, ``p0``, ``[]``)
* ``int``    -- an integer
* ``Struct`` -- a compound term; lists are ``'.'/2`` cells ending in ``'[]'``
"""

from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union

NIL = "[]"
CONS = "."

_fresh = itertools.count()


class Var:
    """A logic variable.

    Variables built by name are interned, so equal names give the same
    object and identity comparison is enough inside the engine.  Fresh
    variables made during resolution carry unique names and skip the table.
    """

    __slots__ = ("name", "__weakref__")
    _table: "weakref.WeakValueDictionary[str, Var]" = weakref.WeakValueDictionary()

    def __new__(cls, name: str):
        var = cls._table.get(name)
        if var is None:
            var = object.__new__(cls)
            var.name = name
            cls._table[name] = var
        return var

    @classmethod
    def _fresh(cls, name: str) -> "Var":
        var = object.__new__(cls)
        var.name = name
        return var

    def __reduce__(self):
        return (Var, (self.name,))

    def __repr__(self) -> str:
        return self.name


@dataclass(frozen=True, slots=True)
class Struct:
    functor: str
    args: tuple

    def __repr__(self) -> str:
        return format_term(self)


Term = Union[Var, str, int, Struct]


@dataclass(frozen=True, slots=True)
class Atom:
    """A user predicate application ``predicate(args...)``."""

    predicate: str
    args: tuple = ()
    key: tuple = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "key", (self.predicate, len(self.args)))

    def __repr__(self) -> str:
        if not self.args:
            return self.predicate
        return f"{self.predicate}({', '.join(format_term(a) for a in self.args)})"


BUILTIN_KINDS = ("is", "eq", "neq", "lt", "le", "gt", "ge")
BUILTIN_SYMBOLS = {"is": "is", "eq": "=", "neq": "\\=", "lt": "<", "le": "=<", "gt": ">", "ge": ">="}


@dataclass(frozen=True, slots=True)
class Builtin:
    """``lhs <op> rhs`` for one of the arithmetic / unification builtins."""

    kind: str
    lhs: object
    rhs: object

    def __repr__(self) -> str:
        return f"{format_term(self.lhs)} {BUILTIN_SYMBOLS[self.kind]} {format_term(self.rhs)}"


Literal = Union[Atom, Builtin]


def fresh_var(hint: str = "_G") -> Var:
    return Var._fresh(f"{hint}#{next(_fresh)}")


def make_list(items: Iterable, tail=NIL):
    out = tail
    for item in reversed(list(items)):
        out = Struct(CONS, (item, out))
    return out


def list_items(term) -> list | None:
    """Python list of the items of a proper list term, else None."""
    out = []
    while isinstance(term, Struct) and term.functor == CONS and len(term.args) == 2:
        out.append(term.args[0])
        term = term.args[1]
    return out if term == NIL else None


def is_ground(term) -> bool:
    if isinstance(term, Var):
        return False
    if isinstance(term, Struct):
        return all(is_ground(a) for a in term.args)
    if isinstance(term, Atom):
        return all(is_ground(a) for a in term.args)
    return True


def term_vars(term) -> Iterator[Var]:
    if isinstance(term, Var):
        yield term
    elif isinstance(term, (Struct, Atom)):
        for a in term.args:
            yield from term_vars(a)
    elif isinstance(term, Builtin):
        yield from term_vars(term.lhs)
        yield from term_vars(term.rhs)


def format_term(term) -> str:
    if isinstance(term, Struct):
        if term.functor == CONS and len(term.args) == 2:
            items = []
            while isinstance(term, Struct) and term.functor == CONS and len(term.args) == 2:
                items.append(format_term(term.args[0]))
                term = term.args[1]
            body = ", ".join(items)
            if term == NIL:
                return f"[{body}]"
            return f"[{body}|{format_term(term)}]"
        if term.functor in _INFIX and len(term.args) == 2:
            return f"({format_term(term.args[0])} {term.functor} {format_term(term.args[1])})"
        return f"{term.functor}({', '.join(format_term(a) for a in term.args)})"
    if isinstance(term, (Atom, Builtin)):
        return repr(term)
    return str(term)


_INFIX = {"+", "-", "*", "//", "mod"}
