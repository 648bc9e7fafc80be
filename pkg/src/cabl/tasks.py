"""Benchmark tasks: multi-digit addition and chess attack.

Each task emits its knowledge base in the KB text format, knows how to
turn a label sequence into a query, and carries a fast abduction oracle
that avoids running the logic engine over every candidate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from .logic import NO_PROOF, Atom, QueryTemplate, SolveLimits, Var, deduce, make_list, parse_program

DIGIT_NAMES = (
    "zero", "one", "two", "three", "four", "five", "six", "seven",
    "eight", "nine", "ten", "eleven", "twelve", "thirteen", "fourteen", "fifteen",
)

CHESS_PIECES = ("rook", "pawn", "bishop", "king", "knight", "queen")


class _TaskBase:
    name = "task"
    concepts: tuple

    @cached_property
    def kb(self):
        return parse_program(self.kb_text())

    @property
    def n_labels(self) -> int:
        return len(self.concepts)

    @cached_property
    def label_index(self) -> dict:
        return {label: i for i, label in enumerate(self.concepts)}

    def context_facts(self, context) -> list:
        return []

    def canonical_context(self, context):
        return None

    def deduce(self, z: Sequence[str], context=None, kb=None):
        """Target value of ``z`` under ``kb`` (the full KB by default)."""
        kb = self.kb if kb is None else kb
        # the memo lives on the KB object so a dead KB can never alias a live one
        memo = kb.__dict__.setdefault("_deduce_memo", {})
        key = (self.cache_key, tuple(z), context)
        if key not in memo:
            if len(memo) > 500_000:
                memo.clear()
            memo[key] = deduce(kb, z, self.template, self.context_facts(context), self.limits)
        return memo[key]

    limits = None  # filled in by subclasses' __post_init__


@dataclass(frozen=True, eq=False)
class AdditionTask(_TaskBase):
    """Sum of two ``digits``-digit numbers written in ``base``."""

    base: int = 10
    digits: int = 1

    name = "addition"

    def __post_init__(self):
        if self.base not in (10, 16):
            raise ValueError("base must be 10 or 16")
        if self.digits < 1:
            raise ValueError("digits must be >= 1")
        object.__setattr__(self, "limits", SolveLimits())

    @property
    def concepts(self) -> tuple:
        return DIGIT_NAMES[: self.base]

    @property
    def m(self) -> int:
        return 2 * self.digits

    @property
    def boolean_target(self) -> bool:
        return False

    def kb_text(self) -> str:
        lines = [f"% {self.base}-ary addition of two numbers given as digit lists"]
        lines += [f"@concept {name}/1." for name in self.concepts]
        lines.append("@target addition/3.")
        lines.append("addition(Num1, Num2, Y) :- number(Num1, Res1), number(Num2, Res2), Y is Res1 + Res2.")
        lines.append("number([], Res, Res).")
        lines.append(
            f"number([H|T], Acc, Res) :- digit(H, D), Acc1 is D + {self.base} * Acc, number(T, Acc1, Res)."
        )
        lines.append("number(X, N) :- number(X, 0, N).")
        for value, name in enumerate(self.concepts):
            lines.append(f"digit(Pos, {value}) :- {name}(Pos).")
        return "\n".join(lines) + "\n"

    @cached_property
    def template(self) -> QueryTemplate:
        positions = tuple(f"p{i}" for i in range(self.m))
        y = Var("Y")
        goal = (Atom("addition", (make_list(positions[: self.digits]), make_list(positions[self.digits:]), y)),)
        return QueryTemplate(goal, positions, answer=y)

    def value_of(self, labels: Sequence[str]) -> int:
        """Integer written by a digit-label sequence (most significant first)."""
        out = 0
        for label in labels:
            out = out * self.base + self.label_index[label]
        return out

    def labels_of(self, value: int) -> tuple:
        out = []
        for _ in range(self.digits):
            value, r = divmod(value, self.base)
            out.append(self.concepts[r])
        return tuple(reversed(out))

    def oracle(self, y, domain: Sequence[str], context=None) -> list[tuple]:
        """All label sequences over ``domain`` whose operands sum to ``y``."""
        if not isinstance(y, int) or isinstance(y, bool):
            return []
        top = self.base**self.digits - 1
        allowed = set(domain)
        out = []
        for num1 in range(max(0, y - top), min(top, y) + 1):
            left = self.labels_of(num1)
            if not allowed.issuperset(left):
                continue
            right = self.labels_of(y - num1)
            if allowed.issuperset(right):
                out.append(left + right)
        return out

    def sample_context(self, rng: np.random.Generator):
        return None

    def native_target(self, labels: Sequence[str], context=None) -> int:
        return self.value_of(labels[: self.digits]) + self.value_of(labels[self.digits:])

    def describe(self) -> dict:
        return {"task": "addition", "base": self.base, "digits": self.digits}

    @property
    def cache_key(self) -> str:
        return f"addition/{self.base}/{self.digits}"


# --------------------------------------------------------------------------- chess

def piece_attacks(label: str, src: tuple, dst: tuple) -> bool:
    """Whether a piece at ``src`` attacks ``dst`` (no blocking, pawns move toward +y)."""
    dx = dst[0] - src[0]
    dy = dst[1] - src[1]
    if dx == 0 and dy == 0:
        return False
    if label == "knight":
        return {abs(dx), abs(dy)} == {1, 2}
    if label == "rook":
        return dx == 0 or dy == 0
    if label == "bishop":
        return abs(dx) == abs(dy)
    if label == "queen":
        return dx == 0 or dy == 0 or abs(dx) == abs(dy)
    if label == "king":
        return max(abs(dx), abs(dy)) == 1
    if label == "pawn":
        return dy == 1 and abs(dx) == 1
    raise ValueError(f"unknown piece {label!r}")


def board_attack(labels: Sequence[str], positions: Sequence[tuple]) -> bool:
    return any(
        piece_attacks(labels[i], positions[i], positions[j])
        for i in range(len(labels))
        for j in range(len(labels))
        if i != j
    )


CHESS_KB = """\
% Attack relations between labelled pieces on a board.
% at(P, X, Y) facts give the square of piece P; pawns move toward +Y.
@concept rook/1.
@concept pawn/1.
@concept bishop/1.
@concept king/1.
@concept knight/1.
@concept queen/1.
@target attack/0.
attack :- knight(A), at(A, X1, Y1), at(B, X2, Y2), A \\= B, lshape(X1, Y1, X2, Y2).
attack :- rook(A), at(A, X1, Y1), at(B, X2, Y2), A \\= B, line(X1, Y1, X2, Y2).
attack :- bishop(A), at(A, X1, Y1), at(B, X2, Y2), A \\= B, diag(X1, Y1, X2, Y2).
attack :- queen(A), at(A, X1, Y1), at(B, X2, Y2), A \\= B, line_or_diag(X1, Y1, X2, Y2).
attack :- king(A), at(A, X1, Y1), at(B, X2, Y2), A \\= B, adjacent(X1, Y1, X2, Y2).
attack :- pawn(A), at(A, X1, Y1), at(B, X2, Y2), A \\= B, pawn_hit(X1, Y1, X2, Y2).
left(X1, X2, DX) :- DX is X2 - X1.
fwd(Y1, Y2, DY) :- DY is Y2 - Y1.
lshape(X1, Y1, X2, Y2) :- left(X1, X2, DX), fwd(Y1, Y2, DY), 2 is abs(DX * DY).
line(X1, Y1, X2, Y2) :- left(X1, X2, 0).
line(X1, Y1, X2, Y2) :- fwd(Y1, Y2, 0).
diag(X1, Y1, X2, Y2) :- left(X1, X2, D), fwd(Y1, Y2, D).
diag(X1, Y1, X2, Y2) :- left(X1, X2, D), fwd(Y1, Y2, E), neg(D, E).
neg(D, E) :- E is 0 - D.
line_or_diag(X1, Y1, X2, Y2) :- line(X1, Y1, X2, Y2).
line_or_diag(X1, Y1, X2, Y2) :- diag(X1, Y1, X2, Y2).
adjacent(X1, Y1, X2, Y2) :- left(X1, X2, DX), fwd(Y1, Y2, DY), near(DX), near(DY).
near(D) :- A is abs(D), A =< 1.
pawn_hit(X1, Y1, X2, Y2) :- fwd(Y1, Y2, 1), left(X1, X2, DX), 1 is abs(DX).
"""


@dataclass(frozen=True, eq=False)
class ChessTask(_TaskBase):
    """Does any labelled piece attack another piece on the board?"""

    board_size: int = 8
    pieces: int = 3

    name = "chess"

    def __post_init__(self):
        if self.board_size < 3:
            raise ValueError("board_size must be >= 3")
        if not 2 <= self.pieces <= self.board_size**2:
            raise ValueError("pieces must be between 2 and board_size**2")
        object.__setattr__(self, "limits", SolveLimits())

    @property
    def concepts(self) -> tuple:
        return CHESS_PIECES

    @property
    def m(self) -> int:
        return self.pieces

    @property
    def boolean_target(self) -> bool:
        return True

    def kb_text(self) -> str:
        return CHESS_KB

    @cached_property
    def template(self) -> QueryTemplate:
        positions = tuple(f"p{i}" for i in range(self.pieces))
        return QueryTemplate((Atom("attack"),), positions, answer=None, closed_world=True)

    def context_facts(self, context) -> list:
        if context is None:
            raise ValueError("chess queries need piece positions")
        if len(set(map(tuple, context))) != len(context):
            raise ValueError("pieces must occupy distinct squares")
        return [Atom("at", (pos, int(x), int(y))) for pos, (x, y) in zip(self.template.positions, context)]

    def canonical_context(self, context):
        if context is None:
            raise ValueError("chess queries need piece positions")
        return tuple((int(x), int(y)) for x, y in context)

    def deduce(self, z, context=None, kb=None):
        return super().deduce(z, self.canonical_context(context), kb)

    def oracle(self, y, domain: Sequence[str], context=None) -> list[tuple]:
        if context is None:
            raise ValueError("chess queries need piece positions")
        if not isinstance(y, bool):
            return []
        ordered = sorted(set(domain), key=self.label_index.__getitem__)
        positions = [tuple(p) for p in context]
        return [z for z in itertools.product(ordered, repeat=self.pieces) if board_attack(z, positions) == y]

    def sample_context(self, rng: np.random.Generator):
        cells = rng.choice(self.board_size**2, size=self.pieces, replace=False)
        return tuple((int(c) % self.board_size, int(c) // self.board_size) for c in cells)

    def native_target(self, labels: Sequence[str], context=None) -> bool:
        return board_attack(labels, context)

    def describe(self) -> dict:
        return {"task": "chess", "board_size": self.board_size, "pieces": self.pieces}

    @property
    def cache_key(self) -> str:
        return f"chess/{self.board_size}/{self.pieces}"


def make_addition_task(base: int = 10, digits: int = 1) -> AdditionTask:
    return AdditionTask(base=base, digits=digits)


def make_chess_task(board_size: int = 8, pieces: int = 3) -> ChessTask:
    return ChessTask(board_size=board_size, pieces=pieces)


def make_task(name: str, **kwargs):
    if name == "addition":
        return make_addition_task(kwargs.get("base", 10), kwargs.get("digits", 1))
    if name == "chess":
        return make_chess_task(kwargs.get("board_size", 8), kwargs.get("pieces", 3))
    raise ValueError(f"unknown task {name!r}")


__all__ = [
    "AdditionTask",
    "ChessTask",
    "CHESS_PIECES",
    "DIGIT_NAMES",
    "NO_PROOF",
    "board_attack",
    "make_addition_task",
    "make_chess_task",
    "make_task",
    "piece_attacks",
]
