"""Empirical check that each sub-base answers its own queries like the full KB.

For phase ``p`` a query is a ground atom over a predicate the sub-base can
talk about: a head predicate of ``KB_p`` or a concept in ``Z_p``.  Each
sample draws fresh per-example facts (concept labels from ``Z_p`` only and
random extensional facts such as piece squares).  The query goes to ``KB_p``
and to each comparison base (the next sub-base, then the full KB).  About half of the queries are
built from a proof witness so that true answers are well represented.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .logic import (
    Atom,
    DepthExceeded,
    InstantiationError,
    KnowledgeBase,
    SolveLimits,
    Var,
    Verdict,
    entails,
    make_list,
    solve,
)
from .logic.terms import is_ground
from .partition import Curriculum

N_POSITIONS = 4
LIMITS = SolveLimits(max_depth=20_000)
# witness search may wander into unbounded list generation, so keep it short
WITNESS_LIMITS = SolveLimits(max_depth=300, max_solutions=5)
WITNESS_ATTEMPTS = 8


@dataclass
class PairResult:
    phase: int
    other: str  # "p+1" or "full"
    agree: int = 0
    disagree: int = 0
    indeterminate: int = 0
    true_answers: int = 0
    mismatches: list = field(default_factory=list)

    @property
    def samples(self) -> int:
        return self.agree + self.disagree + self.indeterminate

    def line(self) -> str:
        target = f"{self.phase + 1}" if self.other == "p+1" else "full"
        return (
            f"phase {self.phase} vs {target}: agree={self.agree} disagree={self.disagree} "
            f"indeterminate={self.indeterminate} (true answers {self.true_answers})"
        )


@dataclass
class EntailReport:
    pairs: list

    @property
    def total(self) -> int:
        return sum(p.samples for p in self.pairs)

    @property
    def disagreements(self) -> int:
        return sum(p.disagree for p in self.pairs)

    @property
    def indeterminate(self) -> int:
        return sum(p.indeterminate for p in self.pairs)

    @property
    def indeterminate_rate(self) -> float:
        return self.indeterminate / self.total if self.total else 0.0

    @property
    def passed(self) -> bool:
        return self.disagreements == 0 and self.indeterminate_rate < 0.01

    def lines(self) -> list[str]:
        out = [p.line() for p in self.pairs]
        out.append(
            f"total={self.total} disagreements={self.disagreements} "
            f"indeterminate={self.indeterminate} ({100 * self.indeterminate_rate:.2f}%) "
            f"{'PASS' if self.passed else 'FAIL'}"
        )
        return out


class _Universe:
    def __init__(self, size: int, rng: np.random.Generator):
        self.rng = rng
        self.ints = list(range(size))
        self.positions = [f"p{i}" for i in range(N_POSITIONS)]

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def term(self):
        kind = self.rng.random()
        if kind < 0.4:
            return self.pick(self.ints)
        if kind < 0.7:
            return self.pick(self.positions)
        length = int(self.rng.integers(0, N_POSITIONS + 1))
        return make_list([self.pick(self.positions) for _ in range(length)])


def _facts(kb: KnowledgeBase, domain, u: _Universe) -> list:
    facts = []
    for pos in u.positions:
        if domain and u.rng.random() < 0.85:
            facts.append(Atom(u.pick(list(domain)), (pos,)))
    for name, arity in sorted(kb.extensional_predicates()):
        for pos in u.positions:
            args = (pos,) + tuple(u.pick(u.ints) for _ in range(arity - 1))
            facts.append(Atom(name, args[:arity]))
    return facts


def _witness(name: str, arity: int, full: KnowledgeBase, facts: list, u: _Universe):
    """Ground atom proved by the full KB, with some arguments chosen by the proof."""
    for _ in range(WITNESS_ATTEMPTS):
        args = [u.term() for _ in range(arity)]
        holes = [k for k in range(arity) if u.rng.random() < 0.5] or [arity - 1]
        for k in holes:
            args[k] = Var(f"W{k}")
        goal = Atom(name, tuple(args))
        try:
            answers = list(solve(full, (goal,), WITNESS_LIMITS, facts))
        except (DepthExceeded, InstantiationError):
            continue
        for answer in answers:
            filled = tuple(answer[a.name] if isinstance(a, Var) else a for a in args)
            if all(is_ground(a) for a in filled):
                return Atom(name, filled)
    return None


def _query(preds: list, full: KnowledgeBase, facts: list, u: _Universe) -> Atom:
    name, arity = u.pick(preds)
    if arity and u.rng.random() < 0.5:
        found = _witness(name, arity, full, facts, u)
        if found is not None:
            return found
    return Atom(name, tuple(u.term() for _ in range(arity)))


def entail_check(
    kb: KnowledgeBase,
    curriculum: Curriculum,
    samples: int = 200,
    universe: int = 16,
    seed: int = 0,
    keep_mismatches: int = 5,
) -> EntailReport:
    rng = np.random.default_rng(seed)
    u = _Universe(universe, rng)
    pairs = []
    n = len(curriculum)
    for idx, phase in enumerate(curriculum):
        preds = sorted(phase.kb.head_predicates() | set(phase.kb.concepts))
        others = [("full", kb)]
        if idx + 1 < n:
            others.insert(0, ("p+1", curriculum[idx + 1].kb))
        results = {label: PairResult(phase.index, label) for label, _ in others}
        for _ in range(samples):
            facts = _facts(kb, phase.domain, u)
            query = _query(preds, kb, facts, u)
            mine = entails(phase.kb, query, LIMITS, facts)
            for label, other_kb in others:
                res = results[label]
                theirs = entails(other_kb, query, LIMITS, facts)
                if Verdict.INDETERMINATE in (mine, theirs):
                    res.indeterminate += 1
                elif mine is theirs:
                    res.agree += 1
                    res.true_answers += mine is Verdict.TRUE
                else:
                    res.disagree += 1
                    if len(res.mismatches) < keep_mismatches:
                        res.mismatches.append((query, mine, theirs))
        pairs.extend(results[label] for label, _ in others)
    return EntailReport(pairs)
