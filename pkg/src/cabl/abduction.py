"""Abduction spaces and consistency-based candidate selection.

An abduction space holds every label sequence ``z`` over an active domain
whose deduction under a (sub-)knowledge base yields the observed target.
Members are kept in lexicographic order, where labels compare by their
index in the task's concept list (``zero < one < ... < nine`` for digits).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np


class EnumerationCapExceeded(RuntimeError):
    """Generic enumeration would exceed the candidate cap; use a task oracle."""


class EmptySpace(ValueError):
    """No label sequence over the active domain explains the target."""


DEFAULT_CAP = 10**7


@dataclass(frozen=True)
class AbductionSpace:
    target: object
    domain: tuple
    members: tuple

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, z) -> bool:
        return tuple(z) in set(self.members)


@dataclass(frozen=True)
class ConceptDistribution:
    """Per-position probability vectors over the full label list ``labels``."""

    probs: np.ndarray
    labels: tuple

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 2 or p.shape[1] != len(self.labels):
            raise ValueError(f"expected shape (m, {len(self.labels)}), got {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValueError("probabilities must be finite and nonnegative")
        if not np.allclose(p.sum(axis=1), 1.0, rtol=0, atol=1e-9):
            raise ValueError("each position's probabilities must sum to 1")
        object.__setattr__(self, "probs", p)

    @property
    def m(self) -> int:
        return self.probs.shape[0]

    @classmethod
    def uniform(cls, m: int, labels: Sequence[str]) -> "ConceptDistribution":
        n = len(labels)
        return cls(np.full((m, n), 1.0 / n), tuple(labels))

    @classmethod
    def from_dicts(cls, rows: Sequence[Mapping[str, float]], labels: Sequence[str]) -> "ConceptDistribution":
        """Build from sparse rows; the leftover mass is spread over unnamed labels."""
        labels = tuple(labels)
        out = np.zeros((len(rows), len(labels)))
        for i, row in enumerate(rows):
            named = {labels.index(k): v for k, v in row.items()}
            rest = [j for j in range(len(labels)) if j not in named]
            leftover = 1.0 - sum(named.values())
            for j, v in named.items():
                out[i, j] = v
            if rest:
                out[i, rest] = leftover / len(rest)
        return cls(out, labels)


def same_target(value, y) -> bool:
    # bools are ints in Python; keep True from matching a sum of 1
    if isinstance(y, bool) or isinstance(value, bool):
        return value is y
    return value == y


def _ordered(domain: Sequence[str], task) -> tuple:
    return tuple(sorted(set(domain), key=task.label_index.__getitem__))


def abduction_space_generic(
    kb, y, m: int, domain: Sequence[str], *, task, context=None, cap: int = DEFAULT_CAP
) -> AbductionSpace:
    """Brute force: run deduction on every sequence in ``domain**m``."""
    domain = _ordered(domain, task)
    if len(domain) ** m > cap:
        raise EnumerationCapExceeded(f"{len(domain)}^{m} candidates exceed the cap of {cap}")
    members = tuple(
        z for z in itertools.product(domain, repeat=m) if same_target(task.deduce(z, context, kb), y)
    )
    return AbductionSpace(y, domain, members)


def abduction_space_oracle(task, y, m: int, domain: Sequence[str], context=None) -> AbductionSpace:
    """Task-specific enumeration that skips the logic engine."""
    if not hasattr(task, "oracle"):
        raise ValueError(f"no abduction oracle for task {task!r}")
    if m != task.m:
        raise ValueError(f"task expects sequences of length {task.m}, got {m}")
    domain = _ordered(domain, task)
    return AbductionSpace(y, domain, tuple(task.oracle(y, domain, context)))


def conditioned_space(space: AbductionSpace, fixed: Mapping[int, str]) -> AbductionSpace:
    if not fixed:
        return space
    items = sorted(fixed.items())
    kept = tuple(z for z in space.members if all(z[i] == label for i, label in items))
    return AbductionSpace(space.target, space.domain, kept)


def consistency_score(z: Sequence[str], dist: ConceptDistribution) -> float:
    if len(z) != dist.m:
        raise ValueError(f"sequence length {len(z)} does not match {dist.m} positions")
    index = {label: i for i, label in enumerate(dist.labels)}
    return float(np.prod([dist.probs[pos, index[label]] for pos, label in enumerate(z)]))


def _scores(members: Sequence[tuple], probs: np.ndarray, labels: Sequence[str]) -> np.ndarray:
    index = {label: i for i, label in enumerate(labels)}
    idx = np.array([[index[label] for label in z] for z in members], dtype=np.intp)
    return probs[np.arange(probs.shape[0]), idx].prod(axis=1)


def select_candidate(space: AbductionSpace, dist: ConceptDistribution | np.ndarray, labels=None) -> tuple:
    """Member with the highest product of per-position probabilities.

    ``dist`` may also be a raw (possibly unnormalized) ``(m, N)`` array,
    in which case ``labels`` names its columns.  Ties go to the earliest
    member in lexicographic order.
    """
    if not space.members:
        raise EmptySpace(f"no candidate explains target {space.target!r}")
    if isinstance(dist, ConceptDistribution):
        probs, labels = dist.probs, dist.labels
    else:
        probs = np.asarray(dist, dtype=float)
        if labels is None:
            raise ValueError("labels are required with a raw probability array")
    if len(space.members) == 1:
        return space.members[0]
    return space.members[int(np.argmax(_scores(space.members, probs, labels)))]
