"""Abduction-space size sweep over the number of digits.

For each ``d`` the sweep writes one row for the full space of a canonical
instance (operands ``1313...`` and ``7373...``, so ``d=2`` gives the sum 86)
and one row per curriculum phase.  A phase row averages, over seeded random
instances whose labels all lie in ``Z_p``:

* ``space_size``: the raw restricted space ``|S_p|`` over ``Z_p``;
* ``conditioned_size``: ``S_p`` after fixing every position whose true label
  was already introduced in an earlier phase, i.e. the labels the model is
  assumed to predict above chance by the time phase ``p`` starts.
"""

from __future__ import annotations

import csv
import time
from pathlib import Path

import numpy as np

from ._random import stream
from .abduction import abduction_space_oracle, conditioned_space
from .partition import partition
from .tasks import AdditionTask

COLUMNS = (
    "task", "base", "d", "m", "tau", "phase", "domain_size",
    "space_size", "bound_Nm", "conditioned_size", "wall_ms",
)


def canonical_operands(base: int, d: int) -> tuple[int, int]:
    a = int(("13" * d)[:d], base)
    b = int(("73" * d)[:d], base)
    return a, b


def sweep(base: int, digits: range, tau: int | None = 2, samples: int = 20, seed: int = 0) -> list[dict]:
    rows = []
    for d in digits:
        task = AdditionTask(base=base, digits=d)
        n, m = task.n_labels, task.m
        a, b = canonical_operands(base, d)
        start = time.perf_counter()
        full = abduction_space_oracle(task, a + b, m, task.concepts)
        rows.append(
            _row(base, d, m, tau, 0, n, len(full), n**m, len(full), (time.perf_counter() - start) * 1000)
        )
        curriculum = partition(task.kb, tau)
        rng = stream(seed, f"abspace/{base}/{d}")
        previous: set = set()
        for phase in curriculum:
            start = time.perf_counter()
            domain = list(phase.domain)
            raw, cond = [], []
            for _ in range(samples):
                labels = tuple(domain[k] for k in rng.integers(0, len(domain), size=m))
                y = task.native_target(labels)
                space = abduction_space_oracle(task, y, m, domain)
                fixed = {i: z for i, z in enumerate(labels) if z in previous}
                raw.append(len(space))
                cond.append(len(conditioned_space(space, fixed)))
            rows.append(
                _row(
                    base, d, m, tau, phase.index, len(domain), float(np.mean(raw)),
                    len(domain) ** m, float(np.mean(cond)), (time.perf_counter() - start) * 1000,
                )
            )
            previous = set(phase.domain)
    return rows


def _row(base, d, m, tau, phase, domain_size, space, bound, conditioned, wall_ms) -> dict:
    return {
        "task": "addition",
        "base": base,
        "d": d,
        "m": m,
        "tau": "" if tau is None else tau,
        "phase": phase,
        "domain_size": domain_size,
        "space_size": space,
        "bound_Nm": bound,
        "conditioned_size": conditioned,
        "wall_ms": f"{wall_ms:.3f}",
    }


def write_csv(rows: list[dict], path) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow({k: _fmt(v) for k, v in row.items()})


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4f}"
    return v


def trend(rows: list[dict]) -> list[tuple]:
    """Per d: (d, full space size, max conditioned phase size / full size)."""
    out = []
    for d in sorted({r["d"] for r in rows}):
        mine = [r for r in rows if r["d"] == d]
        full = next(r["space_size"] for r in mine if r["phase"] == 0)
        worst = max(float(r["conditioned_size"]) for r in mine if r["phase"] > 0)
        out.append((d, full, worst / full))
    return out
