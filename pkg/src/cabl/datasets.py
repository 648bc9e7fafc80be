"""Synthetic perception inputs standing in for image datasets.

Each concept label owns a class mean; the means are the vertices of a
regular simplex whose edges all have length ``class_separation``, so every
pair of labels is equally confusable.  A position's feature vector is its
label's mean plus isotropic Gaussian noise.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import helmert

from ._random import stream


@dataclass(frozen=True)
class SyntheticDatasetSpec:
    feature_dim: int = 16
    class_separation: float = 3.0
    noise_sigma: float = 1.0
    seed: int = 0
    train_size: int = 5000
    val_size: int = 200

    def __post_init__(self):
        if self.feature_dim < 1:
            raise ValueError("feature_dim must be positive")
        if not self.class_separation > 0:
            raise ValueError("class_separation must be > 0")
        if not self.noise_sigma >= 0:
            raise ValueError("noise_sigma must be >= 0")
        if self.train_size < 1 or self.val_size < 1:
            raise ValueError("train_size and val_size must be positive")


@dataclass
class ExampleSet:
    """Parallel arrays: ``features`` (n, m, dim), ``concepts`` (n, m) label indices."""

    features: np.ndarray
    concepts: np.ndarray
    targets: list
    contexts: list | None = None

    def __len__(self) -> int:
        return len(self.targets)

    def subset(self, idx) -> "ExampleSet":
        idx = np.asarray(idx, dtype=np.intp)
        contexts = None if self.contexts is None else [self.contexts[i] for i in idx]
        return ExampleSet(self.features[idx], self.concepts[idx], [self.targets[i] for i in idx], contexts)

    def context(self, i: int):
        return None if self.contexts is None else self.contexts[i]


def class_means(n_classes: int, feature_dim: int, separation: float) -> np.ndarray:
    """Regular-simplex vertices with pairwise distance ``separation``, zero-padded to ``feature_dim``."""
    if feature_dim < n_classes - 1:
        raise ValueError(f"feature_dim must be at least {n_classes - 1} to hold {n_classes} equidistant means")
    # rows of the identity are pairwise sqrt(2) apart; project onto the sum-zero subspace
    basis = helmert(n_classes)
    vertices = basis @ np.eye(n_classes) * (separation / np.sqrt(2.0))
    out = np.zeros((n_classes, feature_dim))
    out[:, : n_classes - 1] = vertices.T
    return out


def _draw(task, spec: SyntheticDatasetSpec, n: int, rng: np.random.Generator, means: np.ndarray) -> ExampleSet:
    concepts = rng.integers(0, task.n_labels, size=(n, task.m))
    noise = rng.standard_normal((n, task.m, spec.feature_dim))
    features = means[concepts] + spec.noise_sigma * noise
    contexts = None
    if task.boolean_target:
        contexts = [task.sample_context(rng) for _ in range(n)]
    targets = []
    for i in range(n):
        labels = [task.concepts[k] for k in concepts[i]]
        targets.append(task.deduce(labels, None if contexts is None else contexts[i]))
    return ExampleSet(features, concepts, targets, contexts)


def generate_dataset(spec: SyntheticDatasetSpec, task) -> tuple[ExampleSet, ExampleSet]:
    """Train and validation sets; a pure function of ``spec`` and the task."""
    means = class_means(task.n_labels, spec.feature_dim, spec.class_separation)
    train = _draw(task, spec, spec.train_size, stream(spec.seed, "dataset/train"), means)
    val = _draw(task, spec, spec.val_size, stream(spec.seed, "dataset/val"), means)
    return train, val


def bayes_accuracy(n_classes: int, spec: SyntheticDatasetSpec, samples: int = 200_000, seed: int = 0) -> float:
    """Monte-Carlo accuracy of the nearest-mean rule, which is Bayes-optimal here."""
    means = class_means(n_classes, spec.feature_dim, spec.class_separation)
    rng = np.random.default_rng(seed)
    z = rng.integers(0, n_classes, size=samples)
    x = means[z] + spec.noise_sigma * rng.standard_normal((samples, spec.feature_dim))
    d = ((x[:, None, :] - means[None, :, :]) ** 2).sum(axis=2)
    return float((d.argmin(axis=1) == z).mean())


# --------------------------------------------------------------------------- CSV

def dump_dataset(examples: ExampleSet, labels, path: str | Path) -> tuple[Path, Path]:
    """Write one row per position plus a ``<stem>.targets.csv`` sidecar."""
    path = Path(path)
    sidecar = path.with_name(path.stem + ".targets.csv")
    dim = examples.features.shape[-1]
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["example_id", "position", "true_label"] + [f"f{k}" for k in range(dim)])
        for i in range(len(examples)):
            for pos in range(examples.features.shape[1]):
                row = [i, pos, labels[examples.concepts[i, pos]]]
                w.writerow(row + [repr(float(v)) for v in examples.features[i, pos]])
    with sidecar.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        header = ["example_id", "target"] + (["context"] if examples.contexts is not None else [])
        w.writerow(header)
        for i, target in enumerate(examples.targets):
            row = [i, json.dumps(target)]
            if examples.contexts is not None:
                row.append(json.dumps([list(c) for c in examples.contexts[i]]))
            w.writerow(row)
    return path, sidecar


def load_dataset(path: str | Path, labels) -> ExampleSet:
    path = Path(path)
    sidecar = path.with_name(path.stem + ".targets.csv")
    index = {label: k for k, label in enumerate(labels)}
    rows: dict = {}
    with path.open(newline="") as fh:
        for rec in csv.DictReader(fh):
            feats = [float(v) for k, v in rec.items() if k.startswith("f")]
            rows.setdefault(int(rec["example_id"]), {})[int(rec["position"])] = (index[rec["true_label"]], feats)
    n = len(rows)
    m = len(rows[0])
    features = np.array([[rows[i][p][1] for p in range(m)] for i in range(n)])
    concepts = np.array([[rows[i][p][0] for p in range(m)] for i in range(n)], dtype=np.int64)
    targets, contexts = [None] * n, None
    with sidecar.open(newline="") as fh:
        for rec in csv.DictReader(fh):
            i = int(rec["example_id"])
            targets[i] = json.loads(rec["target"])
            if "context" in rec:
                contexts = contexts or [None] * n
                contexts[i] = tuple(tuple(c) for c in json.loads(rec["context"]))
    return ExampleSet(features, concepts, targets, contexts)


def spec_dict(spec: SyntheticDatasetSpec) -> dict:
    return asdict(spec)
