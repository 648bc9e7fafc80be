"""Curriculum abductive learning loop and the single-phase ABL baseline.

One iteration processes one training example: predict labels with the
current model, keep them when they already deduce the example's target
under the active sub-base, otherwise abduce the candidates over the active
concept domain and pick the one the model finds most probable, then take
one gradient step towards the chosen labels.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from sklearn.base import BaseEstimator

from ._random import stream
from .abduction import EmptySpace, abduction_space_oracle, same_target, select_candidate
from .datasets import ExampleSet, SyntheticDatasetSpec, generate_dataset
from .partition import Curriculum, partition, single_phase
from .perception import SoftmaxConceptClassifier, eval_concept_accuracy
from .tasks import make_task

METHODS = ("cabl", "abl")
DEFAULT_MAX_PER_PHASE = 1000


@dataclass(frozen=True)
class TrainConfig:
    task: str = "addition"
    base: int = 10
    digits: int = 1
    board_size: int = 8
    pieces: int = 3
    method: str = "cabl"
    tau: int | None = 2
    max_iterations: int = 2000
    gate_check_every: int = 50
    # None: 1000, or max_iterations when that is smaller
    max_iterations_per_phase: int | None = None
    learning_rate: float = 0.1
    init_scale: float = 0.01
    seed: int = 0
    feature_dim: int = 16
    class_separation: float = 3.0
    noise_sigma: float = 1.0
    train_size: int = 5000
    val_size: int = 200

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.task not in ("addition", "chess"):
            raise ValueError("task must be 'addition' or 'chess'")
        for name in ("max_iterations", "gate_check_every"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        per_phase = self.per_phase_limit
        if not self.gate_check_every <= per_phase <= self.max_iterations:
            raise ValueError("need gate_check_every <= max_iterations_per_phase <= max_iterations")

    @property
    def per_phase_limit(self) -> int:
        if self.max_iterations_per_phase is not None:
            return self.max_iterations_per_phase
        return max(self.gate_check_every, min(DEFAULT_MAX_PER_PHASE, self.max_iterations))

    def make_task(self):
        if self.task == "addition":
            return make_task("addition", base=self.base, digits=self.digits)
        return make_task("chess", board_size=self.board_size, pieces=self.pieces)

    @property
    def dataset_spec(self) -> SyntheticDatasetSpec:
        return SyntheticDatasetSpec(
            feature_dim=self.feature_dim,
            class_separation=self.class_separation,
            noise_sigma=self.noise_sigma,
            seed=self.seed,
            train_size=self.train_size,
            val_size=self.val_size,
        )

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class MetricsRecord:
    iteration: int
    phase: int
    per_label: dict
    mean_acc: float
    seq_acc: float
    space_mean: float
    skipped: int
    wall_ms: float = field(default=0.0, compare=False)


@dataclass
class RunReport:
    config: dict
    labels: tuple
    records: list
    phase_transitions: list
    forced_transitions: list
    phase_concepts: list
    gate_passed_at: list
    normalization_violations: int = 0
    pseudo_label_violations: int = 0
    model_summary: dict = field(default_factory=dict)
    partition_seconds: float = field(default=0.0, compare=False)
    wall_seconds: float = field(default=0.0, compare=False)

    @property
    def method(self) -> str:
        return self.config.get("method", "?")

    @property
    def final(self) -> MetricsRecord:
        if not self.records:
            raise ValueError("report has no metrics records")
        return self.records[-1]

    @property
    def any_forced(self) -> bool:
        return any(self.forced_transitions)

    def iterations_to_fraction(self, fraction: float = 0.9) -> int:
        """First recorded iteration whose mean accuracy reaches ``fraction`` of the final one."""
        goal = fraction * self.final.mean_acc
        for rec in self.records:
            if rec.mean_acc >= goal:
                return rec.iteration
        return self.final.iteration

    def accuracy_at(self, iteration: int, label: str) -> float:
        for rec in self.records:
            if rec.iteration == iteration:
                return rec.per_label[label]
        raise KeyError(iteration)

    def forgetting(self) -> dict:
        """Per phase: mean over its new concepts of (final accuracy - accuracy when its gate passed)."""
        out = {}
        for p, (concepts, passed) in enumerate(zip(self.phase_concepts, self.gate_passed_at), start=1):
            if passed is None:
                continue
            deltas = [self.final.per_label[c] - self.accuracy_at(passed, c) for c in concepts]
            out[p] = float(np.mean(deltas))
        return out

    # output files ------------------------------------------------------------

    def metrics_header(self) -> list:
        base = ["iteration", "phase", "seq_acc", "mean_acc", "space_mean", "skipped", "wall_ms"]
        return base + [f"acc_{label}" for label in self.labels]

    def write_metrics_csv(self, path) -> None:
        # wall_ms stays empty here so repeated runs give byte-identical files;
        # the measured times go to timing.csv
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(self.metrics_header())
            for r in self.records:
                w.writerow(
                    [r.iteration, r.phase, f"{r.seq_acc:.6f}", f"{r.mean_acc:.6f}", f"{r.space_mean:.4f}", r.skipped, ""]
                    + [f"{r.per_label[label]:.6f}" for label in self.labels]
                )

    def write_timing_csv(self, path) -> None:
        with Path(path).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "wall_ms"])
            for r in self.records:
                w.writerow([r.iteration, f"{r.wall_ms:.3f}"])
            w.writerow(["partition", f"{self.partition_seconds * 1000:.3f}"])

    def to_json(self) -> dict:
        return {
            "config": self.config,
            "labels": list(self.labels),
            "phase_transitions": self.phase_transitions,
            "forced_transitions": self.forced_transitions,
            "phase_concepts": [list(c) for c in self.phase_concepts],
            "gate_passed_at": self.gate_passed_at,
            "normalization_violations": self.normalization_violations,
            "pseudo_label_violations": self.pseudo_label_violations,
            "model_summary": self.model_summary,
            "records": [
                {
                    "iteration": r.iteration,
                    "phase": r.phase,
                    "per_label": r.per_label,
                    "mean_acc": r.mean_acc,
                    "seq_acc": r.seq_acc,
                    "space_mean": r.space_mean,
                    "skipped": r.skipped,
                }
                for r in self.records
            ],
        }

    @classmethod
    def from_json(cls, data: dict) -> "RunReport":
        records = [MetricsRecord(**r) for r in data["records"]]
        return cls(
            config=data["config"],
            labels=tuple(data["labels"]),
            records=records,
            phase_transitions=data["phase_transitions"],
            forced_transitions=data["forced_transitions"],
            phase_concepts=[tuple(c) for c in data["phase_concepts"]],
            gate_passed_at=data["gate_passed_at"],
            normalization_violations=data.get("normalization_violations", 0),
            pseudo_label_violations=data.get("pseudo_label_violations", 0),
            model_summary=data.get("model_summary", {}),
        )

    def write(self, out_dir) -> Path:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.write_metrics_csv(out / "metrics.csv")
        self.write_timing_csv(out / "timing.csv")
        with (out / "config.txt").open("w") as fh:
            for key, value in self.config.items():
                fh.write(f"{key}={'' if value is None else value}\n")
        with (out / "report.json").open("w") as fh:
            json.dump(self.to_json(), fh, indent=1, sort_keys=True)
            fh.write("\n")
        (out / "summary.txt").write_text(self.summary_text())
        return out

    def summary_text(self) -> str:
        f = self.final
        lines = [
            f"method={self.method} iterations={f.iteration} phases={len(self.phase_concepts)}",
            f"final mean concept accuracy={f.mean_acc:.4f} sequence accuracy={f.seq_acc:.4f}",
            f"iterations to 90% of final={self.iterations_to_fraction(0.9)}",
            f"phase transitions={self.phase_transitions} forced={self.forced_transitions}",
            f"skipped examples={f.skipped}",
        ]
        return "\n".join(lines) + "\n"


def load_report(run_dir) -> RunReport:
    run_dir = Path(run_dir)
    with (run_dir / "report.json").open() as fh:
        report = RunReport.from_json(json.load(fh))
    timing = run_dir / "timing.csv"
    if timing.exists():
        with timing.open(newline="") as fh:
            rows = [r for r in csv.DictReader(fh) if r["iteration"].isdigit()]
        if rows:
            report.wall_seconds = float(rows[-1]["wall_ms"]) / 1000.0
    return report


def phase_gate(acc: dict, domain, n_labels: int) -> bool:
    """Every active concept must beat uniform guessing over all ``n_labels`` labels."""
    missing = [z for z in domain if z not in acc]
    if missing:
        raise ValueError(f"no accuracy for {missing}")
    return all(acc[z] > 1.0 / n_labels for z in domain)


def schedule_data(examples: ExampleSet, domain, labels, final: bool = False) -> np.ndarray:
    """Indices of the examples whose true labels all lie in ``domain``."""
    if final:
        return np.arange(len(examples))
    allowed = np.zeros(len(labels), dtype=bool)
    allowed[[labels.index(z) for z in domain]] = True
    idx = np.flatnonzero(allowed[examples.concepts].all(axis=1))
    if idx.size == 0:
        raise ValueError(f"no training example uses only {sorted(domain)}; enlarge train_size")
    return idx


class CurriculumABL(BaseEstimator):
    """Estimator wrapper around the abduce-select-update loop.

    ``fit(train, val)`` takes two :class:`ExampleSet` objects; the fitted
    perception model is ``model_`` and the metrics stream ``report_``.
    """

    def __init__(
        self,
        task=None,
        method="cabl",
        tau=2,
        max_iterations=2000,
        gate_check_every=50,
        max_iterations_per_phase=None,
        learning_rate=0.1,
        init_scale=0.01,
        random_state=0,
    ):
        self.task = task
        self.method = method
        self.tau = tau
        self.max_iterations = max_iterations
        self.gate_check_every = gate_check_every
        self.max_iterations_per_phase = max_iterations_per_phase
        self.learning_rate = learning_rate
        self.init_scale = init_scale
        self.random_state = random_state

    def _curriculum(self) -> Curriculum:
        if self.method == "abl":
            return single_phase(self.task.kb)
        if self.method != "cabl":
            raise ValueError(f"unknown method {self.method!r}")
        return partition(self.task.kb, self.tau)

    def _per_phase_limit(self) -> int:
        if self.max_iterations_per_phase is not None:
            return self.max_iterations_per_phase
        return max(self.gate_check_every, min(DEFAULT_MAX_PER_PHASE, self.max_iterations))

    def fit(self, train: ExampleSet, val: ExampleSet, config: dict | None = None):
        if self.task is None:
            raise ValueError("task is required")
        task = self.task
        labels = tuple(task.concepts)
        n_labels = len(labels)
        m = task.m
        start = time.perf_counter()
        curriculum = self._curriculum()
        per_phase_limit = self._per_phase_limit()

        model = SoftmaxConceptClassifier(
            n_classes=n_labels,
            learning_rate=self.learning_rate,
            init_scale=self.init_scale,
            random_state=self.random_state,
        ).initialize(train.features.shape[-1])
        order_rng = stream(self.random_state, "order")

        records: list = []
        transitions: list = []
        forced: list = []
        gate_passed: list = [None] * len(curriculum)
        counters = {"skipped": 0, "norm": 0, "pseudo": 0, "space_sum": 0, "space_n": 0}

        def evaluate(t: int, p: int) -> dict:
            acc = eval_concept_accuracy(model, val.features, val.concepts, labels)
            pred = model.predict(val.features.reshape(-1, val.features.shape[-1])).reshape(val.concepts.shape)
            seq = float((pred == val.concepts).all(axis=1).mean())
            space_mean = counters["space_sum"] / counters["space_n"] if counters["space_n"] else 0.0
            counters["space_sum"] = counters["space_n"] = 0
            records.append(
                MetricsRecord(
                    iteration=t,
                    phase=p + 1,
                    per_label=acc,
                    mean_acc=float(np.mean([acc[z] for z in labels])),
                    seq_acc=seq,
                    space_mean=float(space_mean),
                    skipped=counters["skipped"],
                    wall_ms=(time.perf_counter() - start) * 1000.0,
                )
            )
            return acc

        p = 0
        phase = curriculum[p]
        final = len(curriculum) == 1

        def enter(p):
            ph = curriculum[p]
            last = p == len(curriculum) - 1
            pool = schedule_data(train, ph.domain, list(labels), final=last)
            active = np.array(sorted(labels.index(z) for z in ph.domain), dtype=np.intp)
            return ph, last, pool, active

        phase, final, pool, active = enter(p)
        active_names = [labels[k] for k in active]
        queue: list = []
        in_phase = 0
        evaluate(0, p)

        for t in range(1, self.max_iterations + 1):
            if not queue:
                queue = list(order_rng.permutation(pool)[::-1])
            i = int(queue.pop())
            x = train.features[i]
            ctx = train.context(i)
            y = train.targets[i]

            probs = model.predict_proba(x)
            if not _normalized(probs):
                counters["norm"] += 1
            sub = probs[:, active]
            z_hat = tuple(active_names[j] for j in sub.argmax(axis=1))
            if same_target(task.deduce(z_hat, ctx, phase.kb), y):
                z_bar = z_hat
            else:
                space = abduction_space_oracle(task, y, m, phase.domain, ctx)
                counters["space_sum"] += len(space)
                counters["space_n"] += 1
                try:
                    z_bar = select_candidate(space, sub, labels=active_names)
                except EmptySpace:
                    z_bar = None
                    counters["skipped"] += 1
            if z_bar is not None:
                if not same_target(task.deduce(z_bar, ctx, phase.kb), y):
                    counters["pseudo"] += 1
                model.train_step(x, np.array([task.label_index[z] for z in z_bar]))
            in_phase += 1

            advance = False
            if t % self.gate_check_every == 0:
                acc = evaluate(t, p)
                if phase_gate(acc, phase.domain, n_labels):
                    if gate_passed[p] is None:
                        gate_passed[p] = t
                    advance = not final
            if not advance and not final and in_phase >= per_phase_limit:
                advance = True
                forced.append(True)
                transitions.append(t)
            elif advance:
                forced.append(False)
                transitions.append(t)
            if advance and t < self.max_iterations:
                p += 1
                phase, final, pool, active = enter(p)
                active_names = [labels[k] for k in active]
                queue = []
                in_phase = 0

        if records[-1].iteration != self.max_iterations:
            evaluate(self.max_iterations, p)

        self.model_ = model
        self.curriculum_ = curriculum
        self.report_ = RunReport(
            config=dict(config) if config is not None else self._echo(),
            labels=labels,
            records=records,
            phase_transitions=transitions,
            forced_transitions=forced,
            phase_concepts=[ph.new_concepts for ph in curriculum],
            gate_passed_at=gate_passed,
            normalization_violations=counters["norm"],
            pseudo_label_violations=counters["pseudo"],
            model_summary={
                "coef_norm": round(float(np.linalg.norm(model.coef_)), 6),
                "steps": model.n_steps_,
                "phases_reached": p + 1,
            },
            partition_seconds=curriculum.elapsed_seconds,
            wall_seconds=time.perf_counter() - start,
        )
        return self

    def _echo(self) -> dict:
        params = self.get_params()
        params["task"] = self.task.describe() if self.task is not None else None
        return params

    def predict(self, features: np.ndarray) -> np.ndarray:
        """Label indices of shape (n, m) for features of shape (n, m, dim)."""
        features = np.asarray(features, dtype=float)
        flat = self.model_.predict(features.reshape(-1, features.shape[-1]))
        return flat.reshape(features.shape[:-1])

    def score(self, val: ExampleSet) -> float:
        acc = eval_concept_accuracy(self.model_, val.features, val.concepts, self.task.concepts)
        return float(np.mean(list(acc.values())))


def _normalized(probs: np.ndarray) -> bool:
    return bool(np.all(np.isfinite(probs)) and np.all(probs >= 0) and np.allclose(probs.sum(axis=1), 1.0, rtol=0, atol=1e-9))


def run_training(config: TrainConfig, data: tuple[ExampleSet, ExampleSet] | None = None) -> RunReport:
    task = config.make_task()
    train, val = data if data is not None else generate_dataset(config.dataset_spec, task)
    est = CurriculumABL(
        task=task,
        method=config.method,
        tau=config.tau,
        max_iterations=config.max_iterations,
        gate_check_every=config.gate_check_every,
        max_iterations_per_phase=config.per_phase_limit,
        learning_rate=config.learning_rate,
        init_scale=config.init_scale,
        random_state=config.seed,
    )
    est.fit(train, val, config=config.as_dict())
    return est.report_


@dataclass(frozen=True)
class RunComparison:
    rows: list

    def table(self) -> str:
        header = ["run", "method", "final_mean_acc", "iters_to_90pct", "wall_s", "forgetting"]
        lines = ["\t".join(header)]
        for row in self.rows:
            lines.append("\t".join(str(row[k]) for k in header))
        return "\n".join(lines) + "\n"


def compare_runs(*reports: RunReport, names=None) -> RunComparison:
    if len(reports) < 2:
        raise ValueError("need at least two runs to compare")
    tasks = {json.dumps(_task_identity(r.config), sort_keys=True) for r in reports}
    if len(tasks) != 1:
        raise ValueError("runs use different tasks")
    rows = []
    for k, r in enumerate(reports):
        forgetting = r.forgetting()
        rows.append(
            {
                "run": names[k] if names else str(k),
                "method": r.method,
                "final_mean_acc": f"{r.final.mean_acc:.4f}",
                "iters_to_90pct": r.iterations_to_fraction(0.9),
                "wall_s": f"{r.wall_seconds:.2f}",
                "forgetting": ";".join(f"p{p}:{d:+.3f}" for p, d in forgetting.items()) or "-",
            }
        )
    return RunComparison(rows)


def _task_identity(config: dict) -> dict:
    task = config.get("task")
    if isinstance(task, dict):
        return task
    keys = ("task", "base", "digits") if task == "addition" else ("task", "board_size", "pieces")
    return {k: config.get(k) for k in keys}


__all__ = [
    "CurriculumABL",
    "MetricsRecord",
    "RunComparison",
    "RunReport",
    "TrainConfig",
    "compare_runs",
    "load_report",
    "phase_gate",
    "run_training",
    "schedule_data",
]
