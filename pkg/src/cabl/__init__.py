"""Curriculum abductive learning: split a KB into phases, then train against it with abduction."""

from .abduction import (
    AbductionSpace,
    ConceptDistribution,
    EmptySpace,
    EnumerationCapExceeded,
    abduction_space_generic,
    abduction_space_oracle,
    conditioned_space,
    consistency_score,
    select_candidate,
)
from .datasets import ExampleSet, SyntheticDatasetSpec, generate_dataset
from .logic import KnowledgeBase, parse_program
from .partition import Curriculum, build_dependency_graph, partition
from .perception import SoftmaxConceptClassifier, eval_concept_accuracy
from .tasks import make_addition_task, make_chess_task, make_task
from .trainer import CurriculumABL, RunReport, TrainConfig, compare_runs, phase_gate, run_training, schedule_data

__all__ = [
    "AbductionSpace",
    "ConceptDistribution",
    "Curriculum",
    "CurriculumABL",
    "EmptySpace",
    "EnumerationCapExceeded",
    "ExampleSet",
    "KnowledgeBase",
    "RunReport",
    "SoftmaxConceptClassifier",
    "SyntheticDatasetSpec",
    "TrainConfig",
    "abduction_space_generic",
    "abduction_space_oracle",
    "build_dependency_graph",
    "compare_runs",
    "conditioned_space",
    "consistency_score",
    "eval_concept_accuracy",
    "generate_dataset",
    "make_addition_task",
    "make_chess_task",
    "make_task",
    "parse_program",
    "partition",
    "phase_gate",
    "run_training",
    "schedule_data",
    "select_candidate",
]
