"""Refinement checking for modal transition systems and their Boolean and
parametric extensions: direct fixpoint checkers, a QBF reduction, exact
thorough refinement via avoid sets, hull-based approximations, and a seeded
benchmark harness."""

from .systems import (
    System,
    SystemKind,
    classify,
    induce_valuation,
    is_deterministic,
    make_system,
    prune,
    tran_sets,
)
from .formulas import Formula, evaluate
from .modal import (
    ModalVerdict,
    bounded_refines,
    refines_bmts,
    refines_mts,
    refines_pmts,
    refines_pmts_fixed_relation,
)
from .qbf import QbfInstance, encode_bmts, encode_pmts, evaluate_qbf, solve_external, to_qdimacs
from .thorough import (
    compute_avoid,
    enumerate_implementations,
    thorough_refines,
    thorough_refines_bmts,
    thorough_refines_pmts,
)
from .transform import (
    MultiInitialSystem,
    denegate,
    deparameterize,
    deterministic_hull,
    parameter_free_hull,
)
from .approx import Answer, SandwichRule, SandwichVerdict, decide_thorough_approx
from .textfmt import parse_file, parse_system, serialize_system
from .generate import GenConfig, generate

__all__ = [
    "Answer",
    "Formula",
    "GenConfig",
    "ModalVerdict",
    "MultiInitialSystem",
    "QbfInstance",
    "SandwichRule",
    "SandwichVerdict",
    "System",
    "SystemKind",
    "bounded_refines",
    "classify",
    "compute_avoid",
    "decide_thorough_approx",
    "denegate",
    "deparameterize",
    "deterministic_hull",
    "encode_bmts",
    "encode_pmts",
    "enumerate_implementations",
    "evaluate",
    "evaluate_qbf",
    "generate",
    "induce_valuation",
    "is_deterministic",
    "make_system",
    "parameter_free_hull",
    "parse_file",
    "parse_system",
    "prune",
    "refines_bmts",
    "refines_mts",
    "refines_pmts",
    "refines_pmts_fixed_relation",
    "serialize_system",
    "solve_external",
    "thorough_refines",
    "thorough_refines_bmts",
    "thorough_refines_pmts",
    "to_qdimacs",
    "tran_sets",
]

__version__ = "0.1.0"
