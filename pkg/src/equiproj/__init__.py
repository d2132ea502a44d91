"""Measurement-only gates from equiangular projections.

Octonion algebra, equiangularity certification, gate synthesis into
projection sequences, a forced-measurement simulator and family audits.
"""
from .octonions import Octonion, matrep, oct_mul, verify_suite
from .projections import (
    EquiangularReport, Projection, dihedral_angle, graph_projection, is_equiangular,
    is_strongly_equiangular, make_projection,
)
from .synthesis import (
    GateProgram, GeneratorTerm, Label, ProjectionSequence, SynthesisOptions, compile_program,
    decompose_so8, embed_su4, evaluate,
)
from .simulate import BACKEND, run_forced, run_trials

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "EquiangularReport", "GateProgram", "GeneratorTerm", "Label", "Octonion", "Projection",
    "ProjectionSequence", "SynthesisOptions", "compile_program", "decompose_so8", "dihedral_angle", "embed_su4",
    "evaluate", "graph_projection", "is_equiangular", "is_strongly_equiangular", "make_projection", "matrep",
    "oct_mul", "run_forced", "run_trials", "verify_suite",
]
