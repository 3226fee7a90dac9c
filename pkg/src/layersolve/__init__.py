"""Hybrid finite differences on generalized Shishkin meshes for parabolic turning-point problems."""

from .analysis import ConvergenceTable, DoubleMeshResult, MPolicy, double_mesh, double_mesh_error, order, run_experiment
from .discretization import (
    AssemblyError,
    NodeClassification,
    PivotError,
    SchemeTag,
    TridiagonalSystem,
    assemble_central,
    assemble_hybrid,
    assemble_upwind,
    classify_nodes,
    is_m_matrix,
    thomas_solve,
)
from .mesh import LStrategy, MeshKind, Region, SpatialMesh, TimeMesh, bisect, compute_L, generalized_shishkin, standard_shishkin, uniform_mesh
from .problem import TurningPointProblem, ValidationReport, builtin_problem_1, builtin_problem_2, constant_problem, validate
from .solver import MeshOptions, Scheme, SolutionGrid, build_mesh, restrict_to_coarse, solve

__all__ = [
    "ConvergenceTable",
    "DoubleMeshResult",
    "MPolicy",
    "double_mesh",
    "double_mesh_error",
    "order",
    "run_experiment",
    "AssemblyError",
    "NodeClassification",
    "PivotError",
    "SchemeTag",
    "TridiagonalSystem",
    "assemble_central",
    "assemble_hybrid",
    "assemble_upwind",
    "classify_nodes",
    "is_m_matrix",
    "thomas_solve",
    "LStrategy",
    "MeshKind",
    "Region",
    "SpatialMesh",
    "TimeMesh",
    "bisect",
    "compute_L",
    "generalized_shishkin",
    "standard_shishkin",
    "uniform_mesh",
    "TurningPointProblem",
    "ValidationReport",
    "builtin_problem_1",
    "builtin_problem_2",
    "constant_problem",
    "validate",
    "MeshOptions",
    "Scheme",
    "SolutionGrid",
    "build_mesh",
    "restrict_to_coarse",
    "solve",
]
