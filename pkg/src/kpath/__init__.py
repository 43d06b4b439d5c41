"""Deterministic k-path solvers built on representative set families."""

from .analysis import (
    OptResult,
    calc_Y1,
    calc_Y2,
    calc_Y3,
    optimize,
    phi,
    special_case_bound,
)
from .cutpath import (
    CutInstance,
    CutParams,
    DPEntry,
    InfeasibleParamsError,
    derive_params,
    k_table_step,
    m_table_step,
    solve_cut,
    validate_properties,
)
from .families import (
    ApproxUFParams,
    CapExceededError,
    SetFamily,
    UniversePartition,
    approx_universal_family,
    rep_family,
    strictify,
    universal_family,
    verify_approx_universal,
    verify_representation,
    verify_universal,
)
from .graph import (
    Digraph,
    GraphFormatError,
    VertexSet,
    in_neighbors,
    out_neighbors,
    parse_graph,
    render_graph,
)
from .solver import (
    BudgetExceededError,
    SolveConfig,
    SolveResult,
    baseline_kpath,
    brute_force_kpath,
    cut_solver,
    solve,
)

__all__ = [
    "ApproxUFParams",
    "BudgetExceededError",
    "CapExceededError",
    "CutInstance",
    "CutParams",
    "Digraph",
    "DPEntry",
    "GraphFormatError",
    "InfeasibleParamsError",
    "OptResult",
    "SetFamily",
    "SolveConfig",
    "SolveResult",
    "UniversePartition",
    "VertexSet",
    "approx_universal_family",
    "baseline_kpath",
    "brute_force_kpath",
    "calc_Y1",
    "calc_Y2",
    "calc_Y3",
    "cut_solver",
    "derive_params",
    "in_neighbors",
    "k_table_step",
    "m_table_step",
    "optimize",
    "out_neighbors",
    "parse_graph",
    "phi",
    "rep_family",
    "render_graph",
    "solve",
    "solve_cut",
    "special_case_bound",
    "strictify",
    "universal_family",
    "validate_properties",
    "verify_approx_universal",
    "verify_representation",
    "verify_universal",
]
