"""Extruded Miura-Ori: generation, validation, folding simulation and skin tiling."""
from .extrusion import (
    ExtrudedModel,
    ExtrusionSpec,
    NonDevelopable,
    NoValidDirection,
    ValidationReport,
    build_extruded_model,
    develop_model,
    extrusion_direction,
    validate_model,
)
from .fold_sim import (
    ConvergenceFailure,
    FoldPath,
    MissingFinalState,
    construct_final_state,
    extract_final_state,
    find_sigma_zero_states,
    fold_both_ways,
    simulate_fold_path,
    triangulate_skins,
)
from .geom_core import eq1_residual, rotate_z, solve_horizontal_direction
from .mesh import FoldedMesh
from .miura import DegenerateParameters, MiuraParams, alternate_mode_mesh, derive_angles, fold_miura_mesh
from .tiling import (
    TilingReport,
    classify_tiling,
    measure_gap_and_shift,
    solve_double_tiling,
    verify_dual_tiling_structure,
)

__version__ = "0.1.0"

__all__ = [
    "ConvergenceFailure",
    "DegenerateParameters",
    "ExtrudedModel",
    "ExtrusionSpec",
    "FoldPath",
    "FoldedMesh",
    "MissingFinalState",
    "MiuraParams",
    "NoValidDirection",
    "NonDevelopable",
    "TilingReport",
    "ValidationReport",
    "alternate_mode_mesh",
    "build_extruded_model",
    "classify_tiling",
    "construct_final_state",
    "derive_angles",
    "develop_model",
    "eq1_residual",
    "extract_final_state",
    "extrusion_direction",
    "find_sigma_zero_states",
    "fold_both_ways",
    "fold_miura_mesh",
    "measure_gap_and_shift",
    "rotate_z",
    "simulate_fold_path",
    "solve_double_tiling",
    "solve_horizontal_direction",
    "triangulate_skins",
    "validate_model",
    "verify_dual_tiling_structure",
]
