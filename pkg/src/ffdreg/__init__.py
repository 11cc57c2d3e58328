"""Deformation estimation with B-spline FFD and evolutionary optimization."""

from .bench import (
    SyntheticCase,
    generate_wavy_mesh,
    mede,
    procedural_texture,
    rmse,
    synthesize_case,
)
from .coarse2fine import (
    LevelPlan,
    inherit_population,
    plan_levels,
    run_coarse_to_fine,
    subdivide_mesh,
)
from .decision import RegistrationResult, aggregate_pareto, select_best
from .evolution import (
    Individual,
    Population,
    genes_to_mesh,
    mesh_to_genes,
    polynomial_mutation,
    random_population,
    run_simple_ga,
    sbx_crossover,
)
from .ffd import (
    ControlMesh,
    LatticeConfig,
    bspline_weights,
    displacement_at,
    inverse_map,
    load_mesh,
    save_mesh,
    warp_backward,
    warp_forward_points,
)
from .image import (
    GrayImage,
    ImagePyramid,
    build_pyramid,
    read_image,
    sample_bilinear,
    to_grayscale,
    write_pgm,
    write_png,
)
from .moea import (
    crowding_distance,
    das_dennis_points,
    dominates,
    fast_nondominated_sort,
    nsga2_survivor_select,
    nsga3_survivor_select,
    run_nsga2,
    run_nsga3,
)
from .objectives import (
    GroupPartition,
    ObjectiveEvaluator,
    evaluate_objectives,
    partition_groups,
    patch_of,
)

__version__ = "0.1.0"

__all__ = [
    "ControlMesh",
    "GrayImage",
    "GroupPartition",
    "ImagePyramid",
    "Individual",
    "LatticeConfig",
    "LevelPlan",
    "ObjectiveEvaluator",
    "Population",
    "RegistrationResult",
    "SyntheticCase",
    "aggregate_pareto",
    "bspline_weights",
    "build_pyramid",
    "crowding_distance",
    "das_dennis_points",
    "displacement_at",
    "dominates",
    "evaluate_objectives",
    "fast_nondominated_sort",
    "generate_wavy_mesh",
    "genes_to_mesh",
    "inherit_population",
    "inverse_map",
    "load_mesh",
    "mede",
    "mesh_to_genes",
    "nsga2_survivor_select",
    "nsga3_survivor_select",
    "partition_groups",
    "patch_of",
    "plan_levels",
    "polynomial_mutation",
    "procedural_texture",
    "random_population",
    "read_image",
    "rmse",
    "run_coarse_to_fine",
    "run_nsga2",
    "run_nsga3",
    "run_simple_ga",
    "sample_bilinear",
    "save_mesh",
    "sbx_crossover",
    "select_best",
    "subdivide_mesh",
    "synthesize_case",
    "to_grayscale",
    "warp_backward",
    "warp_forward_points",
    "write_pgm",
    "write_png",
]
