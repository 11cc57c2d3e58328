"""Coarse-to-fine schedule: per-level lattices, mesh subdivision, inheritance.

Optimization starts on the coarsest pyramid level. Between levels the control
mesh is refined with Catmull-Clark subdivision (face, edge, and vertex point
averages on the regular quad grid), every displacement is doubled to match
the resolution step, and the optimized population seeds the next level.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decision import RegistrationResult, aggregate_pareto, group_winners, select_best
from .evolution import (
    Individual,
    Population,
    genes_to_mesh,
    make_bounds,
    mesh_to_genes,
    random_population,
    run_simple_ga,
)
from .ffd import ControlMesh, LatticeConfig
from .image import GrayImage, ImagePyramid
from .moea import das_dennis_points, fast_nondominated_sort, run_nsga2, run_nsga3
from .objectives import ObjectiveEvaluator, partition_groups

ALGORITHMS = ("ga", "nsga2", "nsga3")

# Reference-point division counts matching 100 points for two objectives and
# 120 for four.
DEFAULT_REF_DIVISIONS = {2: 99, 4: 7}


@dataclass(frozen=True)
class LevelPlan:
    level: int
    template: GrayImage
    target: GrayImage
    lattice: LatticeConfig
    bounds: tuple[float, float]
    eval_budget: int


def back_solve_lattice(final_count: int, n_levels: int) -> list[int]:
    """Control-point counts per level so each subdivision step lands exactly."""
    counts = [final_count]
    for _ in range(n_levels - 1):
        prev = (counts[0] + 3) / 2
        if prev != int(prev) or prev < 4:
            raise ValueError("lattice not subdividable to requested depth")
        counts.insert(0, int(prev))
    return counts


def plan_levels(
    final_lattice: tuple[int, int],
    n_levels: int,
    template_pyr: ImagePyramid,
    target_pyr: ImagePyramid,
    final_bounds: tuple[float, float],
    eval_budget: int | list[int] = 10000,
) -> list[LevelPlan]:
    """Per-level plans; coarser levels use back-solved lattices and halved bounds."""
    if template_pyr.n_levels != n_levels or target_pyr.n_levels != n_levels:
        raise ValueError("pyramids must carry exactly n_levels levels")
    lo, hi = float(final_bounds[0]), float(final_bounds[1])
    if lo > hi:
        raise ValueError("invalid bounds")
    nx = back_solve_lattice(final_lattice[0], n_levels)
    ny = back_solve_lattice(final_lattice[1], n_levels)
    if isinstance(eval_budget, int):
        budgets = [eval_budget] * n_levels
    else:
        budgets = list(eval_budget)
        if len(budgets) != n_levels:
            raise ValueError("need one eval budget per level")
    plans = []
    for l in range(1, n_levels + 1):
        tpl = template_pyr.level(l)
        tgt = target_pyr.level(l)
        lattice = LatticeConfig.for_image(nx[l - 1], ny[l - 1], tpl.width, tpl.height)
        scale = 2.0 ** (n_levels - l)
        plans.append(
            LevelPlan(
                level=l,
                template=tpl,
                target=tgt,
                lattice=lattice,
                bounds=(lo / scale, hi / scale),
                eval_budget=budgets[l - 1],
            )
        )
    return plans


def subdivide_mesh(
    mesh: ControlMesh, new_config: LatticeConfig | None = None
) -> ControlMesh:
    """One Catmull-Clark refinement step followed by displacement doubling.

    The refined grid is (2 n_x - 3) x (2 n_y - 3): boundary points whose
    averaging stencils would need discarded neighbors are simply not part of
    the retained window.
    """
    cfg = mesh.config
    nx, ny = cfg.n_x, cfg.n_y
    if nx < 4 or ny < 4:
        raise ValueError("mesh must be at least 4x4")
    d = mesh.displacements

    # Face points: centroid of each patch's four corners.
    face = 0.25 * (d[:-1, :-1] + d[:-1, 1:] + d[1:, :-1] + d[1:, 1:])

    # Edge points on horizontal edges (between x-neighbors): the two incident
    # face points plus the two endpoints, averaged.
    eh = 0.25 * (face[:-1, :] + face[1:, :] + d[1:-1, :-1] + d[1:-1, 1:])

    # Edge points on vertical edges (between y-neighbors).
    ev = 0.25 * (face[:, :-1] + face[:, 1:] + d[:-1, 1:-1] + d[1:, 1:-1])

    # Vertex points: 1/4 face average + 1/2 edge-midpoint average + 1/4 self.
    center = d[1:-1, 1:-1]
    face_avg = 0.25 * (face[:-1, :-1] + face[:-1, 1:] + face[1:, :-1] + face[1:, 1:])
    mid_avg = 0.125 * (d[1:-1, :-2] + d[1:-1, 2:] + d[:-2, 1:-1] + d[2:, 1:-1]) + 0.5 * center
    vertex = 0.25 * face_avg + 0.5 * mid_avg + 0.25 * center

    out = np.empty((2 * ny - 3, 2 * nx - 3, 2))
    out[0::2, 0::2] = face
    out[1::2, 0::2] = eh
    out[0::2, 1::2] = ev
    out[1::2, 1::2] = vertex
    out *= 2.0

    if new_config is None:
        new_config = LatticeConfig.for_image(
            2 * nx - 3, 2 * ny - 3, 2 * cfg.image_w, 2 * cfg.image_h
        )
    elif (new_config.n_x, new_config.n_y) != (2 * nx - 3, 2 * ny - 3):
        raise ValueError("new config does not match the subdivided lattice size")
    return ControlMesh(new_config, out)


def inherit_population(
    pop: Population,
    cfg: LatticeConfig,
    next_cfg: LatticeConfig,
    next_bounds: tuple[float, float],
) -> Population:
    """Subdivide every member's mesh and re-encode it for the next level."""
    lower, upper = make_bounds(next_cfg.n_genes, *next_bounds)
    members = []
    for ind in pop.members:
        mesh = genes_to_mesh(ind.genes, cfg)
        refined = subdivide_mesh(mesh, next_cfg)
        genes = np.clip(mesh_to_genes(refined), lower, upper)
        members.append(Individual(genes, lower, upper))
    return Population(members, pop.generation)


def level_group_count(lattice: LatticeConfig, requested: int) -> int:
    """Largest split from {1, 2, 4} the lattice's patch grid supports.

    Coarse back-solved lattices can be too small for the requested split
    (a 4x4 lattice has a single patch); those levels run with fewer groups
    and the requested count applies from the first level that supports it.
    """
    n = requested
    while n > 1:
        if n == 2 and lattice.patches_x % 2 == 0:
            break
        if n == 4 and lattice.patches_x % 2 == 0 and lattice.patches_y % 2 == 0:
            break
        n //= 2
    return n


def _snapshot(level: int, lattice: LatticeConfig, pop: Population) -> dict:
    return {
        "level": level,
        "lattice": {
            "n_x": lattice.n_x,
            "n_y": lattice.n_y,
            "s_x": lattice.s_x,
            "s_y": lattice.s_y,
            "image_w": lattice.image_w,
            "image_h": lattice.image_h,
        },
        "population": [m.genes.tolist() for m in pop.members],
        "objectives": [m.objectives.tolist() for m in pop.members],
    }


def run_coarse_to_fine(
    algorithm: str,
    plans: list[LevelPlan],
    n_groups: int,
    seed: int,
    pop_size: int = 100,
    stride: int = 5,
    sbx_prob: float = 1.0,
    sbx_eta: float = 15.0,
    mut_prob: float | None = None,
    mut_eta: float = 20.0,
    ref_divisions: int | None = None,
    collect_history: bool = False,
) -> RegistrationResult:
    """Run one algorithm through all pyramid levels and pick the outputs.

    The initial population depends on the seed alone, so different algorithms
    share it; operator draws come from a separate stream.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if algorithm == "ga" and n_groups != 1:
        raise ValueError("ga optimizes a single objective; use n_groups=1")
    if algorithm != "ga" and n_groups < 2:
        raise ValueError(f"{algorithm} needs at least 2 groups")
    if not plans:
        raise ValueError("no level plans")

    init_rng = np.random.default_rng(seed)
    ops_rng = np.random.default_rng([seed, 1])

    # The finest level must support the requested split; coarse levels may
    # fall back to fewer groups.
    partition_groups(plans[-1].lattice, n_groups)
    if algorithm == "nsga3" and ref_divisions is None:
        if n_groups not in DEFAULT_REF_DIVISIONS:
            raise ValueError(f"no default reference divisions for {n_groups} objectives")

    def refs_for(groups: int) -> np.ndarray:
        if groups == 1:
            return das_dennis_points(1, 1)
        div = ref_divisions if groups == n_groups and ref_divisions else None
        return das_dennis_points(groups, div or DEFAULT_REF_DIVISIONS[groups])

    history: list[dict] = []
    pop: Population | None = None
    evaluator: ObjectiveEvaluator | None = None
    partition = None
    for idx, plan in enumerate(plans):
        groups_here = level_group_count(plan.lattice, n_groups) if algorithm != "ga" else 1
        partition = partition_groups(plan.lattice, groups_here)
        evaluator = ObjectiveEvaluator(
            plan.template, plan.target, plan.lattice, partition, stride
        )
        if pop is None:
            bounds = make_bounds(plan.lattice.n_genes, *plan.bounds)
            pop = random_population(pop_size, bounds, init_rng)
        else:
            pop = inherit_population(pop, plans[idx - 1].lattice, plan.lattice, plan.bounds)

        if algorithm == "ga":
            eval_fn = lambda ind, ev=evaluator: float(ev.evaluate_genes(ind.genes)[0])
            _, pop = run_simple_ga(
                eval_fn, pop, plan.eval_budget, ops_rng,
                sbx_prob=sbx_prob, sbx_eta=sbx_eta, mut_prob=mut_prob, mut_eta=mut_eta,
            )
        elif algorithm == "nsga2":
            eval_fn = lambda ind, ev=evaluator: ev.evaluate_genes(ind.genes)
            pop = run_nsga2(
                eval_fn, pop, plan.eval_budget, ops_rng,
                sbx_prob=sbx_prob, sbx_eta=sbx_eta, mut_prob=mut_prob, mut_eta=mut_eta,
            )
        else:
            eval_fn = lambda ind, ev=evaluator: ev.evaluate_genes(ind.genes)
            pop = run_nsga3(
                eval_fn, pop, plan.eval_budget, ops_rng, refs_for(groups_here),
                sbx_prob=sbx_prob, sbx_eta=sbx_eta, mut_prob=mut_prob, mut_eta=mut_eta,
            )
        if collect_history:
            history.append(_snapshot(plan.level, plan.lattice, pop))

    final_plan = plans[-1]
    objs = np.array([m.objectives for m in pop.members])
    pareto = fast_nondominated_sort(objs)[0]
    best = select_best(pop)
    if n_groups == 1:
        post = best
        winners = [int(np.argmin(objs.sum(axis=1)))]
    else:
        winners = group_winners(pop, n_groups)
        post = aggregate_pareto(pop, partition, final_plan.lattice)
        post.objectives = evaluator.evaluate_genes(post.genes)
    return RegistrationResult(
        final_population=pop,
        pareto_front=pareto,
        best=best,
        post_processed=post,
        per_level_history=history,
        group_winners=winners,
        lattice=final_plan.lattice,
    )
