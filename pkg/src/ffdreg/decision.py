"""Final-output selection: sum-minimizing best solution and Pareto aggregation."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .evolution import Individual, Population, genes_to_mesh, mesh_to_genes
from .ffd import ControlMesh, LatticeConfig
from .objectives import GroupPartition


@dataclass
class RegistrationResult:
    final_population: Population
    pareto_front: list[int]
    best: Individual
    post_processed: Individual
    per_level_history: list[dict] = field(default_factory=list)
    metrics: dict[str, Any] = field(default_factory=dict)
    group_winners: list[int] = field(default_factory=list)
    lattice: LatticeConfig | None = None


def _require_evaluated(pop: Population) -> np.ndarray:
    for k, m in enumerate(pop.members):
        if m.objectives is None:
            raise ValueError(f"population member {k} has no objective values")
    return np.array([m.objectives for m in pop.members])


def select_best(pop: Population) -> Individual:
    """Member with the smallest objective sum; ties go to the lower index."""
    objs = _require_evaluated(pop)
    sums = objs.sum(axis=1)
    return pop.members[int(np.argmin(sums))]


def group_winners(pop: Population, n_groups: int) -> list[int]:
    """Per-group index of the member minimizing that group's objective."""
    objs = _require_evaluated(pop)
    if objs.shape[1] != n_groups:
        raise ValueError("objective vectors do not match the group count")
    return [int(np.argmin(objs[:, g])) for g in range(n_groups)]


def group_support(part: GroupPartition, group: int) -> np.ndarray:
    """Boolean (n_y, n_x) grid of control points touching the group's patches."""
    cfg = part.cfg
    sup = np.zeros((cfg.n_y, cfg.n_x), dtype=bool)
    for py in range(cfg.patches_y):
        for px in range(cfg.patches_x):
            if part.patch_to_group[py, px] == group:
                sup[py : py + 4, px : px + 4] = True
    return sup


def aggregate_pareto(
    pop: Population, part: GroupPartition, cfg: LatticeConfig
) -> Individual:
    """Compose a mesh from each group's own optimum; shared points averaged.

    With a single group this returns that group's optimum verbatim.
    """
    winners = group_winners(pop, part.n_groups)
    accum = np.zeros((cfg.n_y, cfg.n_x, 2))
    counts = np.zeros((cfg.n_y, cfg.n_x))
    for g, widx in enumerate(winners):
        mesh = genes_to_mesh(pop.members[widx].genes, cfg)
        sup = group_support(part, g)
        accum[sup] += mesh.displacements[sup]
        counts[sup] += 1.0
    if np.any(counts == 0):
        raise ValueError("group supports do not cover the lattice")
    merged = accum / counts[:, :, None]
    proto = pop.members[winners[0]]
    genes = mesh_to_genes(ControlMesh(cfg, merged))
    return Individual(np.clip(genes, proto.lower, proto.upper), proto.lower, proto.upper)
