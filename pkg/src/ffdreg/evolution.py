"""Real-coded genotypes, SBX/polynomial-mutation operators, and an elitist GA.

Gene layout: the displacement grid flattens with the horizontal lattice index
varying fastest and each point contributing (d_y, d_x) in that order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ffd import ControlMesh, LatticeConfig


@dataclass(eq=False)
class Individual:
    genes: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    objectives: np.ndarray | None = None

    def copy(self) -> "Individual":
        return Individual(
            self.genes.copy(),
            self.lower,
            self.upper,
            None if self.objectives is None else self.objectives.copy(),
        )


@dataclass(eq=False)
class Population:
    members: list[Individual]
    generation: int = 0

    def __len__(self) -> int:
        return len(self.members)


def make_bounds(n_genes: int, lo: float, hi: float) -> tuple[np.ndarray, np.ndarray]:
    return np.full(n_genes, float(lo)), np.full(n_genes, float(hi))


def mesh_to_genes(mesh: ControlMesh) -> np.ndarray:
    """Flatten a mesh: rows outer, columns inner, (d_y, d_x) per point."""
    return mesh.displacements[:, :, ::-1].reshape(-1).copy()


def genes_to_mesh(genes: np.ndarray, cfg: LatticeConfig) -> ControlMesh:
    if genes.size != cfg.n_genes:
        raise ValueError(f"expected {cfg.n_genes} genes, got {genes.size}")
    disp = genes.reshape(cfg.n_y, cfg.n_x, 2)[:, :, ::-1]
    return ControlMesh(cfg, disp)


def random_population(
    size: int,
    bounds: tuple[np.ndarray, np.ndarray],
    rng: np.random.Generator | int,
) -> Population:
    """Uniform random genotypes within bounds; deterministic for a given seed."""
    if size < 2:
        raise ValueError("population size must be >= 2")
    lower = np.asarray(bounds[0], dtype=np.float64)
    upper = np.asarray(bounds[1], dtype=np.float64)
    if lower.shape != upper.shape or np.any(lower > upper):
        raise ValueError("invalid bounds")
    gen = np.random.default_rng(rng) if isinstance(rng, int) else rng
    draws = gen.uniform(0.0, 1.0, size=(size, lower.size))
    genes = lower + draws * (upper - lower)
    members = [Individual(genes[k], lower, upper) for k in range(size)]
    return Population(members)


def sbx_crossover(
    a: Individual,
    b: Individual,
    prob: float,
    dist_index: float,
    rng: np.random.Generator,
) -> tuple[Individual, Individual]:
    """Simulated binary crossover; one spread factor per gene, children clamped.

    Consumes one gate draw, then one uniform per gene when the gate passes.
    """
    if a.genes.size != b.genes.size:
        raise ValueError("gene length mismatch")
    if rng.random() >= prob:
        return a.copy(), b.copy()
    u = rng.random(a.genes.size)
    beta = np.where(
        u <= 0.5,
        (2.0 * u) ** (1.0 / (dist_index + 1.0)),
        (1.0 / (2.0 * (1.0 - u))) ** (1.0 / (dist_index + 1.0)),
    )
    mean = 0.5 * (a.genes + b.genes)
    half_diff = 0.5 * beta * (a.genes - b.genes)
    c1 = np.clip(mean + half_diff, a.lower, a.upper)
    c2 = np.clip(mean - half_diff, a.lower, a.upper)
    return Individual(c1, a.lower, a.upper), Individual(c2, a.lower, a.upper)


def polynomial_mutation(
    ind: Individual,
    prob: float,
    dist_index: float,
    rng: np.random.Generator,
) -> Individual:
    """Bounded polynomial mutation; gate and perturbation draws per gene."""
    gates = rng.random(ind.genes.size)
    u = rng.random(ind.genes.size)
    lo, hi = ind.lower, ind.upper
    span = hi - lo
    genes = ind.genes.copy()
    apply = (gates < prob) & (span > 0.0)
    if apply.any():
        x = genes[apply]
        s = span[apply]
        uu = u[apply]
        d1 = (x - lo[apply]) / s
        d2 = (hi[apply] - x) / s
        exp = 1.0 / (dist_index + 1.0)
        low_side = uu < 0.5
        delta = np.empty_like(uu)
        delta[low_side] = (
            2.0 * uu[low_side]
            + (1.0 - 2.0 * uu[low_side]) * (1.0 - d1[low_side]) ** (dist_index + 1.0)
        ) ** exp - 1.0
        hs = ~low_side
        delta[hs] = 1.0 - (
            2.0 * (1.0 - uu[hs])
            + 2.0 * (uu[hs] - 0.5) * (1.0 - d2[hs]) ** (dist_index + 1.0)
        ) ** exp
        genes[apply] = np.clip(x + delta * s, lo[apply], hi[apply])
    return Individual(genes, lo, hi)


def binary_tournament_scalar(
    fitness: np.ndarray, rng: np.random.Generator
) -> int:
    """Index of the better (lower) of two randomly drawn members; first wins ties."""
    i, j = rng.integers(0, fitness.size, size=2)
    return int(j) if fitness[j] < fitness[i] else int(i)


def run_simple_ga(
    eval_fn,
    pop: Population,
    eval_budget: int,
    rng: np.random.Generator,
    sbx_prob: float = 1.0,
    sbx_eta: float = 15.0,
    mut_prob: float | None = None,
    mut_eta: float = 20.0,
) -> tuple[Individual, Population]:
    """Elitist generational GA minimizing a scalar objective.

    The budget counts eval_fn calls including the initial population; the
    final generation is truncated to the remaining budget.
    """
    size = len(pop.members)
    if eval_budget < size:
        raise ValueError("eval budget smaller than the population")
    if mut_prob is None:
        mut_prob = 1.0 / pop.members[0].genes.size

    evals = 0
    for ind in pop.members:
        if ind.objectives is None:
            ind.objectives = np.array([float(eval_fn(ind))])
            evals += 1
    best = min(pop.members, key=lambda m: m.objectives[0])

    members = pop.members
    generation = pop.generation
    while evals < eval_budget:
        n_off = min(size, eval_budget - evals)
        fitness = np.array([m.objectives[0] for m in members])
        offspring: list[Individual] = []
        while len(offspring) < n_off:
            pa = members[binary_tournament_scalar(fitness, rng)]
            pb = members[binary_tournament_scalar(fitness, rng)]
            c1, c2 = sbx_crossover(pa, pb, sbx_prob, sbx_eta, rng)
            offspring.append(polynomial_mutation(c1, mut_prob, mut_eta, rng))
            if len(offspring) < n_off:
                offspring.append(polynomial_mutation(c2, mut_prob, mut_eta, rng))
        for child in offspring:
            child.objectives = np.array([float(eval_fn(child))])
            evals += 1
            if child.objectives[0] < best.objectives[0]:
                best = child

        pool = members + offspring
        if n_off == size:
            # Generational replacement, then reinsert the pool's best if the
            # offspring lost it.
            elite_idx = int(np.argmin([m.objectives[0] for m in pool]))
            members = offspring
            if elite_idx < size:
                worst = int(np.argmax([m.objectives[0] for m in members]))
                members = list(members)
                members[worst] = pool[elite_idx]
        else:
            order = np.argsort([m.objectives[0] for m in pool], kind="stable")
            members = [pool[k] for k in order[:size]]
        generation += 1

    return best, Population(members, generation)
