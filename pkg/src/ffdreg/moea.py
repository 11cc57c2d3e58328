"""NSGA-II and NSGA-III selection machinery plus their generation loops.

All objectives are minimized. Functions take objective vectors as an
(n, m) array or a sequence of length-m vectors and return member indices.
"""

from __future__ import annotations

import numpy as np

from .evolution import Individual, Population, polynomial_mutation, sbx_crossover


def dominates(a, b) -> bool:
    """a dominates b: no worse in every objective, strictly better in one."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("objective vectors differ in length")
    return bool(np.all(a <= b) and np.any(a < b))


def _dominance_counts(objs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # dom[p, q] == True when p dominates q.
    le = np.all(objs[:, None, :] <= objs[None, :, :], axis=2)
    lt = np.any(objs[:, None, :] < objs[None, :, :], axis=2)
    dom = le & lt
    return dom, dom.sum(axis=0)


def fast_nondominated_sort(objs) -> list[list[int]]:
    """Peel non-dominated fronts; O(m n^2) pairwise comparisons."""
    objs = np.asarray(objs, dtype=np.float64)
    if objs.ndim != 2 or objs.shape[0] == 0:
        raise ValueError("expected a non-empty (n, m) objective array")
    dom, n_dominators = _dominance_counts(objs)
    alive = np.ones(objs.shape[0], dtype=bool)
    fronts: list[list[int]] = []
    remaining = objs.shape[0]
    counts = n_dominators.astype(np.int64).copy()
    while remaining:
        current = np.flatnonzero(alive & (counts == 0))
        fronts.append(current.tolist())
        alive[current] = False
        counts -= dom[current].sum(axis=0)
        remaining -= current.size
    return fronts


def front_ranks(objs) -> np.ndarray:
    ranks = np.empty(len(objs), dtype=np.int64)
    for r, front in enumerate(fast_nondominated_sort(objs)):
        ranks[front] = r
    return ranks


def crowding_distance(front_objs) -> np.ndarray:
    """NSGA-II crowding distance; boundary members get +inf."""
    objs = np.asarray(front_objs, dtype=np.float64)
    n = objs.shape[0]
    if n == 0:
        return np.empty(0)
    if n <= 2:
        return np.full(n, np.inf)
    dist = np.zeros(n)
    for m in range(objs.shape[1]):
        col = objs[:, m]
        span = col.max() - col.min()
        if span == 0.0:
            continue
        order = np.argsort(col, kind="stable")
        dist[order[0]] = np.inf
        dist[order[-1]] = np.inf
        gaps = (col[order[2:]] - col[order[:-2]]) / span
        dist[order[1:-1]] += gaps
    return dist


def nsga2_survivor_select(objs, k: int) -> list[int]:
    """Whole fronts in rank order, the split front by descending crowding."""
    objs = np.asarray(objs, dtype=np.float64)
    if k > objs.shape[0]:
        raise ValueError("k exceeds the pool size")
    selected: list[int] = []
    for front in fast_nondominated_sort(objs):
        if len(selected) + len(front) <= k:
            selected.extend(front)
            if len(selected) == k:
                break
        else:
            dist = crowding_distance(objs[front])
            # Ties broken by lower input index: sort on (-distance, index).
            order = sorted(range(len(front)), key=lambda t: (-dist[t], front[t]))
            selected.extend(front[t] for t in order[: k - len(selected)])
            break
    return selected


def das_dennis_points(n_obj: int, divisions: int) -> np.ndarray:
    """All simplex lattice points with coordinates in {0, 1/div, ..., 1}."""
    if divisions < 1:
        raise ValueError("divisions must be >= 1")
    points: list[list[int]] = []

    def recurse(prefix: list[int], left: int, slots: int) -> None:
        if slots == 1:
            points.append(prefix + [left])
            return
        for v in range(left, -1, -1):
            recurse(prefix + [v], left - v, slots - 1)

    recurse([], divisions, n_obj)
    return np.asarray(points, dtype=np.float64) / divisions


def _normalize(objs: np.ndarray) -> np.ndarray:
    """NSGA-III normalization: ideal-point shift, then intercepts from the
    extreme points of an achievement scalarizing function."""
    ideal = objs.min(axis=0)
    shifted = objs - ideal
    m = objs.shape[1]
    weights = np.full((m, m), 1e-6) + np.eye(m)
    extremes = np.empty(m, dtype=np.int64)
    for i in range(m):
        extremes[i] = int(np.argmin(np.max(shifted / weights[i], axis=1)))
    intercepts = None
    if len(set(extremes.tolist())) == m:
        try:
            plane = np.linalg.solve(shifted[extremes], np.ones(m))
            if np.all(plane > 1e-12):
                cand = 1.0 / plane
                if np.all(np.isfinite(cand)) and np.all(cand > 1e-12):
                    intercepts = cand
        except np.linalg.LinAlgError:
            intercepts = None
    if intercepts is None:
        # Degenerate extremes: fall back to the per-objective maximum.
        intercepts = shifted.max(axis=0)
        intercepts[intercepts <= 1e-12] = 1.0
    return shifted / intercepts


def _associate(norm: np.ndarray, refs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nearest reference line per member and the perpendicular distance to it."""
    dirs = refs / np.linalg.norm(refs, axis=1, keepdims=True)
    proj = norm @ dirs.T  # (n, R) scalar projections
    sq = np.maximum(np.sum(norm * norm, axis=1)[:, None] - proj**2, 0.0)
    dist = np.sqrt(sq)
    line = np.argmin(dist, axis=1)
    return line, dist[np.arange(norm.shape[0]), line]


def nsga3_survivor_select(
    objs, k: int, refs: np.ndarray, rng: np.random.Generator
) -> list[int]:
    """Front-based admission with reference-line niching for the split front.

    Niche counts start from the already-admitted members. The least-crowded
    line is served next (lowest index on ties); an empty niche takes its
    closest candidate, an occupied one a random candidate.
    """
    objs = np.asarray(objs, dtype=np.float64)
    if k > objs.shape[0]:
        raise ValueError("k exceeds the pool size")
    fronts = fast_nondominated_sort(objs)
    selected: list[int] = []
    last_front: list[int] = []
    for front in fronts:
        if len(selected) + len(front) <= k:
            selected.extend(front)
        else:
            last_front = front
            break
    if len(selected) == k:
        return selected

    considered = selected + last_front
    norm = _normalize(objs[considered])
    line, dist = _associate(norm, refs)
    n_sel = len(selected)
    niche = np.bincount(line[:n_sel], minlength=refs.shape[0]).astype(np.int64)

    cand_line = line[n_sel:]
    cand_dist = dist[n_sel:]
    available = np.ones(len(last_front), dtype=bool)
    line_open = np.ones(refs.shape[0], dtype=bool)
    need = k - n_sel
    chosen: list[int] = []
    while len(chosen) < need:
        open_lines = np.flatnonzero(line_open)
        j = open_lines[np.argmin(niche[open_lines])]
        members = np.flatnonzero(available & (cand_line == j))
        if members.size == 0:
            line_open[j] = False
            continue
        if niche[j] == 0:
            pick = members[np.argmin(cand_dist[members])]
        else:
            pick = members[rng.integers(0, members.size)]
        available[pick] = False
        chosen.append(last_front[int(pick)])
        niche[j] += 1
    return selected + chosen


# ---------------------------------------------------------------------------
# Generation loops
# ---------------------------------------------------------------------------

def _evaluate_missing(members: list[Individual], eval_fn) -> int:
    count = 0
    for ind in members:
        if ind.objectives is None:
            ind.objectives = np.asarray(eval_fn(ind), dtype=np.float64)
            count += 1
    return count


def _make_offspring(
    members: list[Individual],
    n_off: int,
    parent_pick,
    rng: np.random.Generator,
    sbx_prob: float,
    sbx_eta: float,
    mut_prob: float,
    mut_eta: float,
) -> list[Individual]:
    offspring: list[Individual] = []
    while len(offspring) < n_off:
        pa = members[parent_pick(rng)]
        pb = members[parent_pick(rng)]
        c1, c2 = sbx_crossover(pa, pb, sbx_prob, sbx_eta, rng)
        offspring.append(polynomial_mutation(c1, mut_prob, mut_eta, rng))
        if len(offspring) < n_off:
            offspring.append(polynomial_mutation(c2, mut_prob, mut_eta, rng))
    return offspring


def front_dump_writer(fh):
    """Per-generation logger writing CSV rows (generation, member, objectives, rank)."""

    def write(generation: int, objs: np.ndarray, ranks: np.ndarray) -> None:
        for k in range(objs.shape[0]):
            vals = ";".join(repr(float(v)) for v in objs[k])
            fh.write(f"{generation},{k},{vals},{int(ranks[k])}\n")

    return write


def run_nsga2(
    eval_fn,
    pop: Population,
    eval_budget: int,
    rng: np.random.Generator,
    sbx_prob: float = 1.0,
    sbx_eta: float = 15.0,
    mut_prob: float | None = None,
    mut_eta: float = 20.0,
    on_generation=None,
) -> Population:
    """NSGA-II: tournament on (rank, crowding), survivor selection from P + Q."""
    size = len(pop.members)
    if eval_budget < size:
        raise ValueError("eval budget smaller than the population")
    if mut_prob is None:
        mut_prob = 1.0 / pop.members[0].genes.size

    members = pop.members
    generation = pop.generation
    evals = _evaluate_missing(members, eval_fn)
    while evals < eval_budget:
        objs = np.array([m.objectives for m in members])
        ranks = front_ranks(objs)
        if on_generation is not None:
            on_generation(generation, objs, ranks)
        crowd = np.empty(size)
        for front in fast_nondominated_sort(objs):
            crowd[front] = crowding_distance(objs[front])

        def pick(r: np.random.Generator) -> int:
            i, j = r.integers(0, size, size=2)
            if ranks[i] != ranks[j]:
                return int(i) if ranks[i] < ranks[j] else int(j)
            if crowd[i] != crowd[j]:
                return int(i) if crowd[i] > crowd[j] else int(j)
            return int(i)

        n_off = min(size, eval_budget - evals)
        offspring = _make_offspring(
            members, n_off, pick, rng, sbx_prob, sbx_eta, mut_prob, mut_eta
        )
        evals += _evaluate_missing(offspring, eval_fn)
        pool = members + offspring
        pool_objs = np.array([m.objectives for m in pool])
        keep = nsga2_survivor_select(pool_objs, size)
        members = [pool[t] for t in keep]
        generation += 1
    return Population(members, generation)


def run_nsga3(
    eval_fn,
    pop: Population,
    eval_budget: int,
    rng: np.random.Generator,
    refs: np.ndarray,
    sbx_prob: float = 1.0,
    sbx_eta: float = 15.0,
    mut_prob: float | None = None,
    mut_eta: float = 20.0,
    on_generation=None,
) -> Population:
    """NSGA-III: tournament on rank (random on ties), niched survivor selection."""
    size = len(pop.members)
    if eval_budget < size:
        raise ValueError("eval budget smaller than the population")
    if mut_prob is None:
        mut_prob = 1.0 / pop.members[0].genes.size

    members = pop.members
    generation = pop.generation
    evals = _evaluate_missing(members, eval_fn)
    while evals < eval_budget:
        objs = np.array([m.objectives for m in members])
        ranks = front_ranks(objs)
        if on_generation is not None:
            on_generation(generation, objs, ranks)

        def pick(r: np.random.Generator) -> int:
            i, j = r.integers(0, size, size=2)
            if ranks[i] != ranks[j]:
                return int(i) if ranks[i] < ranks[j] else int(j)
            return int(i) if r.random() < 0.5 else int(j)

        n_off = min(size, eval_budget - evals)
        offspring = _make_offspring(
            members, n_off, pick, rng, sbx_prob, sbx_eta, mut_prob, mut_eta
        )
        evals += _evaluate_missing(offspring, eval_fn)
        pool = members + offspring
        pool_objs = np.array([m.objectives for m in pool])
        keep = nsga3_survivor_select(pool_objs, size, refs, rng)
        members = [pool[t] for t in keep]
        generation += 1
    return Population(members, generation)
