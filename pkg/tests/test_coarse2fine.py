"""Tests for level planning, mesh subdivision, and population inheritance."""

import numpy as np
import pytest

from ffdreg.bench import generate_wavy_mesh, procedural_texture, rmse, synthesize_case
from ffdreg.coarse2fine import (
    back_solve_lattice,
    inherit_population,
    plan_levels,
    run_coarse_to_fine,
    subdivide_mesh,
)
from ffdreg.evolution import Population, genes_to_mesh, make_bounds, mesh_to_genes
from ffdreg.ffd import ControlMesh, LatticeConfig, displacement_field
from ffdreg.image import build_pyramid


class TestPlanLevels:
    def test_final_11_gives_5_7_11(self):
        assert back_solve_lattice(11, 3) == [5, 7, 11]

    def test_final_7_gives_4_5_7(self):
        assert back_solve_lattice(7, 3) == [4, 5, 7]

    def test_single_level_passthrough(self):
        assert back_solve_lattice(9, 1) == [9]

    def test_unsubdividable_counts(self):
        with pytest.raises(ValueError, match="not subdividable"):
            back_solve_lattice(8, 2)  # (8+3)/2 is not an integer
        with pytest.raises(ValueError, match="not subdividable"):
            back_solve_lattice(5, 3)  # second step drops below 4

    def test_plans_carry_halved_bounds_and_budgets(self):
        tpl = procedural_texture(64, 1)
        tgt = procedural_texture(96, 2)
        plans = plan_levels(
            (7, 7), 3, build_pyramid(tpl, 3), build_pyramid(tgt, 3), (-4.0, 4.0), 900
        )
        assert [p.lattice.n_x for p in plans] == [4, 5, 7]
        assert [p.bounds for p in plans] == [(-1.0, 1.0), (-2.0, 2.0), (-4.0, 4.0)]
        assert all(p.eval_budget == 900 for p in plans)
        assert [p.template.width for p in plans] == [16, 32, 64]
        # Spacing is constant across levels.
        assert len({(p.lattice.s_x, p.lattice.s_y) for p in plans}) == 1

    def test_per_level_budgets(self):
        tpl = procedural_texture(64, 1)
        plans = plan_levels(
            (7, 7), 3, build_pyramid(tpl, 3), build_pyramid(tpl, 3), (-4, 4), [100, 200, 300]
        )
        assert [p.eval_budget for p in plans] == [100, 200, 300]

    def test_pyramid_level_mismatch(self):
        tpl = procedural_texture(64, 1)
        with pytest.raises(ValueError):
            plan_levels((7, 7), 3, build_pyramid(tpl, 2), build_pyramid(tpl, 3), (-4, 4))


class TestSubdivideMesh:
    def test_output_dimensions(self):
        cfg = LatticeConfig.for_image(7, 7, 160, 160)
        out = subdivide_mesh(ControlMesh.zeros(cfg))
        assert (out.config.n_x, out.config.n_y) == (11, 11)

    def test_uniform_mesh_doubles(self):
        cfg = LatticeConfig.for_image(7, 7, 160, 160)
        out = subdivide_mesh(ControlMesh.uniform(cfg, 1.5, -2.0))
        assert np.allclose(out.displacements[:, :, 0], 3.0, atol=1e-12)
        assert np.allclose(out.displacements[:, :, 1], -4.0, atol=1e-12)

    def test_face_point_is_corner_centroid(self):
        # Corner displacements (0,0),(4,0),(0,4),(4,4) average to (2,2); the
        # new grid corner is that face point, doubled afterward.
        cfg = LatticeConfig.for_image(4, 4, 40, 40)
        d = np.zeros((4, 4, 2))
        d[0, 0] = (0.0, 0.0)
        d[0, 1] = (4.0, 0.0)
        d[1, 0] = (0.0, 4.0)
        d[1, 1] = (4.0, 4.0)
        out = subdivide_mesh(ControlMesh(cfg, d))
        assert tuple(out.displacements[0, 0]) == (4.0, 4.0)

    def test_edge_point_formula(self):
        # Endpoints (0,0) and (4,0) with incident face points (2,2) and (2,-2)
        # give the edge point (2,0) before doubling.
        cfg = LatticeConfig.for_image(5, 5, 40, 40)
        d = np.zeros((5, 5, 2))
        d[1, 1] = (0.0, 0.0)
        d[1, 2] = (4.0, 0.0)
        d[0, 1] = (0.0, 8.0)
        d[0, 2] = (4.0, 0.0)
        d[2, 1] = (0.0, -8.0)
        d[2, 2] = (4.0, 0.0)
        out = subdivide_mesh(ControlMesh(cfg, d))
        assert tuple(out.displacements[1, 2]) == (4.0, 0.0)

    def test_linearity(self):
        cfg = LatticeConfig.for_image(6, 5, 120, 80)
        rng = np.random.default_rng(50)
        a = rng.normal(size=(5, 6, 2))
        b = rng.normal(size=(5, 6, 2))
        sa = subdivide_mesh(ControlMesh(cfg, a)).displacements
        sb = subdivide_mesh(ControlMesh(cfg, b)).displacements
        sc = subdivide_mesh(ControlMesh(cfg, 0.3 * a + 1.7 * b)).displacements
        assert np.allclose(sc, 0.3 * sa + 1.7 * sb, atol=1e-12)

    def test_refinement_identity(self):
        # The doubled field refines the coarse one: D_next(2x) = 2 D(x).
        rng = np.random.default_rng(51)
        cfg = LatticeConfig.for_image(7, 7, 160, 160)
        for _ in range(10):
            mesh = ControlMesh(cfg, rng.uniform(-5, 5, (7, 7, 2)))
            fine = subdivide_mesh(mesh)
            xs = rng.uniform(40.0, 120.0, 200)
            ys = rng.uniform(40.0, 120.0, 200)
            coarse = np.stack(displacement_field(mesh, xs, ys))
            refined = np.stack(displacement_field(fine, 2 * xs, 2 * ys))
            assert np.abs(refined - 2 * coarse).max() < 1e-6

    def test_explicit_config_must_match(self):
        cfg = LatticeConfig.for_image(7, 7, 160, 160)
        wrong = LatticeConfig.for_image(9, 9, 320, 320)
        with pytest.raises(ValueError):
            subdivide_mesh(ControlMesh.zeros(cfg), wrong)


class TestInheritPopulation:
    def _configs(self):
        coarse = LatticeConfig.for_image(4, 4, 16, 16)
        fine = LatticeConfig.for_image(5, 5, 32, 32)
        return coarse, fine

    def test_zero_population_stays_zero(self):
        from ffdreg.evolution import Individual

        coarse, fine = self._configs()
        lower, upper = make_bounds(coarse.n_genes, -1.0, 1.0)
        pop = Population([Individual(np.zeros(coarse.n_genes), lower, upper) for _ in range(3)])
        out = inherit_population(pop, coarse, fine, (-2.0, 2.0))
        for m in out.members:
            assert np.array_equal(m.genes, np.zeros(fine.n_genes))
            assert m.objectives is None

    def test_uniform_individual_doubles(self):
        coarse, fine = self._configs()
        mesh = ControlMesh.uniform(coarse, 0.75, -0.5)
        from ffdreg.evolution import Individual

        ind = Individual(mesh_to_genes(mesh), *make_bounds(coarse.n_genes, -1, 1))
        ind.objectives = np.array([1.0])
        out = inherit_population(Population([ind, ind]), coarse, fine, (-2.0, 2.0))
        got = genes_to_mesh(out.members[0].genes, fine)
        assert np.allclose(got.displacements[:, :, 0], 1.5, atol=1e-12)
        assert np.allclose(got.displacements[:, :, 1], -1.0, atol=1e-12)
        assert out.members[0].objectives is None

    def test_clamped_to_next_bounds(self):
        coarse, fine = self._configs()
        mesh = ControlMesh.uniform(coarse, 1.0, 1.0)
        from ffdreg.evolution import Individual

        ind = Individual(mesh_to_genes(mesh), *make_bounds(coarse.n_genes, -1, 1))
        out = inherit_population(Population([ind, ind]), coarse, fine, (-1.5, 1.5))
        assert np.all(out.members[0].genes <= 1.5)


class TestRunCoarseToFine:
    def _small_problem(self, seed=0, amplitude=3.0):
        base = procedural_texture(96, 7)
        cfg = LatticeConfig.for_image(7, 7, 64, 64)
        gt = generate_wavy_mesh(cfg, "vertical", amplitude)
        case = synthesize_case(base, 64, gt)
        return case

    def test_single_level_matches_plain_run(self):
        case = self._small_problem()
        tpl_pyr = build_pyramid(case.template, 1)
        tgt_pyr = build_pyramid(case.target, 1)
        plans = plan_levels((7, 7), 1, tpl_pyr, tgt_pyr, (-3.0, 3.0), 400)
        res = run_coarse_to_fine("nsga2", plans, 2, seed=5, pop_size=20, stride=5)
        assert len(res.final_population.members) == 20
        assert res.best.objectives is not None
        assert res.lattice.n_x == 7

    def test_deterministic_given_seed(self):
        case = self._small_problem()
        tpl_pyr = build_pyramid(case.template, 2)
        tgt_pyr = build_pyramid(case.target, 2)
        plans = plan_levels((7, 7), 2, tpl_pyr, tgt_pyr, (-3.0, 3.0), 300)
        r1 = run_coarse_to_fine("nsga2", plans, 2, seed=9, pop_size=20, stride=5)
        r2 = run_coarse_to_fine("nsga2", plans, 2, seed=9, pop_size=20, stride=5)
        assert np.array_equal(r1.best.genes, r2.best.genes)
        assert np.array_equal(r1.post_processed.genes, r2.post_processed.genes)
        for a, b in zip(r1.final_population.members, r2.final_population.members):
            assert np.array_equal(a.genes, b.genes)

    def test_initial_population_shared_across_algorithms(self):
        case = self._small_problem()
        tpl_pyr = build_pyramid(case.template, 1)
        tgt_pyr = build_pyramid(case.target, 1)
        plans = plan_levels((7, 7), 1, tpl_pyr, tgt_pyr, (-3.0, 3.0), 40)
        # Budget == |P|: the run stops right after the initial evaluation.
        ga = run_coarse_to_fine("ga", plans, 1, seed=3, pop_size=40, stride=5)
        n2 = run_coarse_to_fine("nsga2", plans, 2, seed=3, pop_size=40, stride=5)
        ga_genes = np.sort(np.array([m.genes for m in ga.final_population.members]), axis=0)
        n2_genes = np.sort(np.array([m.genes for m in n2.final_population.members]), axis=0)
        assert np.array_equal(ga_genes, n2_genes)

    def test_coarse_to_fine_beats_single_level_majority(self):
        # The pyramid's reason to exist: with a large deformation and a tight
        # budget, starting coarse should win on most seeds.
        base = procedural_texture(120, 7)
        cfg = LatticeConfig.for_image(7, 7, 80, 80)
        case = synthesize_case(base, 80, generate_wavy_mesh(cfg, "vertical", 5.0))
        tpl3 = build_pyramid(case.template, 3)
        tgt3 = build_pyramid(case.target, 3)
        tpl1 = build_pyramid(case.template, 1)
        tgt1 = build_pyramid(case.target, 1)
        wins = 0
        for seed in range(5):
            multi = run_coarse_to_fine(
                "nsga2",
                plan_levels((7, 7), 3, tpl3, tgt3, (-5.0, 5.0), 1500),
                2, seed=seed, pop_size=30, stride=2,
            )
            single = run_coarse_to_fine(
                "nsga2",
                plan_levels((7, 7), 1, tpl1, tgt1, (-5.0, 5.0), 4500),
                2, seed=seed, pop_size=30, stride=2,
            )
            rm = rmse(genes_to_mesh(multi.best.genes, multi.lattice), case.template, case.target)
            rs = rmse(genes_to_mesh(single.best.genes, single.lattice), case.template, case.target)
            wins += rm <= rs
        assert wins >= 3

    def test_history_collection(self):
        case = self._small_problem()
        tpl_pyr = build_pyramid(case.template, 2)
        tgt_pyr = build_pyramid(case.target, 2)
        plans = plan_levels((7, 7), 2, tpl_pyr, tgt_pyr, (-3.0, 3.0), 100)
        res = run_coarse_to_fine(
            "nsga2", plans, 2, seed=1, pop_size=20, stride=5, collect_history=True
        )
        assert [h["level"] for h in res.per_level_history] == [1, 2]
        assert len(res.per_level_history[0]["population"]) == 20

    def test_algorithm_group_validation(self):
        case = self._small_problem()
        plans = plan_levels(
            (7, 7), 1, build_pyramid(case.template, 1), build_pyramid(case.target, 1), (-3, 3), 40
        )
        with pytest.raises(ValueError):
            run_coarse_to_fine("ga", plans, 2, seed=0)
        with pytest.raises(ValueError):
            run_coarse_to_fine("nsga2", plans, 1, seed=0)
        with pytest.raises(ValueError):
            run_coarse_to_fine("annealing", plans, 2, seed=0)
