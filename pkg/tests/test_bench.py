"""Tests for synthetic case generation and the RMSE/MEDE metrics."""

import math

import numpy as np
import pytest

from ffdreg.bench import (
    center_crop,
    generate_wavy_mesh,
    mede,
    procedural_texture,
    rmse,
    synthesize_case,
)
from ffdreg.ffd import (
    ControlMesh,
    LatticeConfig,
    displacement_at,
    frame_offset,
    inverse_map,
)
from ffdreg.image import GrayImage, sample_bilinear


def brute_force_rmse(mesh, template, target):
    """Scalar-loop reference for the stride-1 RMSE."""
    ox, oy = frame_offset(mesh.config, target.width, target.height)
    total = 0.0
    count = 0
    for y in range(target.height):
        for x in range(target.width):
            pre = inverse_map(mesh, (float(x), float(y)), offset=(ox, oy))
            if pre is None:
                continue
            val = sample_bilinear(template, pre[0], pre[1])
            if val is None:
                continue
            total += (target.data[y, x] - val) ** 2
            count += 1
    return math.sqrt(total / count)


class TestWavyMesh:
    def _cfg(self):
        return LatticeConfig.for_image(7, 7, 160, 160)

    def test_zero_amplitude(self):
        mesh = generate_wavy_mesh(self._cfg(), "vertical", 0.0)
        assert np.array_equal(mesh.displacements, np.zeros((7, 7, 2)))

    def test_vertical_has_no_horizontal_component(self):
        mesh = generate_wavy_mesh(self._cfg(), "vertical", 5.0)
        assert np.all(mesh.displacements[:, :, 0] == 0.0)
        assert np.any(mesh.displacements[:, :, 1] != 0.0)

    def test_sine_node_at_half_cycle(self):
        # Column index 3 of a 7-wide lattice sits at sin(pi) = 0.
        mesh = generate_wavy_mesh(self._cfg(), "vertical", 5.0, cycles=1.0, phase=0.0)
        assert mesh.displacements[0, 3, 1] == pytest.approx(0.0, abs=1e-12)
        assert mesh.displacements[0, 1, 1] != 0.0

    def test_both_directions(self):
        mesh = generate_wavy_mesh(self._cfg(), "both", 5.0)
        assert np.any(mesh.displacements[:, :, 0] != 0.0)
        assert np.any(mesh.displacements[:, :, 1] != 0.0)

    def test_amplitude_bound(self):
        for kind in ("vertical", "both"):
            mesh = generate_wavy_mesh(self._cfg(), kind, 7.5, cycles=2.3, phase=0.9)
            assert np.abs(mesh.displacements).max() <= 7.5 + 1e-12

    def test_invalid_kind(self):
        with pytest.raises(ValueError):
            generate_wavy_mesh(self._cfg(), "diagonal", 5.0)


class TestSynthesizeCase:
    def test_zero_mesh_keeps_base(self):
        base = procedural_texture(400, 0)
        cfg = LatticeConfig.for_image(7, 7, 160, 160)
        case = synthesize_case(base, 160, ControlMesh.zeros(cfg))
        assert np.allclose(case.target.data, base.data, atol=1e-9)

    def test_template_is_center_crop(self):
        base = procedural_texture(400, 1)
        cfg = LatticeConfig.for_image(7, 7, 160, 160)
        case = synthesize_case(base, 160, generate_wavy_mesh(cfg, "vertical", 5.0))
        assert np.array_equal(case.template.data, base.data[120:280, 120:280])

    def test_range_limit_recorded(self):
        base = procedural_texture(400, 2)
        cfg = LatticeConfig.for_image(7, 7, 160, 160)
        mesh = generate_wavy_mesh(cfg, "vertical", 5.0)
        case = synthesize_case(base, 160, mesh, kind="vertical")
        assert case.range_limit == pytest.approx(np.abs(mesh.displacements).max())

    def test_crop_larger_than_base(self):
        base = procedural_texture(100, 3)
        cfg = LatticeConfig.for_image(7, 7, 160, 160)
        with pytest.raises(ValueError):
            synthesize_case(base, 160, ControlMesh.zeros(cfg))

    def test_mesh_must_match_template_size(self):
        base = procedural_texture(400, 4)
        cfg = LatticeConfig.for_image(7, 7, 100, 100)
        with pytest.raises(ValueError):
            synthesize_case(base, 160, ControlMesh.zeros(cfg))


class TestRmse:
    def test_ground_truth_scores_zero(self):
        base = procedural_texture(200, 5)
        cfg = LatticeConfig.for_image(7, 7, 80, 80)
        mesh = generate_wavy_mesh(cfg, "both", 4.0)
        case = synthesize_case(base, 80, mesh)
        assert rmse(mesh, case.template, case.target) == pytest.approx(0.0, abs=1e-9)

    def test_uniform_intensity_offset(self):
        rng = np.random.default_rng(70)
        tpl = GrayImage(rng.uniform(0, 200, (60, 60)))
        target = GrayImage(tpl.data + 10.0)
        mesh = ControlMesh.zeros(LatticeConfig.for_image(7, 7, 60, 60))
        assert rmse(mesh, tpl, target) == pytest.approx(10.0, abs=1e-9)

    def test_matches_brute_force(self):
        rng = np.random.default_rng(71)
        tpl = GrayImage(rng.uniform(0, 255, (40, 40)))
        tgt = GrayImage(rng.uniform(0, 255, (56, 56)))
        cfg = LatticeConfig.for_image(7, 7, 40, 40)
        for _ in range(3):
            mesh = ControlMesh(cfg, rng.uniform(-3, 3, (7, 7, 2)))
            assert rmse(mesh, tpl, tgt) == pytest.approx(
                brute_force_rmse(mesh, tpl, tgt), abs=1e-9
            )

    def test_no_overlap_errors(self):
        rng = np.random.default_rng(72)
        tpl = GrayImage(rng.uniform(0, 200, (20, 20)))
        tgt = GrayImage(rng.uniform(0, 200, (64, 64)))
        cfg = LatticeConfig.for_image(4, 4, 20, 20)
        # Push every pre-image far outside the template.
        mesh = ControlMesh.uniform(cfg, 500.0, 500.0)
        with pytest.raises(ValueError, match="no overlap"):
            rmse(mesh, tpl, tgt)


class TestMede:
    def _cfg(self):
        return LatticeConfig.for_image(7, 7, 160, 160)

    def test_identical_meshes(self):
        mesh = generate_wavy_mesh(self._cfg(), "vertical", 5.0)
        assert mede(mesh, mesh) == 0.0

    def test_uniform_offset_is_exact(self):
        cfg = self._cfg()
        rng = np.random.default_rng(73)
        gt = ControlMesh(cfg, rng.uniform(-3, 3, (7, 7, 2)))
        est = ControlMesh(cfg, gt.displacements + np.array([1.0, 0.0]))
        assert mede(est, gt) == pytest.approx(1.0, abs=1e-12)

    def test_difference_scaling_doubles(self):
        cfg = self._cfg()
        rng = np.random.default_rng(74)
        gt = ControlMesh(cfg, rng.uniform(-2, 2, (7, 7, 2)))
        delta = rng.uniform(-1, 1, (7, 7, 2))
        e1 = mede(ControlMesh(cfg, gt.displacements + delta), gt)
        e2 = mede(ControlMesh(cfg, gt.displacements + 2 * delta), gt)
        assert e2 == pytest.approx(2 * e1, rel=1e-12)

    def test_symmetric(self):
        cfg = self._cfg()
        rng = np.random.default_rng(75)
        a = ControlMesh(cfg, rng.uniform(-3, 3, (7, 7, 2)))
        b = ControlMesh(cfg, rng.uniform(-3, 3, (7, 7, 2)))
        assert mede(a, b) == mede(b, a)

    def test_config_mismatch_errors(self):
        a = ControlMesh.zeros(self._cfg())
        b = ControlMesh.zeros(LatticeConfig.for_image(11, 11, 160, 160))
        with pytest.raises(ValueError):
            mede(a, b)

    def test_matches_pointwise_field_average(self):
        cfg = LatticeConfig.for_image(5, 5, 30, 30)
        rng = np.random.default_rng(76)
        a = ControlMesh(cfg, rng.uniform(-2, 2, (5, 5, 2)))
        b = ControlMesh(cfg, rng.uniform(-2, 2, (5, 5, 2)))
        total = 0.0
        for y in range(30):
            for x in range(30):
                da = displacement_at(a, (float(x), float(y)))
                db = displacement_at(b, (float(x), float(y)))
                total += math.hypot(da[0] - db[0], da[1] - db[1])
        assert mede(a, b) == pytest.approx(total / 900, rel=1e-12)


class TestProceduralTexture:
    def test_deterministic(self):
        assert np.array_equal(procedural_texture(64, 9).data, procedural_texture(64, 9).data)

    def test_intensity_range(self):
        img = procedural_texture(128, 10)
        assert img.data.min() >= 0.0 and img.data.max() <= 255.0
        assert img.data.std() > 20.0  # usable contrast

    def test_center_crop_alignment(self):
        img = procedural_texture(100, 11)
        crop = center_crop(img, 40)
        assert np.array_equal(crop.data, img.data[30:70, 30:70])
