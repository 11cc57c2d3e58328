"""Synthetic wavy-deformation benchmark cases and the RMSE/MEDE metrics.

A case pairs a center-cropped template with a target produced by warping the
base image under a known control mesh, so estimation error can be measured
both photometrically (RMSE over the valid sampling region) and geometrically
(mean displacement-field error against the ground truth).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .ffd import (
    ControlMesh,
    LatticeConfig,
    blend_weights_and_indices,
    displacement_field,
    frame_offset,
    support_mask,
    warp_backward,
)
from .image import GrayImage, sample_bilinear_many

WAVE_KINDS = ("vertical", "both")


@dataclass(frozen=True)
class SyntheticCase:
    base_image: GrayImage
    template: GrayImage
    target: GrayImage
    gt_mesh: ControlMesh
    deformation_kind: str = "vertical"
    range_limit: float = 0.0


def generate_wavy_mesh(
    cfg: LatticeConfig,
    kind: str,
    amplitude: float,
    cycles: float = 1.0,
    phase: float = 0.0,
) -> ControlMesh:
    """Sine-wave control displacements: vertical only, or vertical plus horizontal."""
    if kind not in WAVE_KINDS:
        raise ValueError(f"kind must be one of {WAVE_KINDS}")
    if cycles <= 0:
        raise ValueError("cycles must be positive")
    i = np.arange(cfg.n_x, dtype=np.float64)
    j = np.arange(cfg.n_y, dtype=np.float64)
    disp = np.zeros((cfg.n_y, cfg.n_x, 2))
    disp[:, :, 1] = amplitude * np.sin(
        2.0 * math.pi * cycles * i[None, :] / (cfg.n_x - 1) + phase
    )
    if kind == "both":
        disp[:, :, 0] = amplitude * np.sin(
            2.0 * math.pi * cycles * j[:, None] / (cfg.n_y - 1) + phase
        )
    return ControlMesh(cfg, disp)


def center_crop(img: GrayImage, size: int) -> GrayImage:
    if size > img.width or size > img.height:
        raise ValueError("crop larger than the image")
    x0 = (img.width - size) // 2
    y0 = (img.height - size) // 2
    return GrayImage(img.data[y0 : y0 + size, x0 : x0 + size])


def synthesize_case(
    base: GrayImage,
    template_size: int,
    mesh: ControlMesh,
    kind: str = "vertical",
    range_limit: float | None = None,
) -> SyntheticCase:
    """Crop the template from the base center and warp it back over the base.

    The ground-truth mesh lives on the template lattice so estimated meshes
    can be compared to it directly; target pixels the warp cannot reach keep
    the undeformed base underneath.
    """
    if template_size > base.width or template_size > base.height:
        raise ValueError("crop larger than the base image")
    cfg = mesh.config
    if (cfg.image_w, cfg.image_h) != (template_size, template_size):
        raise ValueError("mesh config does not match the template size")
    template = center_crop(base, template_size)
    warped, mask = warp_backward(template, mesh, base.width, base.height)
    target = np.where(mask, warped.data, base.data)
    if range_limit is None:
        range_limit = float(np.abs(mesh.displacements).max())
    return SyntheticCase(
        base_image=base,
        template=template,
        target=GrayImage(target),
        gt_mesh=mesh,
        deformation_kind=kind,
        range_limit=range_limit,
    )


def registration_residuals(
    mesh: ControlMesh, template: GrayImage, target: GrayImage
) -> np.ndarray:
    """Intensity residuals I'(x') - I(T^-1(x')) over the full sampling region."""
    cfg = mesh.config
    if (cfg.image_w, cfg.image_h) != (template.width, template.height):
        raise ValueError("mesh config does not match template dimensions")
    ox, oy = frame_offset(cfg, target.width, target.height)
    gx, gy = np.meshgrid(np.arange(target.width), np.arange(target.height))
    tx = gx.ravel().astype(np.float64) - ox
    ty = gy.ravel().astype(np.float64) - oy
    sup = support_mask(cfg, tx, ty)
    tx, ty = tx[sup], ty[sup]
    dx, dy = displacement_field(mesh, tx, ty)
    px = tx - dx
    py = ty - dy
    inside = (
        (px >= 0.0)
        & (px <= template.width - 1)
        & (py >= 0.0)
        & (py <= template.height - 1)
    )
    values = sample_bilinear_many(template.data, px[inside], py[inside])
    target_vals = target.data.ravel()[sup.nonzero()[0][inside]]
    return target_vals - values


def rmse(result_mesh: ControlMesh, template: GrayImage, target: GrayImage) -> float:
    """Root mean squared intensity difference over the valid sampling region."""
    res = registration_residuals(result_mesh, template, target)
    if res.size == 0:
        raise ValueError("no overlap")
    return float(np.sqrt(np.mean(res**2)))


def mede(result_mesh: ControlMesh, gt_mesh: ControlMesh) -> float:
    """Mean Euclidean distance between the two displacement fields, in pixels."""
    if result_mesh.config != gt_mesh.config:
        raise ValueError("mesh configs do not match")
    cfg = result_mesh.config
    gx, gy = np.meshgrid(
        np.arange(cfg.image_w, dtype=np.float64),
        np.arange(cfg.image_h, dtype=np.float64),
    )
    xs = gx.ravel()
    ys = gy.ravel()
    w16, idx = blend_weights_and_indices(cfg, xs, ys)
    diff = result_mesh.displacements - gt_mesh.displacements
    flat = diff.reshape(-1, 2)
    ex = (flat[:, 0][idx] * w16).sum(axis=1)
    ey = (flat[:, 1][idx] * w16).sum(axis=1)
    return float(np.mean(np.hypot(ex, ey)))


def procedural_texture(size: int, seed: int) -> GrayImage:
    """Deterministic multi-scale texture with usable gradients everywhere."""
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:size, 0:size].astype(np.float64) / size
    img = np.zeros((size, size))
    for cycles in (2.0, 3.0, 5.0, 8.0, 13.0):
        theta = rng.uniform(0.0, math.pi)
        phase = rng.uniform(0.0, 2.0 * math.pi)
        amp = rng.uniform(0.5, 1.0) / math.sqrt(cycles)
        img += amp * np.sin(
            2.0 * math.pi * cycles * (x * math.cos(theta) + y * math.sin(theta)) + phase
        )
    # Smoothed noise adds non-periodic detail.
    noise = rng.standard_normal((size, size))
    kernel = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0
    for _ in range(4):
        pad = np.pad(noise, ((2, 2), (0, 0)), mode="reflect")
        noise = sum(w * pad[k : k + size] for k, w in enumerate(kernel))
        pad = np.pad(noise, ((0, 0), (2, 2)), mode="reflect")
        noise = sum(w * pad[:, k : k + size] for k, w in enumerate(kernel))
    img += 1.5 * noise / max(np.abs(noise).max(), 1e-12)
    lo, hi = img.min(), img.max()
    scaled = 10.0 + 235.0 * (img - lo) / max(hi - lo, 1e-12)
    return GrayImage(scaled)
