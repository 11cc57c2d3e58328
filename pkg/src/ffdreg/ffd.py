"""Cubic B-spline free-form deformation over a regular control-point lattice.

A lattice of (n_x, n_y) control points carries 2-D displacement vectors.
The displacement of any pixel is the tensor-product blend of the 16
surrounding control points; the forward transform moves a template pixel by
its displacement and the (approximate) inverse subtracts the displacement
evaluated at the target location instead.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .image import GrayImage, sample_bilinear_many


@dataclass(frozen=True)
class LatticeConfig:
    """Lattice geometry: point counts, spacings, and the covered image size.

    Spacings satisfy s = ceil(extent / (count - 3)) so the outermost points
    fall outside the image on each side.
    """

    n_x: int
    n_y: int
    s_x: int
    s_y: int
    image_w: int
    image_h: int

    def __post_init__(self) -> None:
        if self.n_x < 4 or self.n_y < 4:
            raise ValueError("lattice needs at least 4x4 control points")
        if self.image_w < 1 or self.image_h < 1:
            raise ValueError("image dimensions must be positive")
        if self.s_x != math.ceil(self.image_w / (self.n_x - 3)):
            raise ValueError("s_x inconsistent with image width and lattice size")
        if self.s_y != math.ceil(self.image_h / (self.n_y - 3)):
            raise ValueError("s_y inconsistent with image height and lattice size")

    @classmethod
    def for_image(cls, n_x: int, n_y: int, image_w: int, image_h: int) -> "LatticeConfig":
        if n_x < 4 or n_y < 4:
            raise ValueError("lattice needs at least 4x4 control points")
        s_x = math.ceil(image_w / (n_x - 3))
        s_y = math.ceil(image_h / (n_y - 3))
        return cls(n_x, n_y, s_x, s_y, image_w, image_h)

    @property
    def patches_x(self) -> int:
        return self.n_x - 3

    @property
    def patches_y(self) -> int:
        return self.n_y - 3

    @property
    def n_genes(self) -> int:
        return 2 * self.n_x * self.n_y


@dataclass(frozen=True)
class ControlMesh:
    """Displacement vectors on a lattice; displacements[j, i] = (dx, dy)."""

    config: LatticeConfig
    displacements: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.displacements, dtype=np.float64)
        expect = (self.config.n_y, self.config.n_x, 2)
        if arr.shape != expect:
            raise ValueError(f"displacement grid {arr.shape} != {expect}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("displacements must be finite")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "displacements", arr)

    @classmethod
    def zeros(cls, config: LatticeConfig) -> "ControlMesh":
        return cls(config, np.zeros((config.n_y, config.n_x, 2)))

    @classmethod
    def uniform(cls, config: LatticeConfig, dx: float, dy: float) -> "ControlMesh":
        disp = np.empty((config.n_y, config.n_x, 2))
        disp[:, :, 0] = dx
        disp[:, :, 1] = dy
        return cls(config, disp)


def bspline_weights(t: float) -> tuple[float, float, float, float]:
    """The four uniform cubic B-spline basis values at local parameter t in [0, 1)."""
    if not 0.0 <= t < 1.0:
        raise ValueError("parameter out of range")
    t2 = t * t
    t3 = t2 * t
    one = 1.0 - t
    return (
        one * one * one / 6.0,
        (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
        (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
        t3 / 6.0,
    )


def _basis_rows(t: np.ndarray) -> np.ndarray:
    """(n, 4) matrix of basis values for an array of local parameters."""
    t = np.asarray(t, dtype=np.float64)
    t2 = t * t
    t3 = t2 * t
    one = 1.0 - t
    return np.stack(
        [
            one * one * one / 6.0,
            (3.0 * t3 - 6.0 * t2 + 4.0) / 6.0,
            (-3.0 * t3 + 3.0 * t2 + 3.0 * t + 1.0) / 6.0,
            t3 / 6.0,
        ],
        axis=-1,
    )


def lattice_coords(
    cfg: LatticeConfig, xs: np.ndarray, ys: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Cell indices (i, j) and local fractions (u, v) for in-image coordinates.

    Indices are clamped to the valid patch range to absorb the slack the
    ceiling-based spacing leaves at the far border.
    """
    ix = xs / cfg.s_x
    iy = ys / cfg.s_y
    i = np.minimum(np.floor(ix), cfg.n_x - 4).astype(np.int64)
    j = np.minimum(np.floor(iy), cfg.n_y - 4).astype(np.int64)
    i = np.maximum(i, 0)
    j = np.maximum(j, 0)
    return i, j, ix - i, iy - j


def support_mask(cfg: LatticeConfig, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """True where the displacement field is defined: [0, W) x [0, H)."""
    return (xs >= 0.0) & (xs < cfg.image_w) & (ys >= 0.0) & (ys < cfg.image_h)


def blend_weights_and_indices(
    cfg: LatticeConfig, xs: np.ndarray, ys: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample 16 tensor-product weights plus flat indices into the point grid.

    The weights depend only on the sample coordinates, so callers that
    evaluate many meshes at fixed locations should compute this once.
    """
    i, j, u, v = lattice_coords(cfg, xs, ys)
    bx = _basis_rows(u)  # weight of d_{i+m, .} is bx[:, m]
    by = _basis_rows(v)
    w16 = (by[:, :, None] * bx[:, None, :]).reshape(-1, 16)
    offs = np.arange(4, dtype=np.int64)
    rows = j[:, None] + offs[None, :]
    cols = i[:, None] + offs[None, :]
    idx = (rows[:, :, None] * cfg.n_x + cols[:, None, :]).reshape(-1, 16)
    return w16, idx


def displacement_field(
    mesh: ControlMesh, xs: np.ndarray, ys: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized displacement (dx, dy) at in-support coordinates."""
    w16, idx = blend_weights_and_indices(mesh.config, xs, ys)
    flat = mesh.displacements.reshape(-1, 2)
    dx = (flat[:, 0][idx] * w16).sum(axis=1)
    dy = (flat[:, 1][idx] * w16).sum(axis=1)
    return dx, dy


def displacement_at(mesh: ControlMesh, p: tuple[float, float]) -> tuple[float, float]:
    """Displacement vector at a single template coordinate."""
    x, y = p
    if not support_mask(mesh.config, np.float64(x), np.float64(y)):
        raise ValueError("coordinate outside lattice support")
    dx, dy = displacement_field(mesh, np.array([x]), np.array([y]))
    return float(dx[0]), float(dy[0])


def frame_offset(cfg: LatticeConfig, target_w: int, target_h: int) -> tuple[float, float]:
    """Offset aligning the template center with the target center."""
    return (target_w - cfg.image_w) / 2.0, (target_h - cfg.image_h) / 2.0


def inverse_map(
    mesh: ControlMesh,
    p_target: tuple[float, float],
    offset: tuple[float, float] = (0.0, 0.0),
) -> tuple[float, float] | None:
    """Approximate template coordinate for a target coordinate.

    Returns None when the displacement field is not evaluable there.
    """
    tx = p_target[0] - offset[0]
    ty = p_target[1] - offset[1]
    if not support_mask(mesh.config, np.float64(tx), np.float64(ty)):
        return None
    dx, dy = displacement_field(mesh, np.array([tx]), np.array([ty]))
    return float(tx - dx[0]), float(ty - dy[0])


def forward_map(
    mesh: ControlMesh,
    p: tuple[float, float],
    offset: tuple[float, float] = (0.0, 0.0),
) -> tuple[float, float]:
    """Target coordinate for a template coordinate: x + offset + D(x)."""
    dx, dy = displacement_at(mesh, p)
    return p[0] + offset[0] + dx, p[1] + offset[1] + dy


def warp_backward(
    template: GrayImage,
    mesh: ControlMesh,
    target_w: int,
    target_h: int,
) -> tuple[GrayImage, np.ndarray]:
    """Render the template into a target frame by inverse-mapped sampling.

    Returns the warped image and a boolean validity mask; pixels whose
    pre-image falls outside the template are 0 and masked invalid.
    """
    cfg = mesh.config
    if (cfg.image_w, cfg.image_h) != (template.width, template.height):
        raise ValueError("mesh config does not match template dimensions")
    ox, oy = frame_offset(cfg, target_w, target_h)
    gx, gy = np.meshgrid(np.arange(target_w), np.arange(target_h))
    tx = gx.ravel().astype(np.float64) - ox
    ty = gy.ravel().astype(np.float64) - oy
    sup = support_mask(cfg, tx, ty)
    out = np.zeros(target_w * target_h)
    mask = np.zeros(target_w * target_h, dtype=bool)
    if sup.any():
        dx, dy = displacement_field(mesh, tx[sup], ty[sup])
        px = tx[sup] - dx
        py = ty[sup] - dy
        inside = (
            (px >= 0.0)
            & (px <= template.width - 1)
            & (py >= 0.0)
            & (py <= template.height - 1)
        )
        values = sample_bilinear_many(template.data, px[inside], py[inside])
        sup_idx = np.flatnonzero(sup)
        out[sup_idx[inside]] = values
        mask[sup_idx[inside]] = True
    return (
        GrayImage(np.clip(out, 0.0, 255.0).reshape(target_h, target_w)),
        mask.reshape(target_h, target_w),
    )


def warp_forward_points(
    mesh: ControlMesh, sample_stride: int
) -> tuple[np.ndarray, np.ndarray]:
    """Source and deformed coordinates of a stride grid over the template.

    Returns two (n, 2) arrays: grid points x and their images x + D(x).
    """
    if sample_stride < 1:
        raise ValueError("stride must be >= 1")
    cfg = mesh.config
    xs = np.arange(0, cfg.image_w, sample_stride, dtype=np.float64)
    ys = np.arange(0, cfg.image_h, sample_stride, dtype=np.float64)
    gx, gy = np.meshgrid(xs, ys)
    fx = gx.ravel()
    fy = gy.ravel()
    dx, dy = displacement_field(mesh, fx, fy)
    src = np.stack([fx, fy], axis=1)
    dst = np.stack([fx + dx, fy + dy], axis=1)
    return src, dst


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def mesh_to_json(mesh: ControlMesh) -> str:
    cfg = mesh.config
    doc = {
        "n_x": cfg.n_x,
        "n_y": cfg.n_y,
        "s_x": cfg.s_x,
        "s_y": cfg.s_y,
        "image_w": cfg.image_w,
        "image_h": cfg.image_h,
        "displacements": mesh.displacements.reshape(-1, 2).tolist(),
    }
    return json.dumps(doc)


def mesh_from_json(text: str) -> ControlMesh:
    doc = json.loads(text)
    cfg = LatticeConfig(
        int(doc["n_x"]),
        int(doc["n_y"]),
        int(doc["s_x"]),
        int(doc["s_y"]),
        int(doc["image_w"]),
        int(doc["image_h"]),
    )
    disp = np.asarray(doc["displacements"], dtype=np.float64)
    if disp.shape != (cfg.n_x * cfg.n_y, 2):
        raise ValueError("displacement list does not match lattice size")
    return ControlMesh(cfg, disp.reshape(cfg.n_y, cfg.n_x, 2))


def save_mesh(mesh: ControlMesh, path: str | Path) -> None:
    Path(path).write_text(mesh_to_json(mesh))


def load_mesh(path: str | Path) -> ControlMesh:
    return mesh_from_json(Path(path).read_text())
