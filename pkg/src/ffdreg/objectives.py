"""Patch/group partitioning of the template and intensity-difference objectives.

The template splits into (n_x - 3) x (n_y - 3) patches; each patch's pixels
share the same 4x4 control-point window. Patches are grouped into 1, 2, or 4
regions and a mean-absolute-difference objective is accumulated per group by
scanning the target on a stride grid and inverse-mapping each sample.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .ffd import (
    ControlMesh,
    LatticeConfig,
    blend_weights_and_indices,
    frame_offset,
    support_mask,
)
from .image import GrayImage, sample_bilinear_many

# Mean absolute difference can never exceed the intensity range, so an empty
# sampling region is scored with the worst possible value.
EMPTY_GROUP_PENALTY = 255.0


def patch_of(p: tuple[float, float], cfg: LatticeConfig) -> tuple[int, int]:
    """Patch index (px, py) containing a template coordinate."""
    x, y = p
    if not (0.0 <= x < cfg.image_w and 0.0 <= y < cfg.image_h):
        raise ValueError("coordinate outside the template region")
    px = min(int(x / cfg.s_x), cfg.patches_x - 1)
    py = min(int(y / cfg.s_y), cfg.patches_y - 1)
    return px, py


@dataclass(frozen=True)
class GroupPartition:
    """Assignment of patches to objective groups plus a per-pixel group map."""

    cfg: LatticeConfig
    n_groups: int
    patch_to_group: np.ndarray  # (patches_y, patches_x) int
    group_id_map: np.ndarray  # (H, W) int

    def __post_init__(self) -> None:
        for name in ("patch_to_group", "group_id_map"):
            arr = np.asarray(getattr(self, name))
            arr = arr.copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    def group_mask(self, group: int) -> np.ndarray:
        """Boolean template raster of the pixels belonging to one group."""
        if not 0 <= group < self.n_groups:
            raise ValueError(f"group {group} outside 0..{self.n_groups - 1}")
        return self.group_id_map == group

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_groups": self.n_groups,
                "patch_to_group": self.patch_to_group.tolist(),
            }
        )


def partition_groups(cfg: LatticeConfig, n_groups: int) -> GroupPartition:
    """Split the patch grid into 1 group, 2 vertical halves, or 4 quadrants."""
    if n_groups not in (1, 2, 4):
        raise ValueError("n_groups must be 1, 2, or 4")
    pgx, pgy = cfg.patches_x, cfg.patches_y
    patch_to_group = np.zeros((pgy, pgx), dtype=np.int64)
    if n_groups >= 2:
        if pgx % 2 != 0:
            raise ValueError("unsplittable patch grid")
        patch_to_group[:, pgx // 2 :] += 1
    if n_groups == 4:
        if pgy % 2 != 0:
            raise ValueError("unsplittable patch grid")
        patch_to_group[pgy // 2 :, :] += 2

    # Per-pixel group ids via the patch of each integer pixel.
    xs = np.minimum(np.arange(cfg.image_w) // cfg.s_x, pgx - 1)
    ys = np.minimum(np.arange(cfg.image_h) // cfg.s_y, pgy - 1)
    group_id_map = patch_to_group[ys[:, None], xs[None, :]]
    return GroupPartition(cfg, n_groups, patch_to_group, group_id_map)


class ObjectiveEvaluator:
    """Repeated objective evaluation against a fixed template/target pair.

    The inverse transform evaluates the displacement field at fixed target
    locations, so the 16 blend weights and control-point indices of every
    sample are mesh-independent and are precomputed here once.
    """

    def __init__(
        self,
        template: GrayImage,
        target: GrayImage,
        cfg: LatticeConfig,
        partition: GroupPartition,
        stride: int,
    ) -> None:
        if stride < 1:
            raise ValueError("stride must be >= 1")
        if (cfg.image_w, cfg.image_h) != (template.width, template.height):
            raise ValueError("lattice config does not match template dimensions")
        if partition.cfg != cfg:
            raise ValueError("partition built for a different lattice config")
        self.cfg = cfg
        self.partition = partition
        self.template = template
        self.target = target
        self.stride = stride
        ox, oy = frame_offset(cfg, target.width, target.height)
        xs = np.arange(0, target.width, stride, dtype=np.float64)
        ys = np.arange(0, target.height, stride, dtype=np.float64)
        gx, gy = np.meshgrid(xs, ys)
        tx = gx.ravel() - ox
        ty = gy.ravel() - oy
        sup = support_mask(cfg, tx, ty)
        self._tx = tx[sup]
        self._ty = ty[sup]
        self._target_vals = target.data[
            gy.ravel()[sup].astype(np.int64), gx.ravel()[sup].astype(np.int64)
        ]
        self._w16, self._idx16 = blend_weights_and_indices(cfg, self._tx, self._ty)
        self.n_support = int(sup.sum())

    def evaluate_genes(self, genes: np.ndarray) -> np.ndarray:
        """Objective vector for a flat genotype (gene order: d_y then d_x per point)."""
        dy_flat = genes[0::2]
        dx_flat = genes[1::2]
        dx = (dx_flat[self._idx16] * self._w16).sum(axis=1)
        dy = (dy_flat[self._idx16] * self._w16).sum(axis=1)
        px = self._tx - dx
        py = self._ty - dy
        tpl = self.template
        inside = (
            (px >= 0.0)
            & (px <= tpl.width - 1)
            & (py >= 0.0)
            & (py <= tpl.height - 1)
        )
        px = px[inside]
        py = py[inside]
        values = sample_bilinear_many(tpl.data, px, py)
        diffs = np.abs(self._target_vals[inside] - values)
        gids = self.partition.group_id_map[py.astype(np.int64), px.astype(np.int64)]
        n = self.partition.n_groups
        sums = np.bincount(gids, weights=diffs, minlength=n)
        counts = np.bincount(gids, minlength=n)
        return np.where(counts > 0, sums / np.maximum(counts, 1), EMPTY_GROUP_PENALTY)

    def evaluate(self, mesh: ControlMesh) -> np.ndarray:
        if mesh.config != self.cfg:
            raise ValueError("mesh config does not match evaluator config")
        genes = mesh.displacements[:, :, ::-1].reshape(-1)
        return self.evaluate_genes(genes)

    def sample_counts(self, mesh: ControlMesh) -> np.ndarray:
        """Per-group sample counts |omega_i'| for one mesh."""
        genes = mesh.displacements[:, :, ::-1].reshape(-1)
        dy_flat = genes[0::2]
        dx_flat = genes[1::2]
        dx = (dx_flat[self._idx16] * self._w16).sum(axis=1)
        dy = (dy_flat[self._idx16] * self._w16).sum(axis=1)
        px = self._tx - dx
        py = self._ty - dy
        tpl = self.template
        inside = (
            (px >= 0.0)
            & (px <= tpl.width - 1)
            & (py >= 0.0)
            & (py <= tpl.height - 1)
        )
        gids = self.partition.group_id_map[
            py[inside].astype(np.int64), px[inside].astype(np.int64)
        ]
        return np.bincount(gids, minlength=self.partition.n_groups)


def evaluate_objectives(
    mesh: ControlMesh,
    template: GrayImage,
    target: GrayImage,
    part: GroupPartition,
    stride: int,
) -> np.ndarray:
    """One-shot objective evaluation; see ObjectiveEvaluator for the fast path."""
    return ObjectiveEvaluator(template, target, mesh.config, part, stride).evaluate(mesh)
