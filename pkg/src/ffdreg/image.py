"""Grayscale rasters, bilinear sampling, and Gaussian pyramids."""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

# Rec.601 luminance weights.
GRAY_WEIGHTS = (0.299, 0.587, 0.114)

# Binomial 5-tap smoothing kernel; exact on constant images.
PYRAMID_KERNEL = np.array([1.0, 4.0, 6.0, 4.0, 1.0]) / 16.0


@dataclass(frozen=True)
class GrayImage:
    """Single-channel raster, row-major float intensities in [0, 255]."""

    data: np.ndarray

    def __post_init__(self) -> None:
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise ValueError("empty image")
        if not np.all(np.isfinite(arr)):
            raise ValueError("intensities must be finite")
        lo, hi = float(arr.min()), float(arr.max())
        if lo < 0.0 or hi > 255.0:
            raise ValueError(f"intensities must lie in [0, 255], got [{lo}, {hi}]")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def height(self) -> int:
        return self.data.shape[0]


@dataclass(frozen=True)
class ImagePyramid:
    """Gaussian pyramid ordered coarse to fine; the last level is the input."""

    levels: tuple[GrayImage, ...]

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    def level(self, l: int) -> GrayImage:
        """1-based access: level 1 is the coarsest, level n_levels the finest."""
        if not 1 <= l <= self.n_levels:
            raise ValueError(f"level {l} outside 1..{self.n_levels}")
        return self.levels[l - 1]


def to_grayscale(rgb: np.ndarray) -> GrayImage:
    """Convert an (H, W, 3) raster with channels in [0, 255] to luminance."""
    arr = np.asarray(rgb, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[2] < 3:
        raise ValueError("expected an (H, W, 3) array")
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        raise ValueError("empty image")
    r, g, b = arr[:, :, 0], arr[:, :, 1], arr[:, :, 2]
    lum = GRAY_WEIGHTS[0] * r + GRAY_WEIGHTS[1] * g + GRAY_WEIGHTS[2] * b
    return GrayImage(np.clip(lum, 0.0, 255.0))


def sample_bilinear(img: GrayImage, x: float, y: float) -> float | None:
    """Bilinear intensity at real coordinates; None when outside [0, W-1] x [0, H-1]."""
    w, h = img.width, img.height
    if not (0.0 <= x <= w - 1 and 0.0 <= y <= h - 1):
        return None
    x0 = min(int(x), w - 2) if w > 1 else 0
    y0 = min(int(y), h - 2) if h > 1 else 0
    fx = x - x0
    fy = y - y0
    d = img.data
    x1 = min(x0 + 1, w - 1)
    y1 = min(y0 + 1, h - 1)
    top = d[y0, x0] * (1.0 - fx) + d[y0, x1] * fx
    bot = d[y1, x0] * (1.0 - fx) + d[y1, x1] * fx
    return float(top * (1.0 - fy) + bot * fy)


def sample_bilinear_many(
    data: np.ndarray, xs: np.ndarray, ys: np.ndarray
) -> np.ndarray:
    """Vectorized bilinear sampling; callers must pass in-range coordinates."""
    h, w = data.shape
    x0 = np.minimum(xs.astype(np.int64), w - 2) if w > 1 else np.zeros_like(xs, np.int64)
    y0 = np.minimum(ys.astype(np.int64), h - 2) if h > 1 else np.zeros_like(ys, np.int64)
    x0 = np.maximum(x0, 0)
    y0 = np.maximum(y0, 0)
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    top = data[y0, x0] * (1.0 - fx) + data[y0, x1] * fx
    bot = data[y1, x0] * (1.0 - fx) + data[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def _smooth(arr: np.ndarray) -> np.ndarray:
    """Separable 5-tap binomial smoothing with reflected borders."""
    out = np.zeros_like(arr)
    padded = np.pad(arr, ((2, 2), (0, 0)), mode="reflect")
    for k, wk in enumerate(PYRAMID_KERNEL):
        out += wk * padded[k : k + arr.shape[0]]
    arr2 = out
    out = np.zeros_like(arr2)
    padded = np.pad(arr2, ((0, 0), (2, 2)), mode="reflect")
    for k, wk in enumerate(PYRAMID_KERNEL):
        out += wk * padded[:, k : k + arr.shape[1]]
    return out


def build_pyramid(img: GrayImage, n_levels: int) -> ImagePyramid:
    """Smooth and decimate by 2 per level; level sizes follow the ceil-half rule."""
    if n_levels < 1:
        raise ValueError("n_levels must be >= 1")
    need = 2 ** (n_levels - 1)
    if img.width < need or img.height < need:
        raise ValueError(
            f"image {img.width}x{img.height} too small for {n_levels} pyramid levels"
        )
    levels = [img]
    current = img.data
    for _ in range(n_levels - 1):
        smoothed = _smooth(current)
        # Smoothing is a convex blend, so [min, max] cannot grow; clip guards
        # against float round-off at the 255 boundary only.
        decimated = np.clip(smoothed[::2, ::2], 0.0, 255.0)
        levels.append(GrayImage(decimated))
        current = decimated
    levels.reverse()
    return ImagePyramid(tuple(levels))


# ---------------------------------------------------------------------------
# File I/O: PNG (via Pillow) and binary PGM (P5).
# ---------------------------------------------------------------------------

def _quantize(data: np.ndarray) -> np.ndarray:
    # Round half-up, e.g. 127.5 -> 128.
    return np.clip(np.floor(data + 0.5), 0, 255).astype(np.uint8)


def read_image(path: str | Path) -> GrayImage:
    """Read a PNG or PGM file as grayscale."""
    path = Path(path)
    if path.suffix.lower() == ".pgm":
        return read_pgm(path)
    from PIL import Image

    with Image.open(path) as im:
        if im.mode in ("L", "I;16", "I"):
            arr = np.asarray(im.convert("L"), dtype=np.float64)
            return GrayImage(arr)
        rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
        return to_grayscale(rgb)


def write_png(img: GrayImage, path: str | Path) -> None:
    from PIL import Image

    Image.fromarray(_quantize(img.data), mode="L").save(Path(path), format="PNG")


def write_png_rgb(rgb: np.ndarray, path: str | Path) -> None:
    """Write an (H, W, 3) float array in [0, 255] as an RGB PNG."""
    from PIL import Image

    arr = np.clip(np.floor(np.asarray(rgb, dtype=np.float64) + 0.5), 0, 255)
    Image.fromarray(arr.astype(np.uint8), mode="RGB").save(Path(path), format="PNG")


def write_pgm(img: GrayImage, path: str | Path) -> None:
    """Binary P5, maxval 255, intensities rounded half-up."""
    payload = _quantize(img.data).tobytes()
    header = f"P5\n{img.width} {img.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + payload)


def read_pgm(path: str | Path) -> GrayImage:
    raw = Path(path).read_bytes()
    # Header tokens may be separated by whitespace and '#' comments.
    tokens = []
    pos = 0
    while len(tokens) < 4:
        m = re.match(rb"\s*(#[^\n]*\n)*\s*(\S+)", raw[pos:])
        if m is None:
            raise ValueError(f"truncated PGM header in {path}")
        tokens.append(m.group(2))
        pos += m.end()
    magic, w, h, maxval = tokens
    if magic != b"P5":
        raise ValueError(f"unsupported PGM magic {magic!r}")
    w, h, maxval = int(w), int(h), int(maxval)
    if maxval > 255:
        raise ValueError("only 8-bit PGM supported")
    pos += 1  # single whitespace byte after maxval
    data = np.frombuffer(raw[pos : pos + w * h], dtype=np.uint8)
    if data.size != w * h:
        raise ValueError(f"truncated PGM payload in {path}")
    return GrayImage(data.reshape(h, w).astype(np.float64))
