"""Geometric augmentation on grayscale rasters plus PGM ingestion.

Images are float64 arrays of shape (height, width) with intensities in
[0, 1]. The affine pipeline composes shear, scale, rotation, translation
and flips about the image center, resamples bilinearly, and fills
out-of-bounds samples with 0. Sampling of the transform parameters is
seeded and bounded by per-axis envelopes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError


@dataclass(frozen=True)
class AffineRanges:
    """Envelopes the sampled transform parameters stay within."""

    max_rotation_deg: float = 15.0
    max_scale_frac: float = 0.30
    max_shear_frac: float = 0.30
    max_translate_frac: float = 1.0
    allow_hflip: bool = True
    allow_vflip: bool = True

    def __post_init__(self):
        if self.max_rotation_deg < 0 or self.max_shear_frac < 0:
            raise ValidationError("rotation/shear envelopes must be >= 0")
        if not 0.0 <= self.max_scale_frac < 1.0:
            raise ValidationError("scale envelope must be in [0, 1)")
        if not 0.0 <= self.max_translate_frac <= 1.0:
            raise ValidationError("translate envelope must be in [0, 1]")

    def is_identity(self) -> bool:
        return (
            self.max_rotation_deg == 0
            and self.max_scale_frac == 0
            and self.max_shear_frac == 0
            and self.max_translate_frac == 0
            and not self.allow_hflip
            and not self.allow_vflip
        )


@dataclass(frozen=True)
class AffineParams:
    rotation_deg: float = 0.0
    scale: float = 1.0
    shear_frac: float = 0.0
    translate_x_frac: float = 0.0
    translate_y_frac: float = 0.0
    hflip: bool = False
    vflip: bool = False

    def __post_init__(self):
        if self.scale <= 0:
            raise ValidationError("scale must be positive")


def sample_affine_params(ranges: AffineRanges, rng: np.random.Generator) -> AffineParams:
    """Uniform draws within the envelopes; flips are fair coin tosses."""
    r = ranges.max_rotation_deg
    s = ranges.max_scale_frac
    h = ranges.max_shear_frac
    t = ranges.max_translate_frac
    return AffineParams(
        rotation_deg=float(rng.uniform(-r, r)),
        scale=float(rng.uniform(1.0 - s, 1.0 + s)),
        shear_frac=float(rng.uniform(-h, h)),
        translate_x_frac=float(rng.uniform(-t, t)),
        translate_y_frac=float(rng.uniform(-t, t)),
        hflip=bool(rng.integers(2)) if ranges.allow_hflip else False,
        vflip=bool(rng.integers(2)) if ranges.allow_vflip else False,
    )


def _validate_image(img: np.ndarray) -> np.ndarray:
    arr = np.asarray(img, dtype=float)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValidationError(f"image must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("image intensities must be finite")
    return arr


def affine_matrix(p: AffineParams, width: int, height: int) -> np.ndarray:
    """Output-to-input mapping (2x3) for flip∘translate∘rotate∘scale∘shear.

    The composition pivots on the image center in pixel-center coordinates;
    translation offsets are fractions of (width, height).
    """
    if width < 1 or height < 1:
        raise ValidationError("dimensions must be positive")
    theta = math.radians(p.rotation_deg)
    rot = np.array(
        [[math.cos(theta), -math.sin(theta)], [math.sin(theta), math.cos(theta)]]
    )
    scale = np.array([[p.scale, 0.0], [0.0, p.scale]])
    shear = np.array([[1.0, p.shear_frac], [0.0, 1.0]])
    flip = np.array(
        [[-1.0 if p.hflip else 1.0, 0.0], [0.0, -1.0 if p.vflip else 1.0]]
    )
    linear = flip @ rot @ scale @ shear
    det = linear[0, 0] * linear[1, 1] - linear[0, 1] * linear[1, 0]
    if abs(det) < 1e-12:
        raise ValidationError("singular affine transform (scale ~ 0)")
    inv = np.array(
        [[linear[1, 1], -linear[0, 1]], [-linear[1, 0], linear[0, 0]]]
    ) / det

    offset = flip @ np.array(
        [p.translate_x_frac * width, p.translate_y_frac * height]
    )
    center = np.array([(width - 1) / 2.0, (height - 1) / 2.0])
    # src = inv @ (dst - center - offset) + center
    translation = center - inv @ (center + offset)
    return np.hstack([inv, translation[:, None]])


def apply_affine(img: np.ndarray, m: np.ndarray) -> np.ndarray:
    """Bilinear resample at mapped source coordinates; zero fill outside."""
    arr = _validate_image(img)
    m = np.asarray(m, dtype=float)
    if m.shape != (2, 3) or not np.all(np.isfinite(m)):
        raise ValidationError("matrix must be a finite 2x3 array")
    h, w = arr.shape
    ys, xs = np.meshgrid(np.arange(h, dtype=float), np.arange(w, dtype=float), indexing="ij")
    sx = m[0, 0] * xs + m[0, 1] * ys + m[0, 2]
    sy = m[1, 0] * xs + m[1, 1] * ys + m[1, 2]
    return _bilinear_gather(arr, sx, sy)


def _bilinear_gather(arr: np.ndarray, sx: np.ndarray, sy: np.ndarray) -> np.ndarray:
    h, w = arr.shape
    x0 = np.floor(sx)
    y0 = np.floor(sy)
    fx = sx - x0
    fy = sy - y0

    def gather(xi, yi):
        inside = (xi >= 0) & (xi < w) & (yi >= 0) & (yi < h)
        vals = np.zeros(xi.shape)
        vals[inside] = arr[yi[inside].astype(int), xi[inside].astype(int)]
        return vals

    v00 = gather(x0, y0)
    v10 = gather(x0 + 1, y0)
    v01 = gather(x0, y0 + 1)
    v11 = gather(x0 + 1, y0 + 1)
    return (
        (1.0 - fx) * (1.0 - fy) * v00
        + fx * (1.0 - fy) * v10
        + (1.0 - fx) * fy * v01
        + fx * fy * v11
    )


def resize_to(img: np.ndarray, side: int = 224) -> np.ndarray:
    """Bilinear resize to side x side with corner-aligned sampling."""
    arr = _validate_image(img)
    if side < 1:
        raise ValidationError("side must be >= 1")
    h, w = arr.shape
    if (h, w) == (side, side):
        return arr.copy()
    if side == 1:
        sx = np.full((1, 1), (w - 1) / 2.0)
        sy = np.full((1, 1), (h - 1) / 2.0)
    else:
        grid = np.arange(side, dtype=float) / (side - 1)
        sx = np.tile(grid * (w - 1), (side, 1))
        sy = np.tile((grid * (h - 1))[:, None], (1, side))
    return _bilinear_gather(arr, sx, sy)


def augment_image(
    img: np.ndarray, ranges: AffineRanges, rng: np.random.Generator
) -> np.ndarray:
    params = sample_affine_params(ranges, rng)
    h, w = np.asarray(img).shape
    return apply_affine(img, affine_matrix(params, w, h))


# --- PGM ("P5") ingestion: 8-bit, or 16-bit big-endian ---------------------


def read_pgm(path) -> np.ndarray:
    data = Path(path).read_bytes()
    pos = 0

    def next_token():
        nonlocal pos
        while pos < len(data):
            c = data[pos : pos + 1]
            if c.isspace():
                pos += 1
            elif c == b"#":
                while pos < len(data) and data[pos : pos + 1] != b"\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValidationError("truncated PGM header")
        return data[start:pos]

    if next_token() != b"P5":
        raise ValidationError("not a binary PGM (P5) file")
    width = int(next_token())
    height = int(next_token())
    maxval = int(next_token())
    if width < 1 or height < 1 or not 1 <= maxval <= 65535:
        raise ValidationError("invalid PGM dimensions or maxval")
    pos += 1  # single whitespace byte separates header from raster
    depth = 1 if maxval < 256 else 2
    raster = data[pos : pos + width * height * depth]
    if len(raster) != width * height * depth:
        raise ValidationError("PGM raster truncated")
    dtype = np.uint8 if depth == 1 else np.dtype(">u2")
    pixels = np.frombuffer(raster, dtype=dtype).astype(float).reshape(height, width)
    return pixels / maxval


def write_pgm(path, img: np.ndarray, maxval: int = 255) -> None:
    arr = _validate_image(img)
    if not 1 <= maxval <= 65535:
        raise ValidationError("maxval must be in [1, 65535]")
    quantized = np.rint(np.clip(arr, 0.0, 1.0) * maxval)
    header = f"P5\n{arr.shape[1]} {arr.shape[0]}\n{maxval}\n".encode("ascii")
    if maxval < 256:
        raster = quantized.astype(np.uint8).tobytes()
    else:
        raster = quantized.astype(">u2").tobytes()
    Path(path).write_bytes(header + raster)
