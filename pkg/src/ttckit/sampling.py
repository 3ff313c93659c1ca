"""Bilinear sampling primitives shared by the estimators.

Coordinate conventions
----------------------
Arrays are indexed ``[row, col]`` = ``[y, x]``; pixel ``(i, j)`` has its
value at texel coordinate ``(i, j)``, and samples outside
``[0, H-1] x [0, W-1]`` are edge-clamped.

A :class:`~ttckit.boxes.BoundingBox` corner maps directly onto texel
coordinates: ``crop_resize`` places output sample j of a box starting at
x0 at texel ``x0 + j * (w / out_w)`` (so a box covering the whole image
resized to the image size is an identity), while ``grid_sample_features``
is corner-aligned, ``x0 + j * (w - 1) / (out - 1)``, with the first and
last samples pinned to the box edges.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .boxes import BoundingBox
from .errors import DomainError

_NORM_EPS = 1e-12


def bilinear_sample(image: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample an (H, W) or (H, W, C) array at float texel coords, edge-clamped.

    ``ys`` and ``xs`` must broadcast against each other; the output has
    their broadcast shape (plus the channel axis, if any).
    """
    h, w = image.shape[:2]
    ys = np.clip(np.asarray(ys, dtype=np.float64), 0.0, h - 1.0)
    xs = np.clip(np.asarray(xs, dtype=np.float64), 0.0, w - 1.0)
    y0 = np.floor(ys).astype(np.intp)
    x0 = np.floor(xs).astype(np.intp)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = ys - y0
    fx = xs - x0
    if image.ndim == 3:
        fy = fy[..., None]
        fx = fx[..., None]
    top = image[y0, x0] * (1.0 - fx) + image[y0, x1] * fx
    bot = image[y1, x0] * (1.0 - fx) + image[y1, x1] * fx
    return top * (1.0 - fy) + bot * fy


def crop_positions(
    box: BoundingBox, out_w: int, out_h: int
) -> tuple[np.ndarray, np.ndarray]:
    """1-D texel coordinates of the crop-resize sampling grid."""
    if out_w < 1 or out_h < 1:
        raise DomainError(f"output dims must be positive, got {out_w}x{out_h}")
    xs = box.x0 + np.arange(out_w) * (box.w / out_w)
    ys = box.y0 + np.arange(out_h) * (box.h / out_h)
    return ys, xs


def crop_resize(
    frame: np.ndarray, box: BoundingBox, out_w: int, out_h: int
) -> np.ndarray:
    """Crop an axis-aligned box and resize to (out_h, out_w) bilinearly."""
    ys, xs = crop_positions(box, out_w, out_h)
    return bilinear_sample(frame, ys[:, None], xs[None, :])


def grid_positions(
    box: BoundingBox, out_w: int, out_h: int
) -> tuple[np.ndarray, np.ndarray]:
    """1-D texel coordinates of the corner-aligned feature sampling grid."""
    if out_w < 2 or out_h < 2:
        raise DomainError(f"grid dims must be >= 2, got {out_w}x{out_h}")
    xs = box.x0 + np.arange(out_w) * ((box.w - 1.0) / (out_w - 1))
    ys = box.y0 + np.arange(out_h) * ((box.h - 1.0) / (out_h - 1))
    return ys, xs


def grid_sample_features(
    fmap: np.ndarray, box: BoundingBox, out_w: int = 50, out_h: int = 50
) -> np.ndarray:
    """Resample a feature map at a fixed-size uniform grid spanning a box."""
    ys, xs = grid_positions(box, out_w, out_h)
    return bilinear_sample(fmap, ys[:, None], xs[None, :])


def cosine_similarity_map(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Per-position cosine similarity of channel vectors.

    Positions where either vector has (near-)zero norm score 0.
    """
    if a.shape != b.shape:
        raise DomainError(f"shape mismatch {a.shape} vs {b.shape}")
    if a.ndim == 2:
        a = a[..., None]
        b = b[..., None]
    num = np.sum(a * b, axis=-1)
    denom = np.sqrt(np.sum(a * a, axis=-1) * np.sum(b * b, axis=-1))
    return num / np.maximum(denom, _NORM_EPS)


def center_shift_search(
    score_fn: Callable[[BoundingBox], float],
    box: BoundingBox,
    c: int,
    maximize: bool = True,
) -> tuple[float, int, int]:
    """Exhaustive integer-offset search over a (2c+1) x (2c+1) neighborhood.

    Evaluates ``score_fn`` at every center offset (dx, dy) in [-c, c]^2 and
    returns ``(best_score, dx, dy)``.  Ties keep the lexicographically first
    (dx, dy).
    """
    if c < 0:
        raise DomainError(f"shift radius must be >= 0, got {c}")
    best: tuple[float, int, int] | None = None
    for dx in range(-c, c + 1):
        for dy in range(-c, c + 1):
            score = float(score_fn(box.shifted(dx, dy)))
            if best is None:
                best = (score, dx, dy)
            elif maximize and score > best[0]:
                best = (score, dx, dy)
            elif not maximize and score < best[0]:
                best = (score, dx, dy)
    assert best is not None
    return best


def shift_offsets(c: int) -> np.ndarray:
    """All (dx, dy) integer offsets in [-c, c]^2, lexicographic order."""
    if c < 0:
        raise DomainError(f"shift radius must be >= 0, got {c}")
    side = np.arange(-c, c + 1)
    dx = np.repeat(side, 2 * c + 1)
    dy = np.tile(side, 2 * c + 1)
    return np.stack([dx, dy], axis=1)
