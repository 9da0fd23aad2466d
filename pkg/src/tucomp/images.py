"""Image-stack ingestion and export (``I1 x I2 x 3 x frames`` tensors in [0, 1])."""

from __future__ import annotations

import os

import numpy as np
from PIL import Image

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".tif", ".tiff", ".gif", ".ppm")


def list_images(directory):
    names = sorted(n for n in os.listdir(directory) if n.lower().endswith(IMAGE_SUFFIXES))
    return [os.path.join(directory, n) for n in names]


def ingest_images(directory, shuffle=False, seed=None):
    """Read every image in ``directory`` into a 4-order tensor.

    Frames are taken in filename order and converted to RGB. With
    ``shuffle`` the frame order is permuted using ``seed``; the permutation
    is returned alongside the tensor.
    """
    paths = list_images(directory)
    if not paths:
        raise ValueError(f"no images found in {directory}")
    frames = []
    for path in paths:
        try:
            with Image.open(path) as img:
                frames.append(np.asarray(img.convert("RGB"), dtype=float) / 255.0)
        except OSError as exc:
            raise ValueError(f"cannot read image {path}: {exc}") from exc
    sizes = {f.shape for f in frames}
    if len(sizes) > 1:
        raise ValueError(f"images have mixed sizes: {sorted(sizes)}")
    T = np.stack(frames, axis=-1)
    order = np.arange(T.shape[-1])
    if shuffle:
        order = np.random.default_rng(seed).permutation(T.shape[-1])
        T = T[..., order]
    return T, order


def to_uint8(T):
    return np.clip(np.rint(np.asarray(T) * 255.0), 0, 255).astype(np.uint8)


def export_images(T, directory, prefix="frame"):
    """Write each frame of an ``I1 x I2 x 3 x F`` tensor as a PNG; returns the paths."""
    T = np.asarray(T)
    if T.ndim != 4 or T.shape[2] != 3:
        raise ValueError(f"expected an I1 x I2 x 3 x F tensor, got shape {T.shape}")
    os.makedirs(directory, exist_ok=True)
    width = max(3, len(str(T.shape[3] - 1)))
    paths = []
    for f in range(T.shape[3]):
        path = os.path.join(directory, f"{prefix}_{f:0{width}d}.png")
        Image.fromarray(to_uint8(T[..., f]), mode="RGB").save(path)
        paths.append(path)
    return paths


def smooth_image_stack(shape=(32, 32, 3, 8), seed=0, components=3):
    """Synthetic RGB frames for inpainting checks.

    Each frame mixes low-frequency cosine patterns shared across the stack
    (per-frame weights, per-pattern colours), adds a soft Gaussian blob and a
    sharp-edged rectangle at random positions, then rescales into
    [0.05, 0.95]. Frames are not ordered smoothly.
    """
    I1, I2, C, F = shape
    rng = np.random.default_rng(seed)
    y = (np.arange(I1) + 0.5) / I1
    x = (np.arange(I2) + 0.5) / I2
    patterns = []
    for _ in range(components):
        fy, fx = rng.integers(0, 3, size=2)
        py, px = rng.uniform(0, 2 * np.pi, size=2)
        patterns.append(np.outer(np.cos(np.pi * fy * y + py), np.cos(np.pi * fx * x + px)))
    patterns = np.stack(patterns, axis=-1)               # I1 x I2 x K
    colours = rng.uniform(0.2, 1.0, size=(components, C))
    weights = rng.standard_normal((components, F))
    T = np.einsum("ijk,kc,kf->ijcf", patterns, colours, weights)
    yy, xx = np.meshgrid(y, x, indexing="ij")
    for f in range(F):
        cy, cx = rng.uniform(0.2, 0.8, size=2)
        width = rng.uniform(0.08, 0.2)
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * width ** 2))
        T[..., f] += blob[..., None] * rng.uniform(0.5, 1.5, size=C)
        y0, x0 = rng.uniform(0.1, 0.6, size=2)
        box = (yy >= y0) & (yy < y0 + 0.25) & (xx >= x0) & (xx < x0 + 0.25)
        T[..., f] += box[..., None] * rng.uniform(-0.8, 0.8, size=C)
    lo, hi = T.min(), T.max()
    return 0.05 + 0.9 * (T - lo) / (hi - lo)
