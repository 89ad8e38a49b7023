"""Seeded synthetic rasters for tests, demos and the CLI."""

from __future__ import annotations

import numpy as np

__all__ = ["piecewise_constant", "two_class_scene", "one_hot", "smooth_series", "dataset"]


def piecewise_constant(seed: int, n: int = 64, bands: int = 3, shapes: int = 6) -> np.ndarray:
    """Random rectangles and disks over a constant background, values in [0, 1]."""
    rng = np.random.default_rng(seed)
    f = np.zeros((bands, n, n)) + rng.uniform(0.2, 0.8, (bands, 1, 1))
    yy, xx = np.mgrid[:n, :n]
    for _ in range(shapes):
        if rng.random() < 0.5:
            a, b = np.sort(rng.integers(0, n, 2))
            c, d = np.sort(rng.integers(0, n, 2))
            m = (yy >= a) & (yy < b) & (xx >= c) & (xx < d)
        else:
            cy, cx = rng.uniform(0, n, 2)
            r = rng.uniform(4, n / 4) if n >= 16 else rng.uniform(1, max(n / 4, 1.5))
            m = (yy - cy) ** 2 + (xx - cx) ** 2 < r * r
        f[:, m] = rng.uniform(0, 1, (bands, 1))
    return f


def dataset(n_images: int, seed: int = 0, n: int = 32, bands: int = 3) -> np.ndarray:
    """Stack of :func:`piecewise_constant` images, shape ``(N, P, n, n)``."""
    return np.stack([piecewise_constant(seed * 100003 + i, n, bands) for i in range(n_images)])


def two_class_scene(
    seed: int, n: int = 32, bands: int = 3, contrast: float = 0.4
) -> tuple[np.ndarray, np.ndarray]:
    """Bright blobs on a dark background with their label map.

    Returns ``(image (P, n, n), labels (n, n))`` where label 1 marks the
    bright class. The classes are separable by intensity.
    """
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[:n, :n]
    labels = np.zeros((n, n), dtype=np.int64)
    for _ in range(rng.integers(2, 5)):
        if rng.random() < 0.5:
            a, c = rng.integers(0, n - 6, 2)
            h, w = rng.integers(6, n // 2, 2)
            labels[(yy >= a) & (yy < a + h) & (xx >= c) & (xx < c + w)] = 1
        else:
            cy, cx = rng.uniform(0, n, 2)
            r = rng.uniform(3, n / 4)
            labels[(yy - cy) ** 2 + (xx - cx) ** 2 < r * r] = 1
    base = 0.5 - contrast / 2 + rng.uniform(-0.05, 0.05, (bands, 1, 1))
    image = base + contrast * labels[None].astype(float)
    return image, labels


def one_hot(labels, classes: int) -> np.ndarray:
    """``(..., n1, n2)`` integer labels to ``(..., K, n1, n2)`` one-hot masks."""
    labels = np.asarray(labels)
    out = np.stack([(labels == k) for k in range(classes)], axis=-3)
    return out.astype(np.float64)


def smooth_series(seed: int, T: int = 16, n: int = 16, bands: int = 3) -> np.ndarray:
    """Piecewise-constant frames with a slow seasonal modulation, ``(T, P, n, n)``."""
    rng = np.random.default_rng(seed)
    base = piecewise_constant(seed, n, bands)
    t = np.arange(T)[:, None, None, None]
    season = 0.1 * np.sin(2 * np.pi * t / T + rng.uniform(0, 2 * np.pi))
    return base[None] + season + 0.02 * rng.standard_normal((T, bands, n, n))
