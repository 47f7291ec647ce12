"""Shared fixtures: deterministic synthetic test images and small pools."""

import numpy as np
import pytest

from dnapix import orchestrator, pool as pool_mod, pyramid

KODAK_WIDTH = 768
KODAK_HEIGHT = 512


def synthetic_image(idx, width=KODAK_WIDTH, height=KODAK_HEIGHT):
    """Deterministic 8-bit grayscale test image with multi-scale content:
    a slow gradient, mid-scale blobs, and mid-frequency texture, so every
    resolution layer carries signal."""
    rng = np.random.default_rng(1000 + idx)
    y, x = np.mgrid[0:height, 0:width]
    img = 110 + 50 * np.sin(2 * np.pi * (x / width * (idx + 1) + y / height * 0.5))
    for _ in range(14):
        cx, cy = rng.uniform(0, width), rng.uniform(0, height)
        r = rng.uniform(25, 90)
        amp = rng.uniform(-55, 55)
        img += amp * np.exp(-(((x - cx) ** 2 + (y - cy) ** 2) / (2 * r * r)))
    for _ in range(8):
        fx, fy = rng.uniform(1 / 40, 1 / 14, 2)
        phase = rng.uniform(0, 2 * np.pi)
        amp = rng.uniform(2, 7)
        img += amp * np.sin(2 * np.pi * (fx * x + fy * y) + phase)
    return pyramid.Image.from_array(np.clip(img, 0, 255).astype(np.uint8))


def tiny_image(seed=9, width=96, height=64):
    """Small blocky image for fast end-to-end paths."""
    rng = np.random.default_rng(seed)
    base = rng.normal(128, 40, (height // 8, width // 8))
    arr = np.kron(base, np.ones((8, 8))) + rng.normal(0, 10, (height, width))
    return pyramid.Image.from_array(np.clip(arr, 0, 255).astype(np.uint8))


@pytest.fixture(scope="session")
def tiny_build():
    """One small image encoded into a pool: (image, dictionary, pool, manifest)."""
    img = tiny_image()
    dictionary = pool_mod.ReferenceDictionary()
    the_pool = pool_mod.Pool()
    manifest = orchestrator.build_image_pool(img, "tiny", 3, dictionary, the_pool, seed=1)
    return img, dictionary, the_pool, manifest
