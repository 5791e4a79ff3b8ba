"""Shared fixtures: procedural textures and seeded synthetic rain scenes.

All backgrounds are generated, not shipped: smooth low-frequency luminance
with a faint color tint, which is the regime the detector is designed for
(rain is only separable over locally smooth, near-neutral areas). Rain
layers keep a rain-free border so that clipped detection windows at the
image edge can never be fully covered by a streak.
"""

import cv2
import numpy as np
import pytest

from rainstreak.synth import StreakSpec, ground_truth_mask, render_streaks, screen_blend

BORDER_MARGIN = 6  # detect window_side - 1 keeps edge windows rain-free


def smooth_texture(seed: int, size: int = 200) -> np.ndarray:
    """Deterministic smooth color texture in [0.02, 0.9]."""
    rng = np.random.default_rng(seed)
    lum = cv2.resize(rng.uniform(0.25, 0.55, (5, 5)), (size, size),
                     interpolation=cv2.INTER_CUBIC)
    lum = lum + cv2.resize(rng.uniform(-0.04, 0.04, (20, 20)), (size, size),
                           interpolation=cv2.INTER_CUBIC)
    tint = cv2.resize(rng.uniform(-0.02, 0.02, (4, 4, 3)), (size, size),
                      interpolation=cv2.INTER_CUBIC)
    return np.clip(lum[:, :, None] + tint, 0.02, 0.9)


def bordered_layer(spec: StreakSpec, width: int, height: int,
                   margin: int = BORDER_MARGIN) -> np.ndarray:
    layer = render_streaks(spec, width, height)
    layer[:margin] = 0
    layer[-margin:] = 0
    layer[:, :margin] = 0
    layer[:, -margin:] = 0
    return layer


def rain_scene(seed: int, count: int, intensity: float, size: int = 200,
               background: np.ndarray | None = None):
    """Returns (background, rainy, layer, ground-truth mask)."""
    bg = smooth_texture(seed, size) if background is None else background
    spec = StreakSpec(count=count, angle=float(seed % 30 - 15), length=22,
                      width=2, intensity=intensity, seed=seed)
    layer = bordered_layer(spec, bg.shape[1], bg.shape[0])
    return bg, screen_blend(bg, layer), layer, ground_truth_mask(layer)


def flat_scene(size: int = 240, level: float = 0.4, intensity: float = 0.2,
               count: int = 25, seed: int = 3):
    bg = np.full((size, size, 3), level)
    spec = StreakSpec(count=count, angle=10.0, length=24, width=2,
                      intensity=intensity, seed=seed)
    layer = bordered_layer(spec, size, size)
    return bg, screen_blend(bg, layer), layer, ground_truth_mask(layer)


@pytest.fixture(scope="session")
def synthetic_suite():
    """Ten seeded textured rain scenes (streak counts 20-60, r in [0.15, 0.3])."""
    rng = np.random.default_rng(42)
    scenes = []
    for i in range(10):
        count = int(rng.integers(20, 61))
        r = float(rng.uniform(0.15, 0.30))
        scenes.append(rain_scene(100 + i, count, r))
    return scenes


@pytest.fixture(scope="session")
def natural_suite():
    """Light-rain scenes mimicking natural rain photos (slope near 1)."""
    return [rain_scene(200 + i, 35, 0.05 + 0.01 * i) for i in range(6)]
