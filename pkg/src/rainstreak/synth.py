"""Synthetic rain rendering via the screen blend model.

Streaks are stamped as hard (non-anti-aliased) line segments so the
ground-truth mask is pixel-exact. Blending a rain layer value r over a
background intensity b gives

    i = b + r - b * r = (1 - r) * b + r,

which is exactly the linear imaging model with alpha = 1 - r, beta = r.
The acceptance suite leans on that identity.
"""

import math
from dataclasses import dataclass

import numpy as np

from .imagebuf import validate_color


@dataclass(frozen=True)
class StreakSpec:
    count: int
    angle: float = 10.0       # degrees from vertical, [-45, 45]
    length: int = 20
    width: int = 2
    intensity: float = 0.25
    seed: int = 0

    def __post_init__(self):
        if self.count < 0:
            raise ValueError("count must be >= 0")
        if not -45.0 <= self.angle <= 45.0:
            raise ValueError("angle must lie in [-45, 45] degrees")
        if self.length < 1 or self.width < 1:
            raise ValueError("length and width must be >= 1")
        if not 0.0 < self.intensity <= 1.0:
            raise ValueError("intensity must lie in (0, 1]")


def render_streaks(spec: StreakSpec, width: int, height: int) -> np.ndarray:
    """Rasterize the streaks into an (H, W) rain layer; overlaps take the max."""
    layer = np.zeros((height, width))
    if spec.count == 0:
        return layer
    rng = np.random.default_rng(spec.seed)
    theta = math.radians(spec.angle)
    dx, dy = math.sin(theta), math.cos(theta)
    half_w = spec.width // 2
    for _ in range(spec.count):
        x0 = rng.uniform(0, width)
        y0 = rng.uniform(0, height)
        for t in range(spec.length):
            cy = int(round(y0 + t * dy))
            cx = int(round(x0 + t * dx))
            if not 0 <= cy < height:
                continue
            lo = max(0, cx - half_w)
            hi = min(width, cx - half_w + spec.width)
            if lo < hi:
                layer[cy, lo:hi] = np.maximum(layer[cy, lo:hi], spec.intensity)
    return layer


def screen_blend(background: np.ndarray, layer: np.ndarray) -> np.ndarray:
    """Composite the rain layer over the background: i = b + r - b*r per channel."""
    background = validate_color(background)
    if layer.shape != background.shape[:2]:
        raise ValueError(f"layer shape {layer.shape} does not match image")
    r = layer[:, :, None]
    return background + r - background * r


def ground_truth_mask(layer: np.ndarray) -> np.ndarray:
    """True exactly where the rain layer is nonzero."""
    return layer > 0
