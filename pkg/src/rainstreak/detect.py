"""Rain pixel detection: five-window local-mean test plus chroma revision.

A pixel is a rain candidate when, in every color channel, it exceeds the
local mean of five window placements (pixel at the window center and at
each of its four corners) by a margin ``mu``. Candidates with a chromatic
color, i.e. whose u-v coordinates lie farther than ``epsilon`` from the
origin, are revised back to non-rain: rain is colorless and neutral colors
cluster around (0, 0) in the u-v plane.
"""

from dataclasses import dataclass

import numpy as np

from .imagebuf import integral_of, validate_color, validate_gray, validate_mask


@dataclass(frozen=True)
class DetectParams:
    mu: float = 0.01
    epsilon: float = 0.08
    window_side: int = 7

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError("mu must be >= 0")
        if self.epsilon < 0:
            raise ValueError("epsilon must be >= 0")
        if self.window_side < 3 or self.window_side % 2 == 0:
            raise ValueError("window_side must be odd and >= 3")


def _placements(side: int):
    # inclusive (row_lo, row_hi, col_lo, col_hi) offsets of the window
    # relative to the pixel: center, bottom-right, bottom-left, top-right,
    # top-left (pixel position within the window).
    h = side // 2
    s = side - 1
    return [
        (-h, h, -h, h),
        (-s, 0, -s, 0),
        (-s, 0, 0, s),
        (0, s, -s, 0),
        (0, s, 0, s),
    ]


def window_means(channel: np.ndarray, window_side: int) -> np.ndarray:
    """Per-pixel clipped window means for the five placements, shape (5, H, W)."""
    channel = validate_gray(channel)
    h, w = channel.shape
    table = integral_of(channel)
    rows = np.arange(h)
    cols = np.arange(w)
    out = np.empty((5, h, w))
    for k, (a, b, c, d) in enumerate(_placements(window_side)):
        r0 = np.clip(rows + a, 0, None)
        r1 = np.clip(rows + b + 1, None, h)
        c0 = np.clip(cols + c, 0, None)
        c1 = np.clip(cols + d + 1, None, w)
        sums = (table[np.ix_(r1, c1)] - table[np.ix_(r0, c1)]
                - table[np.ix_(r1, c0)] + table[np.ix_(r0, c0)])
        counts = (r1 - r0)[:, None] * (c1 - c0)[None, :]
        out[k] = sums / counts
    return out


def detect_candidates(img: np.ndarray, params: DetectParams = DetectParams()) -> np.ndarray:
    """Mask of pixels brighter than all five window means by mu, in every channel."""
    img = validate_color(img)
    cand = np.ones(img.shape[:2], dtype=bool)
    for ch in range(3):
        plane = img[:, :, ch]
        means = window_means(plane, params.window_side)
        cand &= np.all(plane[None] > means + params.mu, axis=0)
    return cand


def uv_map(img: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-pixel u-v chroma coordinates; pure black maps to (0, 0)."""
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    c = (r + g + b) / 3.0
    safe = np.where(c > 0, c, 1.0)
    u = np.where(c > 0, (2.0 * c - g - b) / safe, 0.0)
    v = np.where(c > 0, np.maximum((c - g) / safe, (c - b) / safe), 0.0)
    return u, v


def to_uv(pixel) -> tuple[float, float]:
    """u-v coordinates of a single RGB triple."""
    u, v = uv_map(np.asarray(pixel, dtype=np.float64))
    return float(u), float(v)


def revise_mask(img: np.ndarray, candidates: np.ndarray,
                params: DetectParams = DetectParams()) -> np.ndarray:
    """Drop chromatic candidates: keep only those with u-v magnitude <= epsilon."""
    img = validate_color(img)
    candidates = validate_mask(candidates, img.shape)
    u, v = uv_map(img)
    neutral = np.hypot(u, v) <= params.epsilon
    return candidates & neutral


def detect_rain(img: np.ndarray, params: DetectParams = DetectParams()):
    """Candidate detection followed by revision; returns (candidates, revised)."""
    candidates = detect_candidates(img, params)
    return candidates, revise_mask(img, candidates, params)
