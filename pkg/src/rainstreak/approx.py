"""Background color estimation for detected rain pixels.

Each rain pixel's pre-rain color is approximated by a weighted average of
the non-rain pixels in the window around it. Weights fall off with the
squared RGB distance to the observed rain pixel, w = exp(-||h - p||^2 / sigma^2),
and the average uses the squared weights:

    q = sum(w_k^2 * h_k) / sum(w_k^2)

If a window contains no non-rain pixel at all, it is grown by one pixel per
side (up to ``max_growth`` times); if still empty, the observed color is
kept and the pixel is flagged.
"""

from dataclasses import dataclass

import numpy as np

from .imagebuf import validate_color, validate_mask


@dataclass(frozen=True)
class ApproxParams:
    sigma: float = 9.0
    window_side: int = 13
    max_growth: int = 5

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be > 0")
        if self.window_side < 3 or self.window_side % 2 == 0:
            raise ValueError("window_side must be odd and >= 3")
        if self.max_growth < 0:
            raise ValueError("max_growth must be >= 0")


@dataclass(frozen=True)
class BackgroundEstimate:
    """One q estimate per rain pixel, in np.nonzero(mask) order."""

    coords: np.ndarray   # (n, 2) row, col
    q: np.ndarray        # (n, 3) estimated RGB
    grown: np.ndarray    # (n,) True where the fallback window growth was used

    def as_map(self, shape) -> np.ndarray:
        """Scatter the estimates into an (H, W, 3) array (zero off-mask)."""
        qmap = np.zeros((shape[0], shape[1], 3))
        qmap[self.coords[:, 0], self.coords[:, 1]] = self.q
        return qmap


def _window_estimate(img, nonrain, y, x, side, inv_sigma2):
    h, w = nonrain.shape
    half = side // 2
    r0, r1 = max(0, y - half), min(h, y + half + 1)
    c0, c1 = max(0, x - half), min(w, x + half + 1)
    sel = nonrain[r0:r1, c0:c1]
    if not sel.any():
        return None
    neigh = img[r0:r1, c0:c1][sel]
    d2 = ((neigh - img[y, x]) ** 2).sum(axis=1)
    w2 = np.exp(-2.0 * d2 * inv_sigma2)
    return (w2[:, None] * neigh).sum(axis=0) / w2.sum()


def approximate_pixel(img: np.ndarray, mask: np.ndarray, at,
                      params: ApproxParams = ApproxParams()):
    """Estimate one rain pixel's background color; returns (q, grown)."""
    y, x = at
    if not mask[y, x]:
        raise ValueError(f"pixel ({y}, {x}) is not a rain pixel")
    inv_sigma2 = 1.0 / params.sigma ** 2
    side = params.window_side
    nonrain = ~mask
    for attempt in range(params.max_growth + 1):
        q = _window_estimate(img, nonrain, y, x, side, inv_sigma2)
        if q is not None:
            return q, attempt > 0
        side += 2
    return img[y, x].copy(), True


def approximate_all(img: np.ndarray, mask: np.ndarray,
                    params: ApproxParams = ApproxParams()) -> BackgroundEstimate:
    """Background estimates for every rain pixel.

    Vectorized over window offsets: one pass per offset of the window,
    accumulating squared weights for all rain pixels at once. Pixels whose
    window holds no non-rain neighbor fall back to the scalar growth path.
    """
    img = validate_color(img)
    mask = validate_mask(mask, img.shape)
    ys, xs = np.nonzero(mask)
    n = ys.size
    if n == 0:
        return BackgroundEstimate(np.empty((0, 2), int), np.empty((0, 3)),
                                  np.empty(0, bool))
    h, w, _ = img.shape
    half = params.window_side // 2
    padded = np.zeros((h + 2 * half, w + 2 * half, 3))
    padded[half:half + h, half:half + w] = img
    valid = np.zeros((h + 2 * half, w + 2 * half), dtype=bool)
    valid[half:half + h, half:half + w] = ~mask

    p = img[ys, xs]
    num = np.zeros((n, 3))
    den = np.zeros(n)
    inv_sigma2 = 1.0 / params.sigma ** 2
    for dy in range(-half, half + 1):
        for dx in range(-half, half + 1):
            neigh = padded[ys + half + dy, xs + half + dx]
            ok = valid[ys + half + dy, xs + half + dx]
            d2 = ((neigh - p) ** 2).sum(axis=1)
            w2 = np.where(ok, np.exp(-2.0 * d2 * inv_sigma2), 0.0)
            num += w2[:, None] * neigh
            den += w2

    q = np.empty((n, 3))
    grown = np.zeros(n, dtype=bool)
    nonempty = den > 0
    q[nonempty] = num[nonempty] / den[nonempty, None]
    for i in np.nonzero(~nonempty)[0]:
        q[i], grown[i] = approximate_pixel(img, mask, (ys[i], xs[i]), params)
    return BackgroundEstimate(np.column_stack([ys, xs]), q, grown)
