"""Per-pixel linear imaging model: fit, invert, re-apply.

A rain pixel observes p = alpha * s + beta of the true scene intensity s.
For each rain pixel, (alpha, beta) is the closed-form minimizer of a ridge
loss over all rain pixels in the surrounding M x M window, pairing each
observed intensity d_k with its background estimate q_k:

    E(alpha, beta) = sum_k ((d_k - alpha q_k - beta)^2 + lambda alpha^2)
    alpha = (mean(d q) - mean(d) mean(q)) / (var(q) + lambda)
    beta  = mean(d) - alpha mean(q)

The rain-free intensity is s = (p - beta) / alpha, taken from the window
centered at the pixel only. Degenerate windows (too few samples or a slope
below ``alpha_floor``) fall back to s = q and are flagged; reconstructions
pushed out of [0, 1] are clamped and flagged as well.

All windowed moments are computed with integral images, so a whole channel
is fitted in a handful of vectorized passes.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .approx import BackgroundEstimate
from .imagebuf import validate_color, validate_gray, validate_mask, window_sums

FLAG_OK = 0
FLAG_FALLBACK = 1
FLAG_CLAMPED = 2

# variance + lambda below this is treated as a degenerate (constant-q) window
_DEGENERATE_EPS = 1e-12


@dataclass(frozen=True)
class ModelParams:
    window_side: int = 85
    lam: float = 1e-4
    alpha_floor: float = 0.2
    min_samples: int = 2

    def __post_init__(self):
        if self.window_side < 3 or self.window_side % 2 == 0:
            raise ValueError("window_side must be odd and >= 3")
        if self.lam < 0:
            raise ValueError("lam must be >= 0")
        if not 0 < self.alpha_floor < 1:
            raise ValueError("alpha_floor must be in (0, 1)")
        if self.min_samples < 2:
            raise ValueError("min_samples must be >= 2")


@dataclass(frozen=True)
class LinearParams:
    alpha: float
    beta: float


@dataclass
class LinearParamsMap:
    """Fitted (alpha, beta) and status flag per rain pixel per channel."""

    mask: np.ndarray    # (H, W) bool
    alpha: np.ndarray   # (H, W, 3)
    beta: np.ndarray    # (H, W, 3)
    flags: np.ndarray   # (H, W, 3) uint8, FLAG_* values

    @property
    def fallback_count(self) -> int:
        return int((self.flags[self.mask] != FLAG_OK).any(axis=1).sum())


def fit_window(d, q, lam: float) -> LinearParams:
    """Closed-form ridge fit of d ~ alpha * q + beta over one sample set."""
    d = np.asarray(d, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if d.size == 0:
        raise ValueError("cannot fit an empty sample set")
    dbar = d.mean()
    qbar = q.mean()
    # centered moments: algebraically identical to E[dq] - E[d]E[q], but a
    # constant q yields an exact zero rather than rounding residue
    cov = ((d - dbar) * (q - qbar)).mean()
    var = ((q - qbar) ** 2).mean()
    alpha = cov / (var + lam) if var > _DEGENERATE_EPS else 0.0
    return LinearParams(alpha, dbar - alpha * qbar)


def reconstruct_pixel(p: float, params: LinearParams, q: float,
                      alpha_floor: float = 0.2):
    """Invert the model at one pixel; returns (s, flag)."""
    if params.alpha < alpha_floor:
        return q, FLAG_FALLBACK
    s = (p - params.beta) / params.alpha
    if s < 0.0 or s > 1.0:
        return min(max(s, 0.0), 1.0), FLAG_CLAMPED
    return s, FLAG_OK


def derain_channel(channel: np.ndarray, mask: np.ndarray, qmap: np.ndarray,
                   params: ModelParams = ModelParams()):
    """Remove rain from one channel.

    qmap holds the background estimate at rain pixels (anything elsewhere).
    Returns (output, alpha, beta, flags) full-size arrays; non-rain pixels
    pass through bit-exactly and carry zero parameters.
    """
    channel = validate_gray(channel)
    mask = validate_mask(mask, channel.shape)
    out = channel.copy()
    alpha = np.zeros_like(channel)
    beta = np.zeros_like(channel)
    flags = np.zeros(channel.shape, dtype=np.uint8)
    ys, xs = np.nonzero(mask)
    if ys.size == 0:
        return out, alpha, beta, flags

    m = mask.astype(np.float64)
    side = params.window_side
    k_all = window_sums(m, side)[0]
    sd = window_sums(channel * m, side)[0]
    sq = window_sums(qmap * m, side)[0]
    sdq = window_sums(channel * qmap * m, side)[0]
    sqq = window_sums(qmap * qmap * m, side)[0]

    k = k_all[ys, xs]
    dbar = sd[ys, xs] / k
    qbar = sq[ys, xs] / k
    cov = sdq[ys, xs] / k - dbar * qbar
    den = sqq[ys, xs] / k - qbar * qbar + params.lam
    a = np.where(den > _DEGENERATE_EPS, cov / np.where(den > _DEGENERATE_EPS, den, 1.0), 0.0)
    b = dbar - a * qbar

    p = channel[ys, xs]
    qv = qmap[ys, xs]
    usable = (k >= params.min_samples) & (a >= params.alpha_floor)
    s_raw = (p - b) / np.where(usable, a, 1.0)
    s = np.clip(s_raw, 0.0, 1.0)

    f = np.full(ys.size, FLAG_FALLBACK, dtype=np.uint8)
    f[usable] = np.where(s_raw[usable] == s[usable], FLAG_OK, FLAG_CLAMPED)
    out[ys, xs] = np.where(usable, s, qv)
    alpha[ys, xs] = a
    beta[ys, xs] = b
    flags[ys, xs] = f
    return out, alpha, beta, flags


def derain_image(img: np.ndarray, mask: np.ndarray, estimates: BackgroundEstimate,
                 params: ModelParams = ModelParams()):
    """Per-channel rain removal; returns (derained, LinearParamsMap)."""
    img = validate_color(img)
    mask = validate_mask(mask, img.shape)
    qmap = estimates.as_map(img.shape)
    out = np.empty_like(img)
    alpha = np.empty_like(img)
    beta = np.empty_like(img)
    flags = np.empty(img.shape, dtype=np.uint8)
    for ch in range(3):
        out[:, :, ch], alpha[:, :, ch], beta[:, :, ch], flags[:, :, ch] = \
            derain_channel(img[:, :, ch], mask, qmap[:, :, ch], params)
    return out, LinearParamsMap(mask, alpha, beta, flags)


def rerain_image(derained: np.ndarray, mask: np.ndarray,
                 params_map: LinearParamsMap) -> np.ndarray:
    """Re-apply the trained model: p = alpha * s + beta at every rain pixel."""
    derained = validate_color(derained)
    mask = validate_mask(mask, derained.shape)
    out = derained.copy()
    rained = params_map.alpha[mask] * derained[mask] + params_map.beta[mask]
    out[mask] = np.clip(rained, 0.0, 1.0)
    return out


def save_params_csv(params_map: LinearParamsMap, path) -> None:
    """Dump the fitted parameters as x,y,channel,alpha,beta,fallback_flag rows."""
    ys, xs = np.nonzero(params_map.mask)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "channel", "alpha", "beta", "fallback_flag"])
        for y, x in zip(ys, xs):
            for ch in range(3):
                writer.writerow([x, y, ch,
                                 repr(float(params_map.alpha[y, x, ch])),
                                 repr(float(params_map.beta[y, x, ch])),
                                 int(params_map.flags[y, x, ch])])


def load_params_csv(path, mask: np.ndarray) -> LinearParamsMap:
    """Rebuild a LinearParamsMap from a CSV sidecar; the mask must be covered."""
    h, w = mask.shape
    alpha = np.zeros((h, w, 3))
    beta = np.zeros((h, w, 3))
    flags = np.zeros((h, w, 3), dtype=np.uint8)
    seen = np.zeros((h, w, 3), dtype=bool)
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            x, y, ch = int(row["x"]), int(row["y"]), int(row["channel"])
            alpha[y, x, ch] = float(row["alpha"])
            beta[y, x, ch] = float(row["beta"])
            flags[y, x, ch] = int(row["fallback_flag"])
            seen[y, x, ch] = True
    missing = mask[:, :, None] & ~seen
    if missing.any():
        y, x, _ = np.argwhere(missing)[0]
        raise ValueError(f"no parameters for rain pixel (x={x}, y={y})")
    return LinearParamsMap(mask, alpha, beta, flags)
