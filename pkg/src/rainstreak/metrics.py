"""PSNR / SSIM and evaluation report assembly.

PSNR uses a single MSE over all pixels and channels with peak 1. SSIM is
computed on luminance (0.299 R + 0.587 G + 0.114 B) with the standard
11x11 Gaussian window (sigma = 1.5), K1 = 0.01, K2 = 0.03, L = 1, averaged
over valid window positions only.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import convolve2d

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_C1 = 0.01 ** 2
SSIM_C2 = 0.03 ** 2


def _check_pair(a, b):
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"image shapes differ: {a.shape} vs {b.shape}")
    return a, b


def psnr(a: np.ndarray, b: np.ndarray) -> float:
    """Peak signal-to-noise ratio in dB; identical images give inf."""
    a, b = _check_pair(a, b)
    mse = np.mean((a - b) ** 2)
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(1.0 / mse)


def luminance(img: np.ndarray) -> np.ndarray:
    return 0.299 * img[..., 0] + 0.587 * img[..., 1] + 0.114 * img[..., 2]


def _gaussian_kernel():
    half = SSIM_WINDOW // 2
    t = np.arange(-half, half + 1, dtype=np.float64)
    g = np.exp(-(t ** 2) / (2.0 * SSIM_SIGMA ** 2))
    kern = np.outer(g, g)
    return kern / kern.sum()


def ssim(a: np.ndarray, b: np.ndarray) -> float:
    """Mean structural similarity over valid window positions, on luminance."""
    a, b = _check_pair(a, b)
    x = luminance(a)
    y = luminance(b)
    if min(x.shape) < SSIM_WINDOW:
        raise ValueError(f"image smaller than the {SSIM_WINDOW}x{SSIM_WINDOW} SSIM window")
    kern = _gaussian_kernel()
    mu_x = convolve2d(x, kern, mode="valid")
    mu_y = convolve2d(y, kern, mode="valid")
    var_x = convolve2d(x * x, kern, mode="valid") - mu_x ** 2
    var_y = convolve2d(y * y, kern, mode="valid") - mu_y ** 2
    cov = convolve2d(x * y, kern, mode="valid") - mu_x * mu_y
    num = (2.0 * mu_x * mu_y + SSIM_C1) * (2.0 * cov + SSIM_C2)
    den = (mu_x ** 2 + mu_y ** 2 + SSIM_C1) * (var_x + var_y + SSIM_C2)
    return float(np.mean(num / den))


@dataclass
class EvalReport:
    image_id: str
    psnr_rainy: float
    psnr_derained: float
    ssim_rainy: float
    ssim_derained: float
    elapsed_detect_s: float = 0.0
    elapsed_approx_s: float = 0.0
    elapsed_fit_s: float = 0.0
    config: dict = field(default_factory=dict)

    @property
    def psnr_gain(self) -> float:
        return self.psnr_derained - self.psnr_rainy

    @property
    def ssim_gain(self) -> float:
        return self.ssim_derained - self.ssim_rainy

    def to_json_dict(self) -> dict:
        def enc(v):
            return "inf" if isinstance(v, float) and math.isinf(v) else v
        out = {
            "id": self.image_id,
            "psnr_rainy": enc(self.psnr_rainy),
            "psnr_derained": enc(self.psnr_derained),
            "psnr_gain": enc(self.psnr_gain),
            "ssim_rainy": self.ssim_rainy,
            "ssim_derained": self.ssim_derained,
            "ssim_gain": self.ssim_gain,
            "elapsed_detect_s": self.elapsed_detect_s,
            "elapsed_approx_s": self.elapsed_approx_s,
            "elapsed_fit_s": self.elapsed_fit_s,
        }
        if self.config:
            out["config"] = self.config
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), indent=2)

    def table(self) -> str:
        rows = [
            ("", "rainy", "derained", "gain"),
            ("PSNR (dB)", f"{self.psnr_rainy:.4f}", f"{self.psnr_derained:.4f}",
             f"{self.psnr_gain:+.4f}"),
            ("SSIM", f"{self.ssim_rainy:.6f}", f"{self.ssim_derained:.6f}",
             f"{self.ssim_gain:+.6f}"),
        ]
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
                 for row in rows]
        lines.append(f"timings: detect {self.elapsed_detect_s:.3f}s, "
                     f"approx {self.elapsed_approx_s:.3f}s, "
                     f"fit {self.elapsed_fit_s:.3f}s")
        return "\n".join(lines)


def evaluate(gt: np.ndarray, rainy: np.ndarray, derained: np.ndarray,
             timings: dict | None = None, image_id: str = "") -> EvalReport:
    """Score a derain run against ground truth."""
    timings = timings or {}
    return EvalReport(
        image_id=image_id,
        psnr_rainy=psnr(gt, rainy),
        psnr_derained=psnr(gt, derained),
        ssim_rainy=ssim(gt, rainy),
        ssim_derained=ssim(gt, derained),
        elapsed_detect_s=timings.get("detect", 0.0),
        elapsed_approx_s=timings.get("approx", 0.0),
        elapsed_fit_s=timings.get("fit", 0.0),
    )
