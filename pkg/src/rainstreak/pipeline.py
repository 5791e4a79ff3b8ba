"""End-to-end deraining: detect -> revise -> approximate -> fit & reconstruct."""

import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .approx import ApproxParams, approximate_all
from .detect import DetectParams, detect_candidates, revise_mask
from .imagebuf import validate_color
from .model import LinearParamsMap, ModelParams, derain_image


@dataclass(frozen=True)
class PipelineConfig:
    detect: DetectParams = field(default_factory=DetectParams)
    approx: ApproxParams = field(default_factory=ApproxParams)
    model: ModelParams = field(default_factory=ModelParams)
    # hook for a preprocessing filter (e.g. de-hazing); not used by default
    pre_filter: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def as_dict(self) -> dict:
        return {
            "detect.mu": self.detect.mu,
            "detect.epsilon": self.detect.epsilon,
            "detect.window_side": self.detect.window_side,
            "approx.sigma": self.approx.sigma,
            "approx.window_side": self.approx.window_side,
            "approx.max_growth": self.approx.max_growth,
            "model.window_side": self.model.window_side,
            "model.lambda": self.model.lam,
            "model.alpha_floor": self.model.alpha_floor,
            "model.min_samples": self.model.min_samples,
        }


@dataclass
class PipelineResult:
    derained: np.ndarray
    mask: np.ndarray               # revised rain mask
    candidates: np.ndarray         # pre-revision candidate mask
    params_map: LinearParamsMap
    timings: dict                  # seconds per stage: detect / approx / fit
    counters: dict                 # candidates / revised / fallbacks


def run(img: np.ndarray, cfg: PipelineConfig = PipelineConfig()) -> PipelineResult:
    """Run the full pipeline on one image."""
    img = validate_color(img)
    if cfg.pre_filter is not None:
        img = validate_color(cfg.pre_filter(img))

    t0 = time.perf_counter()
    candidates = detect_candidates(img, cfg.detect)
    mask = revise_mask(img, candidates, cfg.detect)
    t1 = time.perf_counter()
    estimates = approximate_all(img, mask, cfg.approx)
    t2 = time.perf_counter()
    derained, params_map = derain_image(img, mask, estimates, cfg.model)
    t3 = time.perf_counter()

    return PipelineResult(
        derained=derained,
        mask=mask,
        candidates=candidates,
        params_map=params_map,
        timings={"detect": t1 - t0, "approx": t2 - t1, "fit": t3 - t2},
        counters={
            "candidates": int(candidates.sum()),
            "revised": int(mask.sum()),
            "fallbacks": params_map.fallback_count,
        },
    )
