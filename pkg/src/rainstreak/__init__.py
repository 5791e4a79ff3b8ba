"""Single-image rain streak removal with a per-pixel linear imaging model."""

from .approx import ApproxParams, BackgroundEstimate, approximate_all, approximate_pixel
from .detect import DetectParams, detect_candidates, detect_rain, revise_mask, to_uv, window_means
from .imagebuf import (
    ImageIOError,
    integral_of,
    load_image,
    load_mask,
    rect_sum,
    save_image,
    save_mask,
)
from .metrics import EvalReport, evaluate, psnr, ssim
from .model import (
    LinearParams,
    LinearParamsMap,
    ModelParams,
    derain_channel,
    derain_image,
    fit_window,
    reconstruct_pixel,
    rerain_image,
)
from .pipeline import PipelineConfig, PipelineResult, run
from .synth import StreakSpec, ground_truth_mask, render_streaks, screen_blend

__version__ = "0.1.0"
