"""Command-line interface: derain, detect, synth, rerain, eval, bench.

Exit codes: 0 success, 1 I/O failure, 2 invalid flags or contract violation.
Tunables can come from a flat key=value config file (--config); explicit
flags win over the file, the file wins over defaults.
"""

import functools
import json
import statistics
import sys
import time
from pathlib import Path

import click
import cv2
import numpy as np

from . import metrics, pipeline, plots, synth
from .approx import ApproxParams
from .detect import DetectParams
from .imagebuf import ImageIOError, load_image, load_mask, save_image, save_mask
from .model import ModelParams, load_params_csv, rerain_image, save_params_csv

_CONFIG_KEYS = {
    "detect.mu": float,
    "detect.epsilon": float,
    "detect.window_side": int,
    "approx.sigma": float,
    "approx.window_side": int,
    "approx.max_growth": int,
    "model.window_side": int,
    "model.lambda": float,
    "model.alpha_floor": float,
    "model.min_samples": int,
}


def read_config_file(path) -> dict:
    """Parse flat key=value lines; '#' starts a comment."""
    values = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise click.UsageError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, raw = line.partition("=")
        key = key.strip()
        if key not in _CONFIG_KEYS:
            raise click.UsageError(f"{path}:{lineno}: unknown config key {key!r}")
        try:
            values[key] = _CONFIG_KEYS[key](raw.strip())
        except ValueError:
            raise click.UsageError(f"{path}:{lineno}: bad value for {key}: {raw.strip()!r}")
    return values


def build_config(config_file=None, **flags) -> pipeline.PipelineConfig:
    """Defaults <- config file <- explicit flags (None means unset)."""
    values = dict(pipeline.PipelineConfig().as_dict())
    if config_file:
        values.update(read_config_file(config_file))
    flag_keys = {
        "mu": "detect.mu", "epsilon": "detect.epsilon",
        "detect_window": "detect.window_side",
        "sigma": "approx.sigma", "approx_window": "approx.window_side",
        "max_growth": "approx.max_growth",
        "fit_window": "model.window_side", "lam": "model.lambda",
        "alpha_floor": "model.alpha_floor", "min_samples": "model.min_samples",
    }
    for flag, key in flag_keys.items():
        if flags.get(flag) is not None:
            values[key] = flags[flag]
    try:
        return pipeline.PipelineConfig(
            detect=DetectParams(values["detect.mu"], values["detect.epsilon"],
                                values["detect.window_side"]),
            approx=ApproxParams(values["approx.sigma"], values["approx.window_side"],
                                values["approx.max_growth"]),
            model=ModelParams(values["model.window_side"], values["model.lambda"],
                              values["model.alpha_floor"], values["model.min_samples"]),
        )
    except ValueError as exc:
        raise click.UsageError(str(exc))


def config_options(fn):
    opts = [
        click.option("--config", "config_file", type=click.Path(exists=True),
                     help="key=value config file; flags win"),
        click.option("--mu", type=float, help="detection intensity margin"),
        click.option("--epsilon", type=float, help="u-v neutrality threshold"),
        click.option("--detect-window", type=int, help="detection window side"),
        click.option("--sigma", type=float, help="approximation weight bandwidth"),
        click.option("--approx-window", type=int, help="approximation window side"),
        click.option("--max-growth", type=int, help="empty-window growth limit"),
        click.option("--fit-window", type=int, help="model fitting window side"),
        click.option("--lam", type=float, help="ridge regularization"),
        click.option("--alpha-floor", type=float, help="minimum usable slope"),
        click.option("--min-samples", type=int, help="minimum samples per fit"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _echo_config(cfg: pipeline.PipelineConfig) -> None:
    for key, value in cfg.as_dict().items():
        click.echo(f"{key}={value}")


def _fail_io(exc) -> None:
    click.echo(f"error: {exc}", err=True)
    sys.exit(1)


@click.group()
@click.option("--threads", type=int, envvar="DERAIN_THREADS", default=None,
              help="cap library thread pools; results do not depend on it")
def main(threads):
    """Single-image rain streak removal toolkit."""
    if threads is not None:
        if threads < 1:
            raise click.UsageError("--threads must be >= 1")
        cv2.setNumThreads(threads)


@main.command()
@click.argument("input_path", metavar="INPUT", type=click.Path())
@click.option("-o", "--output", required=True, type=click.Path())
@click.option("--mask-out", type=click.Path(), help="write the revised rain mask PNG")
@click.option("--params-out", type=click.Path(), help="write the fitted (alpha, beta) CSV")
@click.option("--debug-dir", type=click.Path(), help="dump intermediate images")
@config_options
def derain(input_path, output, mask_out, params_out, debug_dir, config_file, **flags):
    """Remove rain streaks from INPUT and write the result PNG."""
    cfg = build_config(config_file, **flags)
    try:
        img = load_image(input_path)
    except ImageIOError as exc:
        _fail_io(exc)
    result = pipeline.run(img, cfg)
    try:
        save_image(result.derained, output)
        if mask_out:
            save_mask(result.mask, mask_out)
        if params_out:
            save_params_csv(result.params_map, params_out)
        if debug_dir:
            dbg = Path(debug_dir)
            dbg.mkdir(parents=True, exist_ok=True)
            save_mask(result.candidates, dbg / "candidates.png")
            save_mask(result.mask, dbg / "revised.png")
            qimg = img.copy()
            ys, xs = np.nonzero(result.mask)
            qimg[ys, xs] = np.clip(result.derained[ys, xs], 0, 1)
            save_image(qimg, dbg / "reconstructed_rain_pixels.png")
    except (ImageIOError, OSError) as exc:
        _fail_io(exc)
    _echo_config(cfg)
    for stage, secs in result.timings.items():
        click.echo(f"elapsed_{stage}_s={secs * 1000:.0f}ms")
    for name, value in result.counters.items():
        click.echo(f"{name}={value}")


@main.command()
@click.argument("input_path", metavar="INPUT", type=click.Path())
@click.option("-o", "--output", required=True, type=click.Path(),
              help="mask PNG: rain = black")
@config_options
def detect(input_path, output, config_file, **flags):
    """Detect rain pixels in INPUT and write the revised location map."""
    cfg = build_config(config_file, **flags)
    try:
        img = load_image(input_path)
    except ImageIOError as exc:
        _fail_io(exc)
    from .detect import detect_rain
    candidates, revised = detect_rain(img, cfg.detect)
    try:
        save_mask(revised, output)
    except ImageIOError as exc:
        _fail_io(exc)
    _echo_config(cfg)
    click.echo(f"candidates={int(candidates.sum())}")
    click.echo(f"revised={int(revised.sum())}")


@main.command("synth")
@click.argument("background", type=click.Path())
@click.option("--rainy-out", required=True, type=click.Path())
@click.option("--gt-out", required=True, type=click.Path())
@click.option("--mask-out", required=True, type=click.Path())
@click.option("--count", type=int, default=30, show_default=True)
@click.option("--angle", type=float, default=10.0, show_default=True)
@click.option("--length", type=int, default=20, show_default=True)
@click.option("--width", type=int, default=2, show_default=True)
@click.option("--intensity", type=float, default=0.25, show_default=True)
@click.option("--seed", type=int, required=True, help="RNG seed (reproducibility)")
def synth_cmd(background, rainy_out, gt_out, mask_out, count, angle, length,
              width, intensity, seed):
    """Render synthetic rain over BACKGROUND via the screen blend model."""
    try:
        bg = load_image(background)
    except ImageIOError as exc:
        _fail_io(exc)
    try:
        spec = synth.StreakSpec(count=count, angle=angle, length=length,
                                width=width, intensity=intensity, seed=seed)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    layer = synth.render_streaks(spec, bg.shape[1], bg.shape[0])
    rainy = synth.screen_blend(bg, layer)
    mask = synth.ground_truth_mask(layer)
    try:
        save_image(rainy, rainy_out)
        save_image(bg, gt_out)
        save_mask(mask, mask_out)
    except ImageIOError as exc:
        _fail_io(exc)
    click.echo(f"rain_pixels={int(mask.sum())}")


@main.command()
@click.argument("derained", type=click.Path())
@click.argument("mask_path", metavar="MASK", type=click.Path())
@click.argument("params_csv", metavar="PARAMS", type=click.Path())
@click.option("-o", "--output", required=True, type=click.Path())
def rerain(derained, mask_path, params_csv, output):
    """Re-apply a trained model to add the rain streaks back."""
    try:
        img = load_image(derained)
        mask = load_mask(mask_path)
    except ImageIOError as exc:
        _fail_io(exc)
    try:
        params_map = load_params_csv(params_csv, mask)
    except OSError as exc:
        _fail_io(exc)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    try:
        save_image(rerain_image(img, mask, params_map), output)
    except (ImageIOError, ValueError) as exc:
        _fail_io(exc)


@main.command("eval")
@click.argument("gt", type=click.Path())
@click.argument("rainy", type=click.Path())
@click.argument("derained", type=click.Path())
@click.option("--report", type=click.Path(), help="write the JSON report here")
@click.option("--id", "image_id", default="", help="image identifier for the report")
@click.option("--fig", type=click.Path(), help="render a metrics figure here")
@config_options
def eval_cmd(gt, rainy, derained, report, image_id, fig, config_file, **flags):
    """Score DERAINED against GT, with RAINY as the baseline."""
    cfg = build_config(config_file, **flags)
    try:
        gt_img = load_image(gt)
        rainy_img = load_image(rainy)
        der_img = load_image(derained)
    except ImageIOError as exc:
        _fail_io(exc)
    try:
        rep = metrics.evaluate(gt_img, rainy_img, der_img,
                               image_id=image_id or Path(derained).stem)
    except ValueError as exc:
        raise click.UsageError(str(exc))
    rep.config = cfg.as_dict()
    click.echo(rep.table())
    if report:
        try:
            Path(report).write_text(rep.to_json() + "\n")
        except OSError as exc:
            _fail_io(exc)
    if fig:
        plots.metrics_figure(rep, fig)


@main.command()
@click.option("--size", type=int, default=256, show_default=True)
@click.option("-r", "--repetitions", type=int, default=3, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--fig", type=click.Path(), help="render a stage-timing figure here")
@config_options
def bench(size, repetitions, seed, fig, config_file, **flags):
    """Time the pipeline on a seeded synthetic fixture."""
    if size < 32 or repetitions < 1:
        raise click.UsageError("--size must be >= 32 and --repetitions >= 1")
    cfg = build_config(config_file, **flags)
    rng = np.random.default_rng(seed)
    base = np.clip(0.35 + 0.2 * rng.standard_normal((size // 8, size // 8, 3)), 0.05, 0.75)
    bg = np.clip(cv2.resize(base, (size, size), interpolation=cv2.INTER_CUBIC), 0.0, 1.0)
    layer = synth.render_streaks(
        synth.StreakSpec(count=max(10, size // 6), angle=12.0, length=size // 10,
                         width=2, intensity=0.25, seed=seed), size, size)
    rainy = synth.screen_blend(bg, layer)

    samples = {"detect": [], "approx": [], "fit": [], "total": []}
    for _ in range(repetitions):
        t0 = time.perf_counter()
        result = pipeline.run(rainy, cfg)
        total = time.perf_counter() - t0
        for stage in ("detect", "approx", "fit"):
            samples[stage].append(result.timings[stage])
        samples["total"].append(total)

    _echo_config(cfg)
    means = {}
    for stage, vals in samples.items():
        means[stage] = statistics.fmean(vals)
        click.echo(f"{stage}_mean_s={means[stage]:.3f} {stage}_min_s={min(vals):.3f}")
    if fig:
        plots.bench_figure({k: v for k, v in means.items() if k != "total"}, fig)


if __name__ == "__main__":
    main()
