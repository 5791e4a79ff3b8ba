"""Matplotlib figures for the report paths (eval, bench)."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def metrics_figure(report, path) -> None:
    """Bar chart of PSNR and SSIM before/after deraining."""
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(7, 3.2))
    labels = ["rainy", "derained"]
    psnrs = [report.psnr_rainy, report.psnr_derained]
    finite = [min(p, 99.0) for p in psnrs]
    ax1.bar(labels, finite, color=["#888", "#2b7"])
    ax1.set_ylabel("PSNR (dB)")
    for x, p, f in zip(labels, psnrs, finite):
        ax1.text(x, f, "inf" if p != f and p > 99 else f"{p:.2f}",
                 ha="center", va="bottom", fontsize=8)
    ax2.bar(labels, [report.ssim_rainy, report.ssim_derained], color=["#888", "#2b7"])
    ax2.set_ylabel("SSIM")
    ax2.set_ylim(0, 1.05)
    title = report.image_id or "evaluation"
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def bench_figure(stage_means: dict, path) -> None:
    """Stacked view of mean per-stage wall time."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    stages = list(stage_means)
    ax.bar(stages, [stage_means[s] for s in stages], color="#47a")
    ax.set_ylabel("mean wall time (s)")
    ax.set_title("pipeline stage timings")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
