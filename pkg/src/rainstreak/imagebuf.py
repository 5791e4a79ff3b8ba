"""Image containers, validation and lossless file I/O.

Images are plain numpy arrays: color images are (H, W, 3) float64 in [0, 1]
with channels in R,G,B order, single channels are (H, W) float64, masks are
(H, W) bool with True at rain pixels. On disk a mask is an 8-bit grayscale
PNG where rain = 0 (black) and non-rain = 255.
"""

import logging

import cv2
import numpy as np

log = logging.getLogger(__name__)


class ImageIOError(RuntimeError):
    """Raised when an image file cannot be read or written."""


def validate_color(img: np.ndarray) -> np.ndarray:
    """Check the (H, W, 3) / [0, 1] contract and return the array."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError(f"expected (H, W, 3) color image, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1:
        raise ValueError(f"image has a zero dimension: {img.shape}")
    if np.min(img) < 0.0 or np.max(img) > 1.0:
        raise ValueError("intensities must lie in [0, 1]")
    return img


def validate_gray(channel: np.ndarray) -> np.ndarray:
    channel = np.asarray(channel, dtype=np.float64)
    if channel.ndim != 2:
        raise ValueError(f"expected (H, W) channel, got shape {channel.shape}")
    if channel.shape[0] < 1 or channel.shape[1] < 1:
        raise ValueError(f"channel has a zero dimension: {channel.shape}")
    if np.min(channel) < 0.0 or np.max(channel) > 1.0:
        raise ValueError("intensities must lie in [0, 1]")
    return channel


def validate_mask(mask: np.ndarray, shape=None) -> np.ndarray:
    mask = np.asarray(mask)
    if mask.dtype != bool or mask.ndim != 2:
        raise ValueError("mask must be a 2-D boolean array")
    if shape is not None and mask.shape != shape[:2]:
        raise ValueError(f"mask shape {mask.shape} does not match image {shape[:2]}")
    return mask


def load_image(path) -> np.ndarray:
    """Load an 8/16-bit PNG or binary PPM as a normalized RGB image.

    Grayscale inputs are promoted to three equal channels; an alpha channel
    is discarded (with a warning).
    """
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise ImageIOError(f"cannot read image: {path}")
    if raw.dtype == np.uint8:
        scale = 255.0
    elif raw.dtype == np.uint16:
        scale = 65535.0
    else:
        raise ImageIOError(f"unsupported sample type {raw.dtype} in {path}")
    if raw.ndim == 2:
        raw = raw[:, :, None].repeat(3, axis=2)
    elif raw.shape[2] == 4:
        log.warning("discarding alpha channel of %s", path)
        raw = raw[:, :, :3]
    elif raw.shape[2] != 3:
        raise ImageIOError(f"unsupported channel count {raw.shape[2]} in {path}")
    if raw.shape[0] < 1 or raw.shape[1] < 1:
        raise ImageIOError(f"zero-dimension image: {path}")
    img = raw[:, :, ::-1].astype(np.float64) / scale  # BGR -> RGB
    return img


def quantize(img: np.ndarray) -> np.ndarray:
    """Map [0, 1] intensities to 8-bit codes, rounding half away from zero."""
    return np.floor(np.asarray(img) * 255.0 + 0.5).astype(np.uint8)


def save_image(img: np.ndarray, path) -> None:
    """Write an 8-bit PNG (or binary PPM, by extension)."""
    img = validate_color(img)
    bgr = quantize(img)[:, :, ::-1]
    if not cv2.imwrite(str(path), bgr):
        raise ImageIOError(f"cannot write image: {path}")


def save_mask(mask: np.ndarray, path) -> None:
    """Write a mask PNG: rain = 0 (black), non-rain = 255."""
    mask = validate_mask(mask)
    data = np.where(mask, 0, 255).astype(np.uint8)
    if not cv2.imwrite(str(path), data):
        raise ImageIOError(f"cannot write mask: {path}")


def load_mask(path) -> np.ndarray:
    raw = cv2.imread(str(path), cv2.IMREAD_GRAYSCALE)
    if raw is None:
        raise ImageIOError(f"cannot read mask: {path}")
    return raw < 128


def integral_of(channel: np.ndarray) -> np.ndarray:
    """Summed-area table with a zero first row and column.

    Entry (i, j) is the exact sum over the pixel rectangle [0, i) x [0, j).
    """
    channel = np.asarray(channel, dtype=np.float64)
    h, w = channel.shape
    table = np.zeros((h + 1, w + 1))
    table[1:, 1:] = channel.cumsum(axis=0).cumsum(axis=1)
    return table


def rect_sum(table: np.ndarray, r0: int, r1: int, c0: int, c1: int) -> float:
    """Sum over the half-open pixel rectangle [r0, r1) x [c0, c1)."""
    return table[r1, c1] - table[r0, c1] - table[r1, c0] + table[r0, c0]


def window_sums(channel: np.ndarray, side: int) -> tuple[np.ndarray, np.ndarray]:
    """Clipped centered side x side window sum and pixel count at every pixel."""
    h, w = channel.shape
    half = side // 2
    table = integral_of(channel)
    r0 = np.clip(np.arange(h) - half, 0, None)
    r1 = np.clip(np.arange(h) + half + 1, None, h)
    c0 = np.clip(np.arange(w) - half, 0, None)
    c1 = np.clip(np.arange(w) + half + 1, None, w)
    sums = (table[np.ix_(r1, c1)] - table[np.ix_(r0, c1)]
            - table[np.ix_(r1, c0)] + table[np.ix_(r0, c0)])
    counts = (r1 - r0)[:, None] * (c1 - c0)[None, :]
    return sums, counts
