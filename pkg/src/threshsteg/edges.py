"""Sobel and Canny edge detection, and edge-driven pair selection.

Gradients use the masks::

    gx = [[-1, 0, 1],      gy = [[ 1,  2,  1],
          [-2, 0, 2],            [ 0,  0,  0],
          [-1, 0, 1]]            [-1, -2, -1]]

applied as written (correlation) with replicate padding, so ``gx`` is
right-minus-left and ``gy`` is up-minus-down.  The direction
``-atan(gy / gx)`` is then an angle measured with rows growing downwards,
which is what non-maximum suppression walks along.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .errors import CapacityError, DimensionError
from .lsbmr import padded_length
from .region import eligible_pair_mask, mask_to_loci, pair_views

SOBEL_X = np.array([[-1, 0, 1], [-2, 0, 2], [-1, 0, 1]], dtype=np.int64)
SOBEL_Y = np.array([[1, 2, 1], [0, 0, 0], [-1, -2, -1]], dtype=np.int64)

DEFAULT_SIGMA = 1.4
DEFAULT_KSIZE = 5
DEFAULT_HIGH_FRAC = 0.20
DEFAULT_LOW_RATIO = 0.40
CANNY_DECAY = 0.9
CANNY_MAX_STEPS = 50

# neighbour offsets (drow, dcol) along each quantised direction, rows downwards
_NMS_STEP = {0: (0, 1), 45: (1, 1), 90: (1, 0), 135: (1, -1)}


@dataclass
class GradientField:
    gx: np.ndarray
    gy: np.ndarray
    magnitude: np.ndarray
    direction: np.ndarray


def correlate(channel: np.ndarray, kernel: np.ndarray) -> np.ndarray:
    """Apply ``kernel`` at every pixel with edge-replicated borders."""
    kernel = np.asarray(kernel)
    kh, kw = kernel.shape
    if kh % 2 == 0 or kw % 2 == 0:
        raise ValueError("kernel dimensions must be odd")
    src = np.asarray(channel)
    dtype = np.float64 if kernel.dtype.kind == "f" else np.int64
    padded = np.pad(src.astype(dtype), ((kh // 2,) * 2, (kw // 2,) * 2), mode="edge")
    h, w = src.shape
    out = np.zeros((h, w), dtype=dtype)
    for a in range(kh):
        for b in range(kw):
            if kernel[a, b]:
                out += kernel[a, b] * padded[a : a + h, b : b + w]
    return out


def magnitude_sqrt(gx, gy) -> np.ndarray:
    gx, gy = np.asarray(gx), np.asarray(gy)
    if gx.shape != gy.shape:
        raise DimensionError("gx and gy must share a shape")
    return np.hypot(gx, gy)


def magnitude_abs(gx, gy) -> np.ndarray:
    gx, gy = np.asarray(gx), np.asarray(gy)
    if gx.shape != gy.shape:
        raise DimensionError("gx and gy must share a shape")
    return np.abs(gx) + np.abs(gy)


def gradient_direction(gx, gy) -> np.ndarray:
    """Degrees in (-90, 90]; 90 where only gy is nonzero, 0 where both vanish."""
    gx = np.asarray(gx, dtype=np.float64)
    gy = np.asarray(gy, dtype=np.float64)
    theta = np.where(gy != 0, 90.0, 0.0)
    nz = gx != 0
    theta[nz] = np.degrees(np.arctan(-gy[nz] / gx[nz]))
    return theta


def sobel_gradient(channel: np.ndarray, magnitude: str = "sqrt") -> GradientField:
    gx = correlate(channel, SOBEL_X)
    gy = correlate(channel, SOBEL_Y)
    mag = magnitude_sqrt(gx, gy) if magnitude == "sqrt" else magnitude_abs(gx, gy)
    return GradientField(gx, gy, mag, gradient_direction(gx, gy))


def sobel_edge_map(channel: np.ndarray, edge_threshold: float,
                   magnitude: str = "sqrt") -> np.ndarray:
    if edge_threshold < 0:
        raise ValueError("edge threshold must be non-negative")
    return sobel_gradient(channel, magnitude).magnitude >= edge_threshold


def gaussian_kernel(sigma: float, ksize: int) -> np.ndarray:
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if ksize < 3 or ksize % 2 == 0:
        raise ValueError("ksize must be odd and at least 3")
    r = np.arange(ksize) - ksize // 2
    g = np.exp(-(r[:, None] ** 2 + r[None, :] ** 2) / (2.0 * sigma * sigma))
    return g / g.sum()


def gaussian_smooth(channel: np.ndarray, sigma: float = DEFAULT_SIGMA,
                    ksize: int = DEFAULT_KSIZE) -> np.ndarray:
    smoothed = correlate(channel, gaussian_kernel(sigma, ksize))
    return np.clip(np.floor(smoothed + 0.5), 0, 255).astype(np.uint8)


def quantize_direction(theta):
    """Snap angles to 0/45/90/135; buckets are half-open ``[lo, hi)``."""
    t = np.mod(np.asarray(theta, dtype=np.float64), 180.0)
    q = np.select([t < 22.5, t < 67.5, t < 112.5, t < 157.5], [0, 45, 90, 135], default=0)
    return int(q) if q.ndim == 0 else q.astype(np.int64)


def _shifted(grid: np.ndarray, dr: int, dc: int) -> np.ndarray:
    """``out[i, j] = grid[i + dr, j + dc]``, zero outside the grid."""
    h, w = grid.shape
    out = np.zeros_like(grid)
    out[max(0, -dr) : h - max(0, dr), max(0, -dc) : w - max(0, dc)] = grid[
        max(0, dr) : h - max(0, -dr), max(0, dc) : w - max(0, -dc)
    ]
    return out


def nonmax_suppress(magnitude: np.ndarray, direction: np.ndarray) -> np.ndarray:
    """Zero every pixel that is not a local maximum along its direction.

    A pixel must be >= its forward neighbour and strictly > its backward
    neighbour, so of a two-pixel plateau exactly the backward member stays.
    Neighbours outside the grid count as 0.
    """
    magnitude = np.asarray(magnitude)
    direction = np.asarray(direction)
    if magnitude.shape != direction.shape:
        raise DimensionError("magnitude and direction must share a shape")
    keep = np.zeros(magnitude.shape, dtype=bool)
    for angle, (dr, dc) in _NMS_STEP.items():
        sel = direction == angle
        if not sel.any():
            continue
        fwd = _shifted(magnitude, dr, dc)
        back = _shifted(magnitude, -dr, -dc)
        keep |= sel & (magnitude >= fwd) & (magnitude > back)
    return np.where(keep, magnitude, 0)


_EIGHT = np.ones((3, 3), dtype=bool)


def hysteresis(magnitude: np.ndarray, low: float, high: float) -> np.ndarray:
    if low > high:
        raise ValueError("low threshold exceeds high threshold")
    magnitude = np.asarray(magnitude)
    candidates = magnitude >= low
    labels, n = ndimage.label(candidates, structure=_EIGHT)
    if n == 0:
        return np.zeros(magnitude.shape, dtype=bool)
    seeded = np.zeros(n + 1, dtype=bool)
    seeded[np.unique(labels[magnitude >= high])] = True
    seeded[0] = False
    return seeded[labels]


def canny_suppressed(channel: np.ndarray, sigma: float = DEFAULT_SIGMA,
                     ksize: int = DEFAULT_KSIZE) -> np.ndarray:
    """Smoothing, abs-sum Sobel magnitude and non-maximum suppression."""
    smooth = gaussian_smooth(channel, sigma, ksize)
    gx = correlate(smooth, SOBEL_X)
    gy = correlate(smooth, SOBEL_Y)
    return nonmax_suppress(magnitude_abs(gx, gy), quantize_direction(gradient_direction(gx, gy)))


def _canny_threshold(suppressed: np.ndarray, high_frac: float, low_ratio: float) -> np.ndarray:
    peak = suppressed.max()
    if peak <= 0:
        return np.zeros(suppressed.shape, dtype=bool)
    high = high_frac * peak
    return hysteresis(suppressed, low_ratio * high, high)


def canny(channel: np.ndarray, sigma: float = DEFAULT_SIGMA, ksize: int = DEFAULT_KSIZE,
          high_frac: float = DEFAULT_HIGH_FRAC, low_ratio: float = DEFAULT_LOW_RATIO) -> np.ndarray:
    if not 0 < high_frac <= 1 or not 0 < low_ratio <= 1:
        raise ValueError("high_frac and low_ratio must lie in (0, 1]")
    return _canny_threshold(canny_suppressed(channel, sigma, ksize), high_frac, low_ratio)


def edge_pairs(edge_map: np.ndarray, channel: np.ndarray) -> np.ndarray:
    """Raster-ordered even-column pairs whose two pixels are both edges."""
    edge_map = np.asarray(edge_map, dtype=bool)
    channel = np.asarray(channel)
    if edge_map.shape != channel.shape:
        raise DimensionError("edge map and channel must share a shape")
    left, right = pair_views(edge_map)
    return mask_to_loci(left & right & eligible_pair_mask(channel))


def adaptive_edge_pairs(channel: np.ndarray, required_bits: int, detector: str = "sobel", *,
                        magnitude: str = "sqrt", sigma: float = DEFAULT_SIGMA,
                        ksize: int = DEFAULT_KSIZE, high_frac: float = DEFAULT_HIGH_FRAC,
                        low_ratio: float = DEFAULT_LOW_RATIO) -> tuple[np.ndarray, float]:
    """Loosen the detector from sharpest edges until the payload fits.

    Returns the first ``ceil(bits / 2)`` qualifying pairs and the final
    detector parameter (Sobel magnitude threshold or Canny ``high_frac``).
    """
    if required_bits < 1:
        raise ValueError("required_bits must be at least 1")
    need = padded_length(required_bits) // 2
    channel = np.asarray(channel)

    if detector == "sobel":
        mag = sobel_gradient(channel, magnitude).magnitude
        left, right = pair_views(mag)
        # a pair survives threshold t iff its weaker member does
        strength = np.minimum(left, right)[eligible_pair_mask(channel)]
        if strength.size < need:
            raise CapacityError(
                f"{required_bits} bits need {need} pairs; channel has {strength.size} usable"
            )
        t = float(np.sort(strength)[::-1][need - 1])
        return edge_pairs(mag >= t, channel)[:need], t

    if detector == "canny":
        suppressed = canny_suppressed(channel, sigma, ksize)
        hf = high_frac
        for step in range(CANNY_MAX_STEPS + 1):
            if step:
                hf *= CANNY_DECAY
            pairs = edge_pairs(_canny_threshold(suppressed, hf, low_ratio), channel)
            if len(pairs) >= need:
                return pairs[:need], hf
        raise CapacityError(
            f"{required_bits} bits need {need} pairs; Canny yields {len(pairs)} at high_frac={hf:.3g}"
        )

    raise ValueError(f"unknown detector {detector!r}")


def edge_capacity_bits(channel: np.ndarray, detector: str = "sobel", **params) -> int:
    """Bits available at the loosest setting the adaptive sweep can reach."""
    channel = np.asarray(channel)
    if detector == "sobel":
        return 2 * int(eligible_pair_mask(channel).sum())
    suppressed = canny_suppressed(channel, params.get("sigma", DEFAULT_SIGMA),
                                  params.get("ksize", DEFAULT_KSIZE))
    hf = params.get("high_frac", DEFAULT_HIGH_FRAC) * CANNY_DECAY ** CANNY_MAX_STEPS
    edges = _canny_threshold(suppressed, hf, params.get("low_ratio", DEFAULT_LOW_RATIO))
    return 2 * len(edge_pairs(edges, channel))
