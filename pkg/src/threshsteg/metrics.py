"""Cover/stego quality: MSE, PSNR and relative improvement."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionError

DEFAULT_PEAK_SQ = 256 * 256
CLASSIC_PEAK_SQ = 255 * 255


@dataclass(frozen=True)
class QualityReport:
    mse: float
    psnr: float
    channel: str
    pixel_count: int


def squared_error_sum(cover, stego) -> int:
    cover, stego = np.asarray(cover), np.asarray(stego)
    if cover.shape != stego.shape:
        raise DimensionError(f"shape mismatch: {cover.shape} vs {stego.shape}")
    d = cover.astype(np.int64) - stego.astype(np.int64)
    return int((d * d).sum())


def mse(cover, stego) -> float:
    """Mean of squared signed differences over every sample."""
    total = squared_error_sum(cover, stego)
    n = np.asarray(cover).size
    return total / n


def psnr(mse_value: float, peak_sq: int = DEFAULT_PEAK_SQ) -> float:
    """``10 log10(peak_sq / mse)``; ``inf`` for a perfect copy.

    The default numerator is 256 * 256; pass ``CLASSIC_PEAK_SQ`` for 255².
    """
    if mse_value < 0:
        raise ValueError("MSE cannot be negative")
    if mse_value == 0:
        return math.inf
    return 10.0 * math.log10(peak_sq / mse_value)


def improvement_pct(baseline: float, proposed: float, better: str = "lower") -> float:
    if baseline == 0:
        raise ZeroDivisionError("baseline must be nonzero")
    if better == "lower":
        return (baseline - proposed) / baseline * 100.0
    if better == "higher":
        return (proposed - baseline) / baseline * 100.0
    raise ValueError("better must be 'lower' or 'higher'")


def quality_report(cover, stego, channel: str = "all",
                   peak_sq: int = DEFAULT_PEAK_SQ) -> QualityReport:
    """Compare two channels (2-D) or two full rasters' pixel arrays (3-D)."""
    value = mse(cover, stego)
    return QualityReport(value, psnr(value, peak_sq), channel, int(np.asarray(cover).size))


def mse_for_psnr(psnr_value: float, peak_sq: int = DEFAULT_PEAK_SQ) -> float:
    """Inverse of :func:`psnr`."""
    return peak_sq / 10.0 ** (psnr_value / 10.0)


def reported_pair_consistent(reported_mse: float, reported_psnr: float, decimals: int = 6,
                             tol_db: float = 1e-3, peak_sq: int = DEFAULT_PEAK_SQ) -> bool:
    """Could a printed (MSE, PSNR) pair come from one underlying MSE?

    The printed MSE stands for any value in its rounding band.  PSNR falls
    monotonically with MSE, so the band maps to a PSNR interval and the pair
    is consistent when the printed PSNR lies within ``tol_db`` of it.
    """
    half = 0.5 * 10.0 ** -decimals
    lo, hi = max(reported_mse - half, 0.0), reported_mse + half
    top = math.inf if lo == 0 else psnr(lo, peak_sq)
    return psnr(hi, peak_sq) - tol_db <= reported_psnr <= top + tol_db
