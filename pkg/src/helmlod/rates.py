"""Log-log least-squares rate fits."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class RateFit:
    x: tuple
    y: tuple
    slope: float
    intercept: float
    r2: float

    def predict(self, x) -> np.ndarray:
        return 2.0 ** (self.intercept + self.slope * np.log2(np.asarray(x, dtype=float)))


def fit_rate(x: Sequence[float], y: Sequence[float]) -> RateFit:
    """Least-squares line through ``(log2 x, log2 y)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1D sequences of equal length")
    if len(x) < 3:
        raise ValueError(f"need at least 3 points for a rate fit, got {len(x)}")
    if np.any(~(x > 0)) or np.any(~(y > 0)):
        raise ValueError("rate fit needs strictly positive x and y values")
    lx, ly = np.log2(x), np.log2(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = ly - (intercept + slope * lx)
    ss_tot = np.sum((ly - ly.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(tuple(x), tuple(y), float(slope), float(intercept), float(r2))
