"""Order statistics and dispersion measures used by the adaptive loss.

Quantiles follow the linear-interpolation rule on sorted values: position
``k = q * (n - 1)``, interpolate between the neighbouring order statistics,
and fall back to the maximum when the upper neighbour does not exist.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from asrl.errors import DomainError

__all__ = [
    "ResidualSample",
    "DispersionSummary",
    "quantile_interp",
    "thresholds",
    "dispersion",
    "weights",
]


def _as_finite_1d(values, what: str = "sample") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        arr = arr.reshape(-1)
    if arr.size == 0:
        raise DomainError(f"{what} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{what} contains non-finite values")
    return arr


class ResidualSample:
    """Immutable, finite, nonempty vector of signed residuals ``y - F``."""

    __slots__ = ("_values",)

    def __init__(self, values: Sequence[float] | np.ndarray):
        arr = _as_finite_1d(values, "residual sample").copy()
        arr.flags.writeable = False
        self._values = arr

    @property
    def values(self) -> np.ndarray:
        return self._values

    def __len__(self) -> int:
        return self._values.size

    def __repr__(self) -> str:
        return f"ResidualSample(n={len(self)})"


def _coerce_sample(residuals) -> np.ndarray:
    if isinstance(residuals, ResidualSample):
        return residuals.values
    return _as_finite_1d(residuals, "residual sample")


@dataclass(frozen=True)
class DispersionSummary:
    variance: float
    iqr: float
    mad: float

    def __post_init__(self):
        for name in ("variance", "iqr", "mad"):
            v = getattr(self, name)
            if not math.isfinite(v) or v < 0:
                raise DomainError(f"{name} must be finite and >= 0, got {v!r}")


def _quantile_sorted(s: np.ndarray, q: float) -> float:
    n = s.size
    k = q * (n - 1)
    f = math.floor(k)
    t = k - f
    if f + 1 < n:
        return float((1.0 - t) * s[f] + t * s[f + 1])
    return float(s[n - 1])


def _check_q(q: float, name: str = "q") -> float:
    q = float(q)
    if not (0.0 <= q <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {q!r}")
    return q


def quantile_interp(sample, q: float) -> float:
    """Linearly interpolated order statistic of ``sample`` at probability ``q``.

    The input is not modified; sorting happens on a copy.

    >>> quantile_interp([1, 2, 3, 4], 0.25)
    1.75
    """
    q = _check_q(q)
    arr = _as_finite_1d(sample)
    return _quantile_sorted(np.sort(arr), q)


def thresholds(residuals, q_low: float, q_high: float) -> tuple[float, float]:
    """Region boundaries (delta1, delta2) as quantiles of ``|residuals|``."""
    q_low = _check_q(q_low, "q_low")
    q_high = _check_q(q_high, "q_high")
    if q_low > q_high:
        raise DomainError(f"q_low ({q_low}) must not exceed q_high ({q_high})")
    s = np.sort(np.abs(_coerce_sample(residuals)))
    d1 = _quantile_sorted(s, q_low)
    d2 = _quantile_sorted(s, q_high)
    # interpolation is monotone in q, but guard against last-bit rounding
    return d1, max(d1, d2)


def dispersion(residuals) -> DispersionSummary:
    """Population variance, IQR of ``|r|`` and MAD of the signed residuals.

    The median inside the MAD uses the same interpolation rule as
    :func:`quantile_interp`, so even-length samples take the midpoint.
    """
    r = _coerce_sample(residuals)
    variance = float(np.mean((r - r.mean()) ** 2))
    abs_sorted = np.sort(np.abs(r))
    iqr = _quantile_sorted(abs_sorted, 0.75) - _quantile_sorted(abs_sorted, 0.25)
    med = _quantile_sorted(np.sort(r), 0.5)
    mad = _quantile_sorted(np.sort(np.abs(r - med)), 0.5)
    return DispersionSummary(variance=variance, iqr=max(iqr, 0.0), mad=mad)


def weights(summary: DispersionSummary, eps: float = 1e-6) -> tuple[float, float, float]:
    """Region weights (alpha, beta, gamma) as regularized inverse dispersions."""
    if not eps > 0:
        raise DomainError(f"eps must be > 0, got {eps!r}")
    alpha = 1.0 / (summary.variance + eps)
    beta = 1.0 / (summary.iqr + eps)
    gamma = 1.0 / (summary.mad + eps)
    return alpha, beta, gamma
