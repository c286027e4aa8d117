"""Product-normal centering measure and its dyadic quantile partition.

The centering measure is N(mu1, 1) x N(mu2, 1): a bivariate normal with
identity precision, so the location vector is the only free parameter.
Level-m partition cells are cross products of the 2^m dyadic quantile
intervals of the two marginals, half-open on the left and closed on the
right, which puts boundary points in the left cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

__all__ = [
    "CenteringMeasure",
    "PartitionIndex",
    "std_normal_cdf",
    "std_normal_quantile",
    "density_at",
    "log_density_at",
    "marginal_cdfs",
    "axis_index_from_cdf",
    "level_indices",
    "partition_index",
]

LOG_TWO_PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class CenteringMeasure:
    """Location of the product-normal centering measure."""

    mu1: float = 0.0
    mu2: float = 0.0

    def __post_init__(self):
        if not (math.isfinite(self.mu1) and math.isfinite(self.mu2)):
            raise ValueError("centering location must be finite")

    @property
    def mu(self) -> np.ndarray:
        return np.array([self.mu1, self.mu2])

    @property
    def norm(self) -> float:
        return math.hypot(self.mu1, self.mu2)


@dataclass(frozen=True)
class PartitionIndex:
    """Location (j, k) of a level-m partition cell, axes indexed 1..2^m."""

    m: int
    j: int
    k: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("tree level must be >= 1")
        top = 1 << self.m
        if not (1 <= self.j <= top and 1 <= self.k <= top):
            raise ValueError(
                f"cell ({self.j}, {self.k}) out of range 1..{top} at level {self.m}"
            )

    def parent(self) -> "PartitionIndex":
        """Index of the containing cell one level up."""
        if self.m == 1:
            raise ValueError("level-1 cells have no parent cell")
        return PartitionIndex(self.m - 1, (self.j + 1) // 2, (self.k + 1) // 2)


def std_normal_cdf(z):
    """Standard normal CDF.

    Accepts scalars or arrays; absolute error is at machine-precision
    level, far inside the 1e-12 contract.
    """
    out = ndtr(np.asarray(z, dtype=float))
    return float(out) if out.ndim == 0 else out


def std_normal_quantile(p):
    """Inverse standard normal CDF for p strictly inside (0, 1).

    Raises
    ------
    ValueError
        If any p lies outside the open unit interval. The partition
        arithmetic never needs the quantile at 0 or 1; infinite endpoints
        are handled by index clamping instead.
    """
    p = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(p)) or np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("quantile requires 0 < p < 1")
    out = ndtri(p)
    return float(out) if out.ndim == 0 else out


def log_density_at(c: CenteringMeasure, x1, x2):
    """Log density of the centering measure; accepts scalars or arrays."""
    d1 = np.asarray(x1, dtype=float) - c.mu1
    d2 = np.asarray(x2, dtype=float) - c.mu2
    return -LOG_TWO_PI - 0.5 * (d1 * d1 + d2 * d2)


def density_at(c: CenteringMeasure, x1, x2):
    """Density (2*pi)^-1 exp(-((x1-mu1)^2 + (x2-mu2)^2)/2)."""
    out = np.exp(log_density_at(c, x1, x2))
    return float(out) if out.ndim == 0 else out


def marginal_cdfs(c: CenteringMeasure, x1, x2):
    """Marginal CDF values (F10(x1), F20(x2)) for reuse across tree levels."""
    p1 = ndtr(np.asarray(x1, dtype=float) - c.mu1)
    p2 = ndtr(np.asarray(x2, dtype=float) - c.mu2)
    return p1, p2


def axis_index_from_cdf(p, m: int):
    """Level-m axis cell (1-based) from a marginal CDF value.

    ceil(2^m * p) clamped to 1..2^m; the scaling by 2^m is exact, so CDF
    values that are exact multiples of 2^-m stay in the left cell, which
    is the half-open-on-the-left set convention.
    """
    t = np.ldexp(np.asarray(p, dtype=float), m)
    idx = np.clip(np.ceil(t), 1.0, float(1 << m))
    return idx.astype(np.int64)


def level_indices(c: CenteringMeasure, x1, x2, m: int):
    """Vectorized level-m cell indices (j, k), both 1-based int arrays."""
    if m < 1:
        raise ValueError("tree level must be >= 1")
    p1, p2 = marginal_cdfs(c, x1, x2)
    return axis_index_from_cdf(p1, m), axis_index_from_cdf(p2, m)


def partition_index(c: CenteringMeasure, x1: float, x2: float, m: int) -> PartitionIndex:
    """Level-m partition cell containing the plane point (x1, x2)."""
    j, k = level_indices(c, x1, x2, m)
    return PartitionIndex(m, int(j), int(k))
