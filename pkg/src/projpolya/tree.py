"""Finite bivariate branching-probability tree on the quantile partition.

A tree of depth M stores, for each level m = 1..M, a 2^m x 2^m grid of
branching probabilities. Every 2x2 block of siblings sums to one, the
blocks are independent Dirichlet draws, and the probability of a cell is
the product of branching probabilities along its ancestor chain. Spreading
the residual mass inside the deepest cells according to the centering
density gives an absolutely continuous plane density.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.special import gammaln, ndtri

from .centering import (
    CenteringMeasure,
    PartitionIndex,
    axis_index_from_cdf,
    log_density_at,
    marginal_cdfs,
)

__all__ = [
    "TreeParams",
    "BranchingTree",
    "CountTree",
    "rho",
    "uniform_tree",
    "sample_prior_tree",
    "sample_posterior_tree",
    "set_probability",
    "log_joint_density",
    "joint_density",
    "count_data",
    "posterior_dirichlet_params",
    "dirichlet_log_density",
    "child_quadruples",
    "grid_from_quadruples",
    "sample_plane_points",
]

LOG_FOUR = math.log(4.0)

# Floor applied to raw gamma variates so a sibling block can never
# normalize to 0/0 when a tiny shape parameter underflows.
_GAMMA_FLOOR = 1e-300


@dataclass(frozen=True)
class TreeParams:
    """Depth, precision, and level-scaling exponent of the tree prior."""

    M: int = 4
    alpha: float = 1.0
    delta: float = 1.1

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("depth M must be >= 1")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError("precision alpha must be positive and finite")
        if not (self.delta > 1 and math.isfinite(self.delta)):
            raise ValueError("delta must exceed 1")


def rho(m: int, delta: float) -> float:
    """Level scaling m**delta of the Dirichlet parameters."""
    if m < 1:
        raise ValueError("level must be >= 1")
    return float(m) ** delta


@dataclass
class BranchingTree:
    """Per-level grids of branching probabilities.

    ``levels[m - 1]`` is the (2^m, 2^m) grid of level-m values. The four
    siblings of every parent (each 2x2 block, including the root's level-1
    block) sum to one.
    """

    levels: list

    @property
    def M(self) -> int:
        return len(self.levels)

    def copy(self) -> "BranchingTree":
        return BranchingTree([lv.copy() for lv in self.levels])

    def validate(self, tol: float = 1e-12) -> None:
        """Raise if any probability leaves [0,1] or a sibling block drifts off 1."""
        for m, grid in enumerate(self.levels, start=1):
            size = 1 << m
            if grid.shape != (size, size):
                raise ValueError(f"level {m} grid has shape {grid.shape}")
            if np.any(grid < 0.0) or np.any(grid > 1.0):
                raise ValueError(f"level {m} probabilities leave [0, 1]")
            sums = child_quadruples(grid).sum(axis=-1)
            if np.any(np.abs(sums - 1.0) > tol):
                raise ValueError(f"level {m} sibling blocks do not sum to one")


@dataclass
class CountTree:
    """Per-level grids of data counts; same layout as BranchingTree."""

    levels: list
    n: int

    @property
    def M(self) -> int:
        return len(self.levels)

    @classmethod
    def zeros(cls, M: int) -> "CountTree":
        return cls([np.zeros((1 << m, 1 << m), dtype=np.int64) for m in range(1, M + 1)], 0)


def child_quadruples(child_grid: np.ndarray) -> np.ndarray:
    """Group a child-level grid into per-parent sibling quadruples.

    Returns shape (2^m, 2^m, 4) for a (2^{m+1}, 2^{m+1}) input, with the
    last axis in the canonical (2j-1,2k-1), (2j-1,2k), (2j,2k-1), (2j,2k)
    order.
    """
    half = child_grid.shape[0] // 2
    out = np.empty((half, half, 4), dtype=child_grid.dtype)
    out[..., 0] = child_grid[0::2, 0::2]
    out[..., 1] = child_grid[0::2, 1::2]
    out[..., 2] = child_grid[1::2, 0::2]
    out[..., 3] = child_grid[1::2, 1::2]
    return out


def grid_from_quadruples(quads: np.ndarray) -> np.ndarray:
    """Inverse of :func:`child_quadruples`."""
    half = quads.shape[0]
    grid = np.empty((2 * half, 2 * half), dtype=quads.dtype)
    grid[0::2, 0::2] = quads[..., 0]
    grid[0::2, 1::2] = quads[..., 1]
    grid[1::2, 0::2] = quads[..., 2]
    grid[1::2, 1::2] = quads[..., 3]
    return grid


def uniform_tree(M: int) -> BranchingTree:
    """Tree with every branching probability equal to 1/4."""
    if M < 1:
        raise ValueError("depth M must be >= 1")
    return BranchingTree([np.full((1 << m, 1 << m), 0.25) for m in range(1, M + 1)])


def posterior_dirichlet_params(counts: CountTree, p: TreeParams) -> list:
    """Per-parent Dirichlet parameters alpha*rho(m+1) + child counts.

    Element m (parent levels 0..M-1) has shape (2^m, 2^m, 4) in the
    canonical sibling order; with zero counts this is the prior.
    """
    if counts.M != p.M:
        raise ValueError("count tree depth does not match tree params")
    out = []
    for m in range(p.M):
        a = p.alpha * rho(m + 1, p.delta)
        out.append(a + child_quadruples(counts.levels[m].astype(float)))
    return out


def sample_posterior_tree(counts: CountTree, p: TreeParams, rng: np.random.Generator) -> BranchingTree:
    """Draw every sibling quadruple from its conjugate Dirichlet update.

    Each quadruple is four independent gamma variates normalized to sum
    to one, vectorized over all parents of a level.
    """
    levels = []
    for quads in posterior_dirichlet_params(counts, p):
        g = np.maximum(rng.standard_gamma(quads), _GAMMA_FLOOR)
        g /= g.sum(axis=-1, keepdims=True)
        levels.append(grid_from_quadruples(g))
    return BranchingTree(levels)


def sample_prior_tree(p: TreeParams, rng: np.random.Generator) -> BranchingTree:
    """Draw a tree from the prior (symmetric Dirichlet at every parent)."""
    return sample_posterior_tree(CountTree.zeros(p.M), p, rng)


def set_probability(t: BranchingTree, idx: PartitionIndex) -> float:
    """Probability of cell idx: product of Y along its ancestor chain."""
    if idx.m > t.M:
        raise ValueError(f"level {idx.m} exceeds tree depth {t.M}")
    j, k = idx.j, idx.k
    prob = 1.0
    for m in range(idx.m, 0, -1):
        prob *= t.levels[m - 1][j - 1, k - 1]
        j = (j + 1) // 2
        k = (k + 1) // 2
    return prob


def log_joint_density(t: BranchingTree, c: CenteringMeasure, x1, x2):
    """Log plane density: sum of log branching probabilities along the
    cell chain of (x1, x2) plus M*log(4) plus the log centering density.

    Vectorized over arrays; all accumulation stays in log space so deep
    trees cannot underflow.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    p1, p2 = marginal_cdfs(c, x1, x2)
    out = log_density_at(c, x1, x2) + t.M * LOG_FOUR
    with np.errstate(divide="ignore"):
        for m in range(1, t.M + 1):
            j = axis_index_from_cdf(p1, m) - 1
            k = axis_index_from_cdf(p2, m) - 1
            out = out + np.log(t.levels[m - 1][j, k])
    return out


def joint_density(t: BranchingTree, c: CenteringMeasure, x1, x2):
    """Plane density of the tree-modulated centering measure."""
    out = np.exp(log_joint_density(t, c, x1, x2))
    return float(out) if out.ndim == 0 else out


def count_data(c: CenteringMeasure, points, M: int) -> CountTree:
    """Count data points per partition cell at every level 1..M."""
    pts = np.asarray(points, dtype=float).reshape(-1, 2)
    p1, p2 = marginal_cdfs(c, pts[:, 0], pts[:, 1])
    levels = []
    for m in range(1, M + 1):
        size = 1 << m
        j = axis_index_from_cdf(p1, m) - 1
        k = axis_index_from_cdf(p2, m) - 1
        flat = np.bincount(j * size + k, minlength=size * size)
        levels.append(flat.reshape(size, size).astype(np.int64))
    return CountTree(levels, pts.shape[0])


def dirichlet_log_density(y, a):
    """Dirichlet log density, vectorized over leading axes of y and a.

    Raises
    ------
    ValueError
        If any component of a is nonpositive, or y is off the open
        simplex by more than 1e-9.
    """
    y = np.asarray(y, dtype=float)
    a = np.asarray(a, dtype=float)
    if np.any(a <= 0.0):
        raise ValueError("Dirichlet parameters must be positive")
    if np.any(y <= 0.0) or np.any(np.abs(y.sum(axis=-1) - 1.0) > 1e-9):
        raise ValueError("y must lie on the open simplex (sum within 1e-9 of 1)")
    ab = np.broadcast_arrays(y, a)[1]
    out = gammaln(ab.sum(axis=-1)) - gammaln(ab).sum(axis=-1) + ((ab - 1.0) * np.log(y)).sum(axis=-1)
    return float(out) if out.ndim == 0 else out


def sample_plane_points(t: BranchingTree, c: CenteringMeasure, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draw n plane points from the finite-tree density.

    Walks the cell chain with the branching probabilities, then samples
    inside the terminal cell by inverting the marginal CDFs on the cell's
    quantile range. Used for prior-run correctness checks.
    """
    j = np.ones(n, dtype=np.int64)
    k = np.ones(n, dtype=np.int64)
    for m in range(1, t.M + 1):
        quads = child_quadruples(t.levels[m - 1])
        probs = quads[j - 1, k - 1]
        cum = np.cumsum(probs, axis=-1)
        u = rng.random(n)
        choice = (u[:, None] > cum).sum(axis=1)
        j = 2 * j - 1 + (choice >= 2)
        k = 2 * k - 1 + (choice % 2)
    size = 1 << t.M
    eps = 1e-12
    u1 = np.clip(rng.uniform((j - 1) / size, j / size), eps, 1 - eps)
    u2 = np.clip(rng.uniform((k - 1) / size, k / size), eps, 1 - eps)
    return np.column_stack([c.mu1 + ndtri(u1), c.mu2 + ndtri(u2)])


def with_alpha(p: TreeParams, alpha: float) -> TreeParams:
    """Copy of the params with a different precision."""
    return replace(p, alpha=alpha)
