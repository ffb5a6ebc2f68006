"""Deterministic partition-controlled sampling of RBF centers and widths.

A vector of positive partition lengths on the unit simplex controls both
where collocation centers sit and how wide their Gaussian kernels are:
partition j of length l_j receives equispaced centers with width
k_sigma * l_j / N, while a partition-independent uniform grid of global
centers (width k_sigma / (k N)) guarantees full-domain coverage however
skewed the partitions become. Everything here is a pure function of the
partition spec and the domain bounds: same inputs, bitwise-same outputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "GLOBAL_TAG",
    "DomainBounds",
    "PartitionSpec1D",
    "PartitionSpec2D",
    "SampledBasis",
    "softmax_lengths",
    "partition_boundaries",
    "sample_1d",
    "sample_2d",
]

# tag value for global (partition-independent) centers; partition centers
# carry their 0-based partition index (flattened block index in 2D)
GLOBAL_TAG = -1

_SIMPLEX_TOL = 1e-12
_DUP_TOL = 1e-12


def _check_lengths(lengths: np.ndarray, label: str) -> np.ndarray:
    lengths = np.asarray(lengths, dtype=float)
    if lengths.ndim != 1 or lengths.size < 1:
        raise ValueError(f"{label} must be a nonempty 1D vector")
    if not np.all(np.isfinite(lengths)) or np.any(lengths <= 0.0):
        raise ValueError(f"{label} must be finite and strictly positive")
    if abs(lengths.sum() - 1.0) > _SIMPLEX_TOL:
        raise ValueError(f"{label} must sum to 1 (got {lengths.sum()!r})")
    return lengths


@dataclass(frozen=True)
class DomainBounds:
    """Axis-aligned box; sampling is defined on the unit box and mapped here."""

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self):
        lower = tuple(float(v) for v in np.atleast_1d(self.lower))
        upper = tuple(float(v) for v in np.atleast_1d(self.upper))
        if len(lower) != len(upper) or not lower:
            raise ValueError("bounds must pair one lower with one upper per axis")
        if any(lo >= hi for lo, hi in zip(lower, upper)):
            raise ValueError("each lower bound must be strictly below its upper bound")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @property
    def lengths(self) -> np.ndarray:
        return np.array(self.upper) - np.array(self.lower)

    @property
    def diagonal(self) -> float:
        return float(np.hypot.reduce(self.lengths)) if self.dimension > 1 else float(self.lengths[0])

    @classmethod
    def unit(cls, dimension: int = 1) -> "DomainBounds":
        return cls(lower=(0.0,) * dimension, upper=(1.0,) * dimension)


@dataclass(frozen=True)
class PartitionSpec1D:
    """Per-partition lengths on the simplex plus resolution and width scale.

    These are the only trainable hyperparameters of the 1D sampler.
    """

    lengths: np.ndarray
    points_per_partition: int
    width_scale: float

    def __post_init__(self):
        lengths = _check_lengths(self.lengths, "lengths")
        lengths.setflags(write=False)
        object.__setattr__(self, "lengths", lengths)
        if int(self.points_per_partition) < 2:
            raise ValueError("points_per_partition must be >= 2")
        object.__setattr__(self, "points_per_partition", int(self.points_per_partition))
        if not np.isfinite(self.width_scale) or self.width_scale <= 0.0:
            raise ValueError("width_scale must be positive")
        object.__setattr__(self, "width_scale", float(self.width_scale))

    @property
    def k(self) -> int:
        return self.lengths.size


@dataclass(frozen=True)
class PartitionSpec2D:
    """Tensor-product partition: independent simplex vectors per axis."""

    lengths_x: np.ndarray
    lengths_y: np.ndarray
    n_x: int
    n_y: int
    width_scale: float

    def __post_init__(self):
        lx = _check_lengths(self.lengths_x, "lengths_x")
        ly = _check_lengths(self.lengths_y, "lengths_y")
        lx.setflags(write=False)
        ly.setflags(write=False)
        object.__setattr__(self, "lengths_x", lx)
        object.__setattr__(self, "lengths_y", ly)
        if int(self.n_x) < 2 or int(self.n_y) < 2:
            raise ValueError("per-block resolutions must be >= 2")
        object.__setattr__(self, "n_x", int(self.n_x))
        object.__setattr__(self, "n_y", int(self.n_y))
        if not np.isfinite(self.width_scale) or self.width_scale <= 0.0:
            raise ValueError("width_scale must be positive")
        object.__setattr__(self, "width_scale", float(self.width_scale))

    @property
    def k_x(self) -> int:
        return self.lengths_x.size

    @property
    def k_y(self) -> int:
        return self.lengths_y.size


@dataclass(frozen=True)
class SampledBasis:
    """Centers with per-center Gaussian widths, in domain units.

    `centers` is (n,) in 1D or (n, 2) in 2D; `tags` holds the partition
    index per center, with GLOBAL_TAG marking coverage-grid centers.
    """

    centers: np.ndarray
    widths: np.ndarray
    tags: np.ndarray

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=float)
        widths = np.asarray(self.widths, dtype=float)
        tags = np.asarray(self.tags, dtype=np.int64)
        n = centers.shape[0]
        if widths.shape != (n,) or tags.shape != (n,):
            raise ValueError("centers, widths, and tags must have matching lengths")
        if np.any(widths <= 0.0):
            raise ValueError("all widths must be positive")
        for arr in (centers, widths, tags):
            arr.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "widths", widths)
        object.__setattr__(self, "tags", tags)

    @property
    def size(self) -> int:
        return self.centers.shape[0]

    @property
    def dimension(self) -> int:
        return 1 if self.centers.ndim == 1 else self.centers.shape[1]

    @property
    def is_global(self) -> np.ndarray:
        return self.tags == GLOBAL_TAG

    def subset(self, mask: np.ndarray) -> "SampledBasis":
        """Row subset preserving order (used by geometry clipping)."""
        return SampledBasis(self.centers[mask], self.widths[mask], self.tags[mask])


def softmax_lengths(logits) -> np.ndarray:
    """Map unconstrained logits to the open simplex (positive, sums to 1).

    Invariant under adding a constant to all logits; stabilized by
    subtracting the max logit before exponentiation.
    """
    logits = np.asarray(logits, dtype=float)
    if logits.ndim != 1 or logits.size < 1:
        raise ValueError("logits must be a nonempty 1D vector")
    if not np.all(np.isfinite(logits)):
        raise ValueError("logits must be finite")
    z = np.exp(logits - logits.max())
    return z / z.sum()


def partition_boundaries(lengths) -> np.ndarray:
    """Prefix sums of the lengths: 0 = x_0 < x_1 < ... < x_k = 1."""
    lengths = _check_lengths(np.asarray(lengths, dtype=float), "lengths")
    out = np.empty(lengths.size + 1)
    out[0] = 0.0
    np.cumsum(lengths, out=out[1:])
    return out


def _dedup_keep_first(values: np.ndarray) -> np.ndarray:
    """Mask keeping the first of any run of near-identical sorted values."""
    keep = np.ones(values.size, dtype=bool)
    keep[1:] = np.diff(values) >= _DUP_TOL
    return keep


def sample_1d(spec: PartitionSpec1D, bounds: DomainBounds) -> SampledBasis:
    """Sample partition and global centers with their widths on `bounds`.

    Partition j contributes the N+1 equispaced points x_{j-1} + (m/N) l_j,
    m = 0..N, with exact duplicates at interior partition boundaries removed
    (kN + 1 unique unit-interval points survive, each keeping the width of
    the first partition that produced it). Global centers sit at r/(kN+1),
    r = 1..kN, and never participate in duplicate removal.
    """
    if bounds.dimension != 1:
        raise ValueError("sample_1d requires 1D bounds")
    n = spec.points_per_partition
    k = spec.k
    edges = partition_boundaries(spec.lengths)

    # partition-aligned centers, then dedup at shared interior boundaries
    offsets = np.arange(n + 1) / n
    pts = (edges[:-1, None] + offsets[None, :] * spec.lengths[:, None]).ravel()
    tags = np.repeat(np.arange(k), n + 1)
    keep = _dedup_keep_first(pts)
    part_pts = pts[keep]
    part_tags = tags[keep]
    part_widths = spec.width_scale * spec.lengths[part_tags] / n

    kn = k * n
    glob_pts = np.arange(1, kn + 1) / (kn + 1)
    glob_widths = np.full(kn, spec.width_scale / kn)

    lo, length = bounds.lower[0], float(bounds.lengths[0])
    centers = lo + length * np.concatenate([part_pts, glob_pts])
    widths = length * np.concatenate([part_widths, glob_widths])
    all_tags = np.concatenate([part_tags, np.full(kn, GLOBAL_TAG)])
    return SampledBasis(centers, widths, all_tags)


def sample_2d(spec: PartitionSpec2D, bounds: DomainBounds) -> SampledBasis:
    """Tensor-product sampling on a 2D box.

    Block (i, j) receives a cell-centered N_x x N_y grid (spacings
    l_x_i/N_x by l_y_j/N_y), so adjacent blocks never share edge points and
    the realized partition count is exactly k_x N_x k_y N_y; a uniqueness
    check guards the construction. Each block's isotropic width is
    k_sigma * sqrt(dx * dy). The global grid is strictly interior and
    uniform with matching cardinality k_x N_x x k_y N_y.
    """
    if bounds.dimension != 2:
        raise ValueError("sample_2d requires 2D bounds")
    nx, ny = spec.n_x, spec.n_y
    ex = partition_boundaries(spec.lengths_x)
    ey = partition_boundaries(spec.lengths_y)

    # per-axis cell-centered coordinates, one row of nx (ny) per partition
    xs = (ex[:-1, None] + (np.arange(nx) + 0.5)[None, :] / nx * spec.lengths_x[:, None]).ravel()
    ys = (ey[:-1, None] + (np.arange(ny) + 0.5)[None, :] / ny * spec.lengths_y[:, None]).ravel()
    x_block = np.repeat(np.arange(spec.k_x), nx)
    y_block = np.repeat(np.arange(spec.k_y), ny)
    if np.any(np.diff(xs) < _DUP_TOL) or np.any(np.diff(ys) < _DUP_TOL):
        raise ValueError("duplicate partition coordinates; lengths too small for resolution")

    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    part_pts = np.column_stack([gx.ravel(), gy.ravel()])
    # flattened block index i * k_y + j as the partition tag
    bi, bj = np.meshgrid(x_block, y_block, indexing="ij")
    part_tags = (bi * spec.k_y + bj).ravel()
    dx = spec.lengths_x[bi.ravel()] / nx
    dy = spec.lengths_y[bj.ravel()] / ny
    part_widths = spec.width_scale * np.sqrt(dx * dy)

    mx, my = spec.k_x * nx, spec.k_y * ny
    ux = np.arange(1, mx + 1) / (mx + 1)
    uy = np.arange(1, my + 1) / (my + 1)
    ggx, ggy = np.meshgrid(ux, uy, indexing="ij")
    glob_pts = np.column_stack([ggx.ravel(), ggy.ravel()])
    glob_widths = np.full(glob_pts.shape[0], spec.width_scale * np.sqrt(1.0 / (mx * my)))

    lo = np.array(bounds.lower)
    lengths = bounds.lengths
    width_scale = float(np.sqrt(lengths[0] * lengths[1]))
    centers = lo + lengths * np.vstack([part_pts, glob_pts])
    widths = width_scale * np.concatenate([part_widths, glob_widths])
    tags = np.concatenate([part_tags, np.full(glob_pts.shape[0], GLOBAL_TAG)])
    return SampledBasis(centers, widths, tags)
