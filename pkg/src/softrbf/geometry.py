"""Signed distance fields on gridded irregular domains.

The SDF is built the blunt way: rasterize an inside/outside mask on a
uniform Cartesian grid, interpolate the zero crossings of the implicit
function along grid edges to get a dense cloud of boundary points, and
assign every node its exact Euclidean distance to that cloud (nearest
neighbor via a KD-tree), signed positive inside. Accuracy is limited by
the grid spacing, which is all the downstream weighting and clipping need.

Also provides the boundary-distance PDE weight

    w(d) = w_near + (w_far - w_near) * rho(min(1, d / delta))

that relaxes interior-residual enforcement in a thin band near the
boundary, with polynomial-power or quintic-smoothstep ramps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree
from skimage import measure

from .sampling import SampledBasis

__all__ = [
    "GeometryError",
    "SdfField",
    "FlowerParams",
    "SdfWeightParams",
    "flower_sdf",
    "sdf_from_implicit",
    "extract_boundary",
    "clip_centers",
    "pde_weight",
]


class GeometryError(RuntimeError):
    """Degenerate geometry: empty clip result or unusable level set."""


@dataclass(frozen=True)
class FlowerParams:
    """Polar flower r(theta) = r0 + a*cos(m*theta) about `center`."""

    center: tuple[float, float] = (0.5, 0.5)
    base_radius: float = 0.28
    amplitude: float = 0.10
    petals: int = 5

    def __post_init__(self):
        if self.base_radius - abs(self.amplitude) <= 0.0:
            raise ValueError("flower boundary degenerates: need r0 - |a| > 0")
        if self.petals < 1:
            raise ValueError("petal count must be a positive integer")

    def radius(self, theta):
        return self.base_radius + self.amplitude * np.cos(self.petals * np.asarray(theta))

    def implicit(self, x, y):
        """Positive inside, zero on the boundary, negative outside."""
        dx = np.asarray(x) - self.center[0]
        dy = np.asarray(y) - self.center[1]
        return self.radius(np.arctan2(dy, dx)) - np.hypot(dx, dy)


@dataclass(frozen=True)
class SdfWeightParams:
    """Near/far weights with a smooth ramp over the transition band delta."""

    w_near: float = 0.05
    w_far: float = 1.0
    delta: float = 0.07 * np.sqrt(2.0)
    power: float = 1.0
    ramp: str = "quintic_smoothstep"  # or "polynomial_power"

    def __post_init__(self):
        if not (0.0 < self.w_near <= self.w_far):
            raise ValueError("need 0 < w_near <= w_far")
        if self.delta <= 0.0 or self.power <= 0.0:
            raise ValueError("delta and power must be positive")
        if self.ramp not in ("quintic_smoothstep", "polynomial_power"):
            raise ValueError(f"unknown ramp kind {self.ramp!r}")


@dataclass(frozen=True)
class SdfField:
    """Gridded signed distances: positive inside, zero on the boundary.

    `values[i, j]` is the distance at node (xs[i], ys[j]); the grid is
    uniform with identical spacing on both axes.
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray
    spacing: float

    def __post_init__(self):
        for arr in (self.xs, self.ys, self.values):
            np.asarray(arr).setflags(write=False)

    @property
    def bbox_diagonal(self) -> float:
        return float(np.hypot(self.xs[-1] - self.xs[0], self.ys[-1] - self.ys[0]))

    def _locate(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        fx = (points[:, 0] - self.xs[0]) / self.spacing
        fy = (points[:, 1] - self.ys[0]) / self.spacing
        ix = np.clip(fx.astype(int), 0, self.xs.size - 2)
        iy = np.clip(fy.astype(int), 0, self.ys.size - 2)
        return ix, iy, fx - ix, fy - iy

    def distance(self, points) -> np.ndarray:
        """Bilinear interpolation of the signed distance at off-grid points."""
        ix, iy, tx, ty = self._locate(points)
        v = self.values
        return (
            v[ix, iy] * (1 - tx) * (1 - ty)
            + v[ix + 1, iy] * tx * (1 - ty)
            + v[ix, iy + 1] * (1 - tx) * ty
            + v[ix + 1, iy + 1] * tx * ty
        )

    def gradient_grids(self) -> tuple[np.ndarray, np.ndarray]:
        """Central-difference gradient of d on the grid (one-sided at edges)."""
        gx, gy = np.gradient(self.values, self.spacing, self.spacing)
        return gx, gy

    def outward_normals(self, points) -> np.ndarray:
        """Unit outward normals -grad(d)/|grad(d)| interpolated at `points`."""
        gx, gy = self.gradient_grids()
        ix, iy, tx, ty = self._locate(points)

        def interp(v):
            return (
                v[ix, iy] * (1 - tx) * (1 - ty)
                + v[ix + 1, iy] * tx * (1 - ty)
                + v[ix, iy + 1] * (1 - tx) * ty
                + v[ix + 1, iy + 1] * tx * ty
            )

        n = -np.column_stack([interp(gx), interp(gy)])
        norms = np.linalg.norm(n, axis=1)
        if np.any(norms <= 0.0):
            raise GeometryError("vanishing SDF gradient; cannot form outward normal")
        return n / norms[:, None]

    def export_csv(self, path) -> None:
        """Dump the grid as (x, y, d) rows for external plotting."""
        gx, gy = np.meshgrid(self.xs, self.ys, indexing="ij")
        data = np.column_stack([gx.ravel(), gy.ravel(), self.values.ravel()])
        np.savetxt(path, data, delimiter=",", header="x,y,d", comments="", fmt="%.17g")


def _edge_crossings(xs, ys, f):
    """Sub-cell zero crossings of the implicit values f along grid edges."""
    pts = []
    # vertical sweeps: sign change between (i, j) and (i+1, j)
    s = f[:-1, :] * f[1:, :]
    ii, jj = np.nonzero(s < 0.0)
    if ii.size:
        frac = f[ii, jj] / (f[ii, jj] - f[ii + 1, jj])
        pts.append(np.column_stack([xs[ii] + frac * (xs[ii + 1] - xs[ii]), ys[jj]]))
    # horizontal sweeps
    s = f[:, :-1] * f[:, 1:]
    ii, jj = np.nonzero(s < 0.0)
    if ii.size:
        frac = f[ii, jj] / (f[ii, jj] - f[ii, jj + 1])
        pts.append(np.column_stack([xs[ii], ys[jj] + frac * (ys[jj + 1] - ys[jj])]))
    # exact zeros are boundary points themselves
    ii, jj = np.nonzero(f == 0.0)
    if ii.size:
        pts.append(np.column_stack([xs[ii], ys[jj]]))
    if not pts:
        raise GeometryError("implicit function has no zero crossing on the grid")
    return np.vstack(pts)


def sdf_from_implicit(implicit, lower=(0.0, 0.0), upper=(1.0, 1.0), resolution: int = 400) -> SdfField:
    """Signed distance to the zero level set of `implicit` (positive inside).

    The distance at each node is the exact Euclidean distance to the set of
    linearly interpolated edge crossings, signed by the node's mask value.
    """
    if resolution < 64:
        raise ValueError("resolution must be at least 64")
    span_x = upper[0] - lower[0]
    span_y = upper[1] - lower[1]
    if abs(span_x - span_y) > 1e-12 * max(span_x, span_y):
        raise ValueError("SDF grid requires a square bounding box")
    xs = np.linspace(lower[0], upper[0], resolution)
    ys = np.linspace(lower[1], upper[1], resolution)
    spacing = xs[1] - xs[0]
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    f = np.asarray(implicit(gx, gy), dtype=float)
    boundary = _edge_crossings(xs, ys, f)
    tree = cKDTree(boundary)
    dist, _ = tree.query(np.column_stack([gx.ravel(), gy.ravel()]))
    values = np.where(f >= 0.0, 1.0, -1.0) * dist.reshape(f.shape)
    return SdfField(xs=xs, ys=ys, values=values, spacing=float(spacing))


def flower_sdf(params: FlowerParams, resolution: int = 400) -> SdfField:
    """SDF of the polar flower domain on its unit bounding box."""
    return sdf_from_implicit(params.implicit, resolution=resolution)


def extract_boundary(sdf: SdfField, n_points: int) -> tuple[np.ndarray, np.ndarray]:
    """Arclength-uniform boundary points and outward unit normals.

    Marching squares traces the d = 0 polyline; a single closed loop is
    required. Returns (points (n, 2), normals (n, 2)).
    """
    if n_points < 3:
        raise ValueError("need at least 3 boundary points")
    contours = measure.find_contours(sdf.values, level=0.0)
    if not contours:
        raise GeometryError("SDF has no zero level set")
    closed = [c for c in contours if np.allclose(c[0], c[-1])]
    if len(closed) != 1:
        raise GeometryError(
            f"expected a single closed boundary loop, found {len(closed)} "
            f"closed of {len(contours)} total"
        )
    # contour comes back in fractional (row, col) = (x-index, y-index) units
    loop = closed[0]
    pts = np.column_stack([
        sdf.xs[0] + loop[:, 0] * sdf.spacing,
        sdf.ys[0] + loop[:, 1] * sdf.spacing,
    ])
    seg = np.linalg.norm(np.diff(pts, axis=0), axis=1)
    arc = np.concatenate([[0.0], np.cumsum(seg)])
    total = arc[-1]
    if total <= 0.0:
        raise GeometryError("degenerate zero level set (zero perimeter)")
    targets = np.arange(n_points) * total / n_points
    resampled = np.column_stack([
        np.interp(targets, arc, pts[:, 0]),
        np.interp(targets, arc, pts[:, 1]),
    ])
    return resampled, sdf.outward_normals(resampled)


def clip_centers(basis: SampledBasis, sdf: SdfField) -> SampledBasis:
    """Retain only centers strictly inside the domain (interpolated d > 0)."""
    if basis.dimension != 2:
        raise ValueError("clip_centers expects a 2D basis")
    inside = sdf.distance(basis.centers) > 0.0
    if not np.any(inside):
        raise GeometryError("no centers remain inside the geometry")
    return basis.subset(inside)


def _ramp(s, params: SdfWeightParams):
    if params.ramp == "polynomial_power":
        return s**params.power
    return ((6.0 * s - 15.0) * s + 10.0) * s**3


def pde_weight(d, params: SdfWeightParams):
    """Boundary-distance residual weight, w_near at d=0 ramping to w_far at d>=delta."""
    d = np.asarray(d, dtype=float)
    if np.any(d < 0.0):
        raise ValueError("pde_weight expects nonnegative distances")
    s = np.minimum(1.0, d / params.delta)
    out = params.w_near + (params.w_far - params.w_near) * _ramp(s, params)
    if out.ndim == 0:
        return float(out)
    return out
