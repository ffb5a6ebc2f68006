"""Weighted overdetermined least-squares assembly: H c = r.

PDE rows come first (one per collocation point, scaled by the SDF weight
when the problem carries one), then constraint rows in declaration order
(scaled by their w_BC). Weights are multiplied into both the matrix row and
the right-hand-side entry, so rescaling all rows by a common factor leaves
the least-squares solution unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import pde_weight
from .kernel import deriv_matrices_1d, partial_matrices_2d
from .problem import ProblemSpec
from .sampling import SampledBasis

__all__ = ["AssemblyError", "LeastSquaresSystem", "assemble", "operator_rows", "constraint_row"]


class AssemblyError(RuntimeError):
    """Non-finite matrix or right-hand-side entry during assembly."""


@dataclass(frozen=True)
class LeastSquaresSystem:
    """Dense system with per-row provenance.

    `row_kind` is "pde" or "constraint"; `row_index` is the collocation point
    index or the constraint index; `row_weight` is the already-applied scale.
    """

    matrix: np.ndarray
    rhs: np.ndarray
    row_kind: tuple[str, ...]
    row_index: np.ndarray
    row_weight: np.ndarray

    @property
    def n_rows(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_cols(self) -> int:
        return self.matrix.shape[1]

    def dump(self, path) -> None:
        """Matrix-market-style text dump for debugging."""
        with open(path, "w") as fh:
            fh.write("%%MatrixMarket matrix array real general\n")
            fh.write(f"% rhs appended as final column\n{self.n_rows} {self.n_cols + 1}\n")
            stacked = np.column_stack([self.matrix, self.rhs])
            np.savetxt(fh, stacked.T.ravel()[:, None], fmt="%.17g")


def operator_rows(problem: ProblemSpec, basis: SampledBasis, points: np.ndarray) -> np.ndarray:
    """Unweighted PDE rows: entry (p, i) applies the operator to basis i at point p."""
    points = np.asarray(points, dtype=float)
    op = problem.operator
    if problem.dimension == 1:
        mats = deriv_matrices_1d(points, basis.centers, basis.widths, [t.derivative[0] for t in op.terms])
    else:
        mats = partial_matrices_2d(points, basis.centers, basis.widths, [t.derivative for t in op.terms])
    rows = np.zeros((points.shape[0], basis.size))
    for term, mat in zip(op.terms, mats):
        rows += term.coeff_at(points)[:, None] * mat
    return rows


def constraint_row(problem: ProblemSpec, basis: SampledBasis, constraint) -> np.ndarray:
    """Unweighted single constraint row over the basis."""
    point = np.asarray(constraint.point, dtype=float)
    if problem.dimension == 1:
        order = 0 if constraint.kind == "value" else constraint.derivative[0]
        (row,) = deriv_matrices_1d(point, basis.centers, basis.widths, [order])
        return row[0]
    pts = point.reshape(1, 2)
    if constraint.kind == "value":
        (row,) = partial_matrices_2d(pts, basis.centers, basis.widths, [(0, 0)])
        return row[0]
    if constraint.kind == "derivative":
        (row,) = partial_matrices_2d(pts, basis.centers, basis.widths, [constraint.derivative])
        return row[0]
    # normal derivative n . grad, outward normal from the SDF
    normal = problem.geometry.outward_normals(pts)[0]
    dx, dy = partial_matrices_2d(pts, basis.centers, basis.widths, [(1, 0), (0, 1)])
    return normal[0] * dx[0] + normal[1] * dy[0]


def pde_row_weights(problem: ProblemSpec, points: np.ndarray) -> np.ndarray:
    """SDF-dependent residual weights (all ones without weighting enabled)."""
    points = np.asarray(points, dtype=float)
    if problem.sdf_weighting is None or problem.geometry is None:
        return np.ones(points.shape[0])
    d = problem.geometry.distance(points)
    if np.any(d < 0.0):
        raise AssemblyError("collocation point outside the geometry (d < 0)")
    return pde_weight(d, problem.sdf_weighting)


def assemble(problem: ProblemSpec, basis: SampledBasis, collocation: np.ndarray | None = None) -> LeastSquaresSystem:
    """Build the weighted system from a problem and sampled basis.

    Collocation defaults to the basis centers themselves; an independent
    point set may be passed for experimentation or validation residuals.
    """
    if basis.size == 0:
        raise AssemblyError("empty basis")
    points = basis.centers if collocation is None else np.asarray(collocation, dtype=float)
    n_pde = points.shape[0]
    n_con = len(problem.constraints)

    weights = pde_row_weights(problem, points)
    H = np.empty((n_pde + n_con, basis.size))
    H[:n_pde] = operator_rows(problem, basis, points) * weights[:, None]
    rhs = np.empty(n_pde + n_con)
    rhs[:n_pde] = problem.source_at(points) * weights

    con_weights = np.empty(n_con)
    for j, con in enumerate(problem.constraints):
        H[n_pde + j] = constraint_row(problem, basis, con) * con.weight
        rhs[n_pde + j] = con.target * con.weight
        con_weights[j] = con.weight

    bad = np.nonzero(~np.isfinite(H).all(axis=1) | ~np.isfinite(rhs))[0]
    if bad.size:
        r = int(bad[0])
        kind = "pde" if r < n_pde else "constraint"
        raise AssemblyError(f"non-finite entries in {kind} row {r if r < n_pde else r - n_pde}")

    return LeastSquaresSystem(
        matrix=H,
        rhs=rhs,
        row_kind=("pde",) * n_pde + ("constraint",) * n_con,
        row_index=np.concatenate([np.arange(n_pde), np.arange(n_con)]),
        row_weight=np.concatenate([weights, con_weights]),
    )
