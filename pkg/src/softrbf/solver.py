"""Dense least-squares solve, solution evaluation, and error metrics."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import LeastSquaresSystem
from .kernel import deriv_matrices_1d, partial_matrices_2d
from .sampling import SampledBasis

__all__ = ["SolverError", "SolveReport", "solve", "evaluate_solution", "error_metrics"]


class SolverError(RuntimeError):
    """Numerically unusable system (rank zero, non-finite factorization)."""


@dataclass(frozen=True)
class SolveReport:
    """Coefficients plus diagnostics of one least-squares solve.

    `solve_seconds` times the factorization and solve only (assembly is
    excluded, matching how solve time is usually reported for ELMs).
    """

    coefficients: np.ndarray
    residual_inf: float
    solve_seconds: float
    method: str
    rank_estimate: int | None = None


def _lstsq(H, r, driver, cond):
    c, _, rank, _ = scipy.linalg.lstsq(H, r, cond=cond, lapack_driver=driver)
    return c, rank


def solve(system: LeastSquaresSystem, method: str = "qr", svd_tol: float = 1e-10) -> SolveReport:
    """Solve min ||H c - r||_2.

    method "qr" uses column-pivoted QR (LAPACK gelsy); "svd_pinv" uses the
    SVD with singular values below svd_tol * sigma_max truncated, returning
    the minimum-norm solution; "auto" tries qr and falls back to svd_pinv if
    the qr solution is non-finite or its relative residual exceeds 1.
    """
    H, r = system.matrix, system.rhs
    if H.shape[0] < 1 or H.shape[1] < 1:
        raise SolverError("empty system")
    if not np.any(np.abs(H) > 0.0):
        raise SolverError("numerically rank-zero system")

    if method not in ("qr", "svd_pinv", "auto"):
        raise ValueError(f"unknown solve method {method!r}")

    t0 = time.perf_counter()
    rank = None
    if method in ("qr", "auto"):
        used = "qr"
        c, _ = _lstsq(H, r, "gelsy", None)
        if method == "auto":
            resid = float(np.abs(H @ c - r).max()) if np.all(np.isfinite(c)) else np.inf
            scale = max(float(np.abs(r).max()), 1e-300)
            if not np.isfinite(resid) or resid / scale > 1.0:
                used = "svd_pinv"
                c, rank = _lstsq(H, r, "gelsd", svd_tol)
    else:
        used = "svd_pinv"
        c, rank = _lstsq(H, r, "gelsd", svd_tol)
    seconds = time.perf_counter() - t0

    if not np.all(np.isfinite(c)):
        raise SolverError("solver produced non-finite coefficients")
    residual_inf = float(np.abs(H @ c - r).max())
    return SolveReport(
        coefficients=c,
        residual_inf=residual_inf,
        solve_seconds=seconds,
        method=used,
        rank_estimate=None if rank is None else int(rank),
    )


def evaluate_solution(basis: SampledBasis, coefficients, points, derivative=None) -> np.ndarray:
    """sum_i c_i * (mixed partial of basis i) at each point.

    `derivative` defaults to plain evaluation; pass an order (1D) or a
    multi-index (2D) for derivatives of the reconstruction.
    """
    c = np.asarray(coefficients, dtype=float)
    if c.shape != (basis.size,):
        raise ValueError("coefficient length must equal the basis size")
    points = np.asarray(points, dtype=float)
    if basis.dimension == 1:
        order = 0 if derivative is None else int(np.atleast_1d(derivative)[0])
        (mat,) = deriv_matrices_1d(points, basis.centers, basis.widths, [order])
    else:
        alpha = (0, 0) if derivative is None else tuple(np.atleast_1d(derivative))
        (mat,) = partial_matrices_2d(points, basis.centers, basis.widths, [alpha])
    return mat @ c


def error_metrics(predicted, exact) -> dict[str, float]:
    """mse, max_abs, and rel_l2 between prediction and reference."""
    predicted = np.asarray(predicted, dtype=float).ravel()
    exact = np.asarray(exact, dtype=float).ravel()
    if predicted.size == 0 or predicted.shape != exact.shape:
        raise ValueError("error_metrics needs matching nonempty vectors")
    diff = predicted - exact
    denom = np.linalg.norm(exact)
    return {
        "mse": float(np.mean(diff**2)),
        "max_abs": float(np.abs(diff).max()),
        "rel_l2": float(np.linalg.norm(diff) / denom) if denom > 0 else float(np.linalg.norm(diff)),
    }
