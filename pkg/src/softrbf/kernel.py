"""Gaussian RBF evaluation and exact partial derivatives up to total order 4.

Derivatives use the Hermite closed form

    d^n/dx^n exp(-(x-c)^2 / (2 sigma^2))
        = (-1/(sigma sqrt(2)))^n H_n(t) exp(-t^2),   t = (x-c)/(sigma sqrt(2)),

with the physicists' Hermite polynomials hard-coded through H_4 (the
biharmonic operator caps the required order). All functions broadcast over
numpy arrays and are pure, so they are safe to call concurrently.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "MAX_ORDER",
    "gauss_deriv_1d",
    "gauss_partial_2d",
    "fourier_magnitude",
    "check_multi_index",
    "deriv_matrices_1d",
    "partial_matrices_2d",
]

MAX_ORDER = 4

# exp(z) underflows to denormals below ~ -708; tiny sigma would otherwise
# drag large assemblies through denormal arithmetic
_UNDERFLOW_EXPONENT = -700.0

_SQRT2 = np.sqrt(2.0)


def _hermite(n: int, t):
    """Physicists' Hermite polynomial H_n(t), n <= 4."""
    if n == 0:
        return np.ones_like(t)
    if n == 1:
        return 2.0 * t
    t2 = t * t
    if n == 2:
        return 4.0 * t2 - 2.0
    if n == 3:
        return (8.0 * t2 - 12.0) * t
    if n == 4:
        return (16.0 * t2 - 48.0) * t2 + 12.0
    raise ValueError(f"derivative order {n} not supported (max {MAX_ORDER})")


def _safe_exp(z):
    """exp(z) with hard zero below the underflow cutoff."""
    z = np.asarray(z, dtype=float)
    out = np.zeros_like(z)
    mask = z > _UNDERFLOW_EXPONENT
    np.exp(z, where=mask, out=out)
    return out


def gauss_deriv_1d(x, center, width, order: int = 0):
    """n-th derivative of exp(-(x-c)^2/(2 sigma^2)) with respect to x.

    Parameters
    ----------
    x, center, width : array_like
        Broadcast together; `width` must be positive.
    order : int
        Derivative order, 0 <= order <= 4.

    Returns
    -------
    ndarray or float
        Derivative values, same broadcast shape as the inputs.
    """
    if not 0 <= order <= MAX_ORDER:
        raise ValueError(f"derivative order {order} not supported (max {MAX_ORDER})")
    width = np.asarray(width, dtype=float)
    if np.any(width <= 0.0):
        raise ValueError("Gaussian width must be positive")
    x = np.asarray(x, dtype=float)
    center = np.asarray(center, dtype=float)

    t = (x - center) / (width * _SQRT2)
    val = _safe_exp(-t * t)
    if order == 0:
        if val.ndim == 0:
            return float(val)
        return val
    scale = (-1.0 / (width * _SQRT2)) ** order
    out = scale * _hermite(order, t) * val
    if out.ndim == 0:
        return float(out)
    return out


def check_multi_index(alpha, dimension: int) -> tuple[int, ...]:
    """Validate a derivative multi-index: per-axis orders, total <= 4."""
    alpha = tuple(int(a) for a in np.atleast_1d(alpha))
    if len(alpha) != dimension:
        raise ValueError(f"multi-index {alpha} does not match dimension {dimension}")
    if any(a < 0 for a in alpha):
        raise ValueError(f"multi-index {alpha} has negative orders")
    if sum(alpha) > MAX_ORDER:
        raise ValueError(f"total derivative order {sum(alpha)} exceeds {MAX_ORDER}")
    return alpha


def gauss_partial_2d(x, y, center_x, center_y, width, alpha):
    """Mixed partial of the isotropic 2D Gaussian, separable in x and y.

    `alpha` is the per-axis derivative multi-index (a_x, a_y) with
    a_x + a_y <= 4. Inputs broadcast like in :func:`gauss_deriv_1d`.
    """
    ax, ay = check_multi_index(alpha, 2)
    return gauss_deriv_1d(x, center_x, width, ax) * gauss_deriv_1d(y, center_y, width, ay)


_ROW_CHUNK = 1024


def deriv_matrices_1d(x, centers, widths, orders):
    """Dense (len(x), len(centers)) derivative matrices, one per order.

    Shares the scaled offsets and the exponential across all requested
    orders, chunked over rows to bound peak memory. Entries equal
    gauss_deriv_1d(x_i, c_j, sigma_j, order) exactly (same operations).
    """
    x = np.asarray(x, dtype=float).ravel()
    centers = np.asarray(centers, dtype=float).ravel()
    widths = np.asarray(widths, dtype=float).ravel()
    if np.any(widths <= 0.0):
        raise ValueError("Gaussian width must be positive")
    orders = [int(n) for n in orders]
    for n in orders:
        if not 0 <= n <= MAX_ORDER:
            raise ValueError(f"derivative order {n} not supported (max {MAX_ORDER})")
    scales = {n: (-1.0 / (widths * _SQRT2)) ** n for n in set(orders) if n > 0}
    outs = [np.empty((x.size, centers.size)) for _ in orders]
    inv = 1.0 / (widths * _SQRT2)
    for lo in range(0, x.size, _ROW_CHUNK):
        hi = min(lo + _ROW_CHUNK, x.size)
        t = (x[lo:hi, None] - centers[None, :]) * inv[None, :]
        val = _safe_exp(-t * t)
        for out, n in zip(outs, orders):
            if n == 0:
                out[lo:hi] = val
            else:
                out[lo:hi] = scales[n][None, :] * _hermite(n, t) * val
    return outs


def partial_matrices_2d(points, centers, widths, alphas):
    """Dense (len(points), len(centers)) mixed-partial matrices, one per alpha.

    `points` and `centers` are (m, 2) and (n, 2); widths are isotropic per
    center. The x and y exponentials are shared across all multi-indices.
    """
    points = np.asarray(points, dtype=float)
    centers = np.asarray(centers, dtype=float)
    widths = np.asarray(widths, dtype=float).ravel()
    if np.any(widths <= 0.0):
        raise ValueError("Gaussian width must be positive")
    alphas = [check_multi_index(a, 2) for a in alphas]
    inv = 1.0 / (widths * _SQRT2)
    scales = {}
    for ax, ay in alphas:
        for n in (ax, ay):
            if n > 0 and n not in scales:
                scales[n] = (-1.0 / (widths * _SQRT2)) ** n
    outs = [np.empty((points.shape[0], centers.shape[0])) for _ in alphas]
    for lo in range(0, points.shape[0], _ROW_CHUNK):
        hi = min(lo + _ROW_CHUNK, points.shape[0])
        tx = (points[lo:hi, 0:1] - centers[None, :, 0]) * inv[None, :]
        ty = (points[lo:hi, 1:2] - centers[None, :, 1]) * inv[None, :]
        ex = _safe_exp(-tx * tx)
        ey = _safe_exp(-ty * ty)
        for out, (ax, ay) in zip(outs, alphas):
            fx = ex if ax == 0 else scales[ax][None, :] * _hermite(ax, tx) * ex
            fy = ey if ay == 0 else scales[ay][None, :] * _hermite(ay, ty) * ey
            out[lo:hi] = fx * fy
    return outs


def fourier_magnitude(width, omega):
    """|phi_hat_sigma(omega)| = exp(-(sigma*omega)^2 / 2) for the unit-peak Gaussian.

    Monotone decreasing in |omega| and in sigma; equals 1 at omega = 0.
    """
    width = np.asarray(width, dtype=float)
    if np.any(width <= 0.0):
        raise ValueError("Gaussian width must be positive")
    omega = np.asarray(omega, dtype=float)
    out = _safe_exp(-0.5 * (width * omega) ** 2)
    if out.ndim == 0:
        return float(out)
    return out
