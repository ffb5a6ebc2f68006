"""Outer Bayesian optimization of partition lengths.

The search lives in logit space: a candidate vector z of k-1 free logits per
axis (the last logit pinned at 0) maps through softmax onto the open
simplex, so every evaluated candidate is a valid partition by construction.
The inner solve is deterministic, so the objective is noiseless; the GP
models log J with a squared-exponential kernel whose hyperparameters are
refit by marginal likelihood over a small grid each iteration, and new
candidates maximize expected improvement over a seeded quasi-random batch.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from .assembly import AssemblyError, assemble, constraint_row, operator_rows, pde_row_weights
from .problem import ProblemSpec
from .sampling import PartitionSpec1D, PartitionSpec2D, sample_1d, sample_2d, softmax_lengths
from .solver import SolverError, solve

__all__ = [
    "OptimizationError",
    "ValidationObjective",
    "GpSurrogate",
    "BoTrace",
    "objective_eval",
    "gp_posterior",
    "expected_improvement",
    "optimize",
]

_EVAL_CHUNK = 2048
_CANDIDATES = 2048
_INITIAL_DESIGN = 5


class OptimizationError(RuntimeError):
    """Every objective evaluation failed (J = +inf throughout)."""


@dataclass(frozen=True)
class ValidationObjective:
    """Inner-solve-then-validate objective J over partition lengths.

    J is the infinity norm of the weighted residual rows evaluated on an
    independent validation grid, constraint rows included. Validation points
    that collide with a candidate's collocation centers (within 1e-12) are
    dropped for that evaluation to keep the grids disjoint.
    """

    problem: ProblemSpec
    validation_points: np.ndarray
    points_per_partition: int
    width_scale: float
    method: str = "qr"
    svd_tol: float = 1e-10

    def partition_from_lengths(self, lengths_per_axis):
        if self.problem.dimension == 1:
            (lengths,) = lengths_per_axis
            return PartitionSpec1D(lengths, self.points_per_partition, self.width_scale)
        lx, ly = lengths_per_axis
        return PartitionSpec2D(lx, ly, self.points_per_partition, self.points_per_partition, self.width_scale)

    def sample(self, spec):
        if self.problem.dimension == 1:
            return sample_1d(spec, self.problem.bounds)
        basis = sample_2d(spec, self.problem.bounds)
        if self.problem.geometry is not None:
            from .geometry import clip_centers

            basis = clip_centers(basis, self.problem.geometry)
        return basis


def _distinct_validation_points(points, centers, dimension):
    points = np.asarray(points, dtype=float)
    if dimension == 1:
        collides = np.abs(points[:, None] - centers[None, :]).min(axis=1) < 1e-12
    else:
        collides = np.zeros(points.shape[0], dtype=bool)
        for lo in range(0, points.shape[0], _EVAL_CHUNK):
            hi = min(lo + _EVAL_CHUNK, points.shape[0])
            d = np.abs(points[lo:hi, None, :] - centers[None, :, :]).max(axis=2)
            collides[lo:hi] = d.min(axis=1) < 1e-12
    return points[~collides]


def validation_residual_inf(problem: ProblemSpec, basis, coefficients, points) -> float:
    """Max weighted residual over validation PDE rows and all constraint rows."""
    points = np.asarray(points, dtype=float)
    c = np.asarray(coefficients, dtype=float)
    worst = 0.0
    for lo in range(0, points.shape[0], _EVAL_CHUNK):
        chunk = points[lo : lo + _EVAL_CHUNK]
        rows = operator_rows(problem, basis, chunk)
        w = pde_row_weights(problem, chunk)
        resid = np.abs(w * (rows @ c - problem.source_at(chunk)))
        worst = max(worst, float(resid.max()))
    for con in problem.constraints:
        row = constraint_row(problem, basis, con)
        worst = max(worst, abs(con.weight * (float(row @ c) - con.target)))
    return worst


def logits_to_lengths(z, k: int, dimension: int):
    """Free logits (k-1 per axis, last pinned to 0) to per-axis length vectors."""
    z = np.asarray(z, dtype=float)
    per_axis = k - 1
    if z.shape != (per_axis * dimension,):
        raise ValueError(f"expected {per_axis * dimension} free logits, got {z.shape}")
    out = []
    for ax in range(dimension):
        free = z[ax * per_axis : (ax + 1) * per_axis]
        out.append(softmax_lengths(np.concatenate([free, [0.0]])))
    return out


def objective_eval(logits, objective: ValidationObjective, k: int) -> float:
    """J for one candidate; +inf when the inner solve fails."""
    lengths_per_axis = logits_to_lengths(logits, k, objective.problem.dimension)
    spec = objective.partition_from_lengths(lengths_per_axis)
    basis = objective.sample(spec)
    try:
        system = assemble(objective.problem, basis)
        report = solve(system, method=objective.method, svd_tol=objective.svd_tol)
    except (AssemblyError, SolverError, FloatingPointError):
        return np.inf
    pts = _distinct_validation_points(objective.validation_points, basis.centers, objective.problem.dimension)
    return validation_residual_inf(objective.problem, basis, report.coefficients, pts)


# ----------------------------------------------------------------------------
# Gaussian-process surrogate
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class GpSurrogate:
    """Exact GP regression with a squared-exponential kernel."""

    inputs: np.ndarray        # (n, d) observed logit vectors
    targets: np.ndarray       # (n,) log-transformed objectives
    length_scale: float
    signal_var: float
    noise_var: float = 1e-10

    def _kernel(self, A, B):
        d2 = ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=2)
        return self.signal_var * np.exp(-0.5 * d2 / self.length_scale**2)

    def _chol(self):
        K = self._kernel(self.inputs, self.inputs)
        n = K.shape[0]
        jitter = 0.0
        for _ in range(8):
            try:
                return np.linalg.cholesky(K + (self.noise_var + jitter) * np.eye(n))
            except np.linalg.LinAlgError:
                jitter = max(jitter * 10.0, 1e-12 * max(self.signal_var, 1.0))
        raise SolverError("GP kernel matrix is not positive definite even after jitter")

    def log_marginal_likelihood(self) -> float:
        L = self._chol()
        y = self.targets - self.targets.mean()
        alpha = np.linalg.solve(L.T, np.linalg.solve(L, y))
        return float(-0.5 * y @ alpha - np.log(np.diag(L)).sum() - 0.5 * y.size * np.log(2 * np.pi))


def gp_posterior(surrogate: GpSurrogate, query) -> tuple[np.ndarray, np.ndarray]:
    """Posterior mean and variance at query points (m, d)."""
    if surrogate.inputs.shape[0] < 1:
        raise ValueError("GP posterior needs at least one observation")
    query = np.atleast_2d(np.asarray(query, dtype=float))
    L = surrogate._chol()
    mean_shift = surrogate.targets.mean()
    y = surrogate.targets - mean_shift
    alpha = np.linalg.solve(L.T, np.linalg.solve(L, y))
    Ks = surrogate._kernel(surrogate.inputs, query)
    mean = Ks.T @ alpha + mean_shift
    v = np.linalg.solve(L, Ks)
    var = np.maximum(surrogate.signal_var - (v**2).sum(axis=0), 0.0)
    return mean, var


def fit_gp(inputs, targets, box_width: float, noise_var: float = 1e-10) -> GpSurrogate:
    """Grid-search marginal likelihood over length scale and signal variance."""
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    targets = np.asarray(targets, dtype=float)
    y_var = max(float(np.var(targets)), 1e-12)
    best, best_mll = None, -np.inf
    for ls in np.geomspace(0.05, 2.0, 8) * box_width:
        for sv in (0.5 * y_var, y_var, 2.0 * y_var, 4.0 * y_var):
            gp = GpSurrogate(inputs, targets, length_scale=float(ls), signal_var=float(sv), noise_var=noise_var)
            try:
                mll = gp.log_marginal_likelihood()
            except SolverError:
                continue
            if mll > best_mll:
                best, best_mll = gp, mll
    if best is None:
        raise SolverError("no GP hyperparameters produced a positive-definite kernel")
    return best


def expected_improvement(mean, variance, best_so_far):
    """E[max(0, best - Y)] for Y ~ N(mean, variance); minimization form."""
    mean = np.asarray(mean, dtype=float)
    s = np.sqrt(np.asarray(variance, dtype=float))
    improve = best_so_far - mean
    out = np.where(improve > 0.0, improve, 0.0).astype(float)
    pos = s > 0.0
    if np.any(pos):
        z = np.where(pos, improve / np.where(pos, s, 1.0), 0.0)
        ei = improve * norm.cdf(z) + s * norm.pdf(z)
        out = np.where(pos, ei, out)
    if out.ndim == 0:
        return float(out)
    return out


# ----------------------------------------------------------------------------
# optimization loop
# ----------------------------------------------------------------------------


@dataclass
class BoTrace:
    """Per-iteration evaluation records plus the running incumbent."""

    records: list = field(default_factory=list)  # dicts: iteration, logits, lengths, J, seconds
    best_logits: np.ndarray | None = None
    best_lengths: tuple | None = None
    best_j: float = np.inf

    def append(self, iteration, logits, lengths_per_axis, j, seconds):
        self.records.append(
            {
                "iteration": int(iteration),
                "logits": np.asarray(logits, dtype=float).copy(),
                "lengths": [np.asarray(l).copy() for l in lengths_per_axis],
                "J": float(j),
                "seconds": float(seconds),
            }
        )
        if j < self.best_j:
            self.best_j = float(j)
            self.best_logits = np.asarray(logits, dtype=float).copy()
            self.best_lengths = tuple(np.asarray(l).copy() for l in lengths_per_axis)

    @property
    def incumbent_js(self) -> np.ndarray:
        return np.minimum.accumulate([rec["J"] for rec in self.records])

    def export_csv(self, path) -> None:
        import csv

        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            n_axes = len(self.records[0]["lengths"]) if self.records else 0
            length_cols = []
            for ax in range(n_axes):
                kk = len(self.records[0]["lengths"][ax])
                length_cols += [f"len{ax}_{i}" for i in range(kk)]
            writer.writerow(["iteration", "J", "incumbent_J", "seconds"] + length_cols)
            inc = self.incumbent_js
            for rec, best in zip(self.records, inc):
                row = [rec["iteration"], f"{rec['J']:.17g}", f"{best:.17g}", f"{rec['seconds']:.6f}"]
                for lv in rec["lengths"]:
                    row += [f"{v:.17g}" for v in lv]
                writer.writerow(row)


def _sobol_batch(rng, dim, count, box):
    sampler = qmc.Sobol(d=dim, scramble=True, seed=rng)
    with warnings.catch_warnings():
        # balance warning for non-power-of-two batch sizes is irrelevant here
        warnings.simplefilter("ignore", UserWarning)
        u = sampler.random(count)
    return box[:, 0] + u * (box[:, 1] - box[:, 0])


def optimize(
    objective: ValidationObjective,
    k: int,
    budget: int = 40,
    seed: int = 0,
    logit_box=None,
) -> tuple[tuple, BoTrace]:
    """Minimize J over partition logits with GP + expected improvement.

    Runs an initial design of 5 quasi-random candidates, then sequentially
    evaluates the EI maximizer over 2048 seeded quasi-random candidates per
    iteration. Fully reproducible for a fixed (seed, budget, objective).
    """
    if budget < _INITIAL_DESIGN:
        raise ValueError(f"budget must be at least {_INITIAL_DESIGN}")
    dim = (k - 1) * objective.problem.dimension
    if dim < 1:
        raise ValueError("need at least 2 partitions per axis to optimize")
    if logit_box is None:
        box = np.tile(np.array([-4.0, 4.0]), (dim, 1))
    else:
        box = np.atleast_2d(np.asarray(logit_box, dtype=float))
        if box.shape == (1, 2) and dim > 1:
            box = np.tile(box, (dim, 1))
        if box.shape != (dim, 2):
            raise ValueError(f"logit box must be ({dim}, 2)")

    rng = np.random.default_rng(seed)
    trace = BoTrace()

    def run_candidate(i, z):
        t0 = time.perf_counter()
        j = objective_eval(z, objective, k)
        seconds = time.perf_counter() - t0
        trace.append(i, z, logits_to_lengths(z, k, objective.problem.dimension), j, seconds)

    init = _sobol_batch(rng, dim, _INITIAL_DESIGN, box)
    for i, z in enumerate(init):
        run_candidate(i, z)

    for i in range(_INITIAL_DESIGN, budget):
        finite = [(rec["logits"], rec["J"]) for rec in trace.records if np.isfinite(rec["J"])]
        if not finite:
            run_candidate(i, _sobol_batch(rng, dim, 1, box)[0])
            continue
        X = np.vstack([f[0] for f in finite])
        y = np.log([f[1] for f in finite])
        gp = fit_gp(X, y, box_width=float(np.mean(box[:, 1] - box[:, 0])))
        candidates = _sobol_batch(rng, dim, _CANDIDATES, box)
        mean, var = gp_posterior(gp, candidates)
        ei = expected_improvement(mean, var, float(y.min()))
        run_candidate(i, candidates[int(np.argmax(ei))])

    if not np.isfinite(trace.best_j):
        raise OptimizationError("all objective evaluations failed")
    return trace.best_lengths, trace
