"""Random-matrix spectrum estimators for DA Markov operators.

Three matrix builders share one layout: an m x m symmetric matrix with zero
diagonal whose (j, j') entry is (1/m) * k(X_j, X_j') / eta(X_j').

* ``build_erma_matrix``: exact k, normalised pi.
* ``build_mcrma_matrix``: k replaced by an N-sample Monte Carlo average over
  latent draws from row j; normalised pi.
* ``build_mcrma_unnormalized_matrix``: same, with eta = c * pi; the spectrum
  is then rescaled so the leading eigenvalue is 1.

Monte Carlo rows j = 0..m-2 fill the upper triangle; row j draws its latent
batch from ``rng.child(j)`` so the matrix does not depend on thread count.
"""

from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from threadpoolctl import threadpool_limits

from .da_core import ChainTrace, DAModel, estimate_kernel_log_row
from .distributions import RngStream
from .numerics import CapabilityError, InputError, NumericError, symmetric_eigenvalues

MAX_DENSE_M = 20_000
STRONG_EXPONENT = 1.0 + 1e-6


# -----------------------------------------------------------------------------
# Monte Carlo sample-size schedules


@dataclass(frozen=True)
class NSchedule:
    mode: str = "strong_default"
    parameter: float = 0.0

    MODES = ("strong_default", "weak_log", "constant", "custom")

    def __post_init__(self):
        if self.mode not in self.MODES:
            raise InputError(f"unknown schedule mode {self.mode!r}; expected one of {self.MODES}")
        if self.mode in ("constant", "custom") and not self.parameter > 0:
            raise InputError(f"{self.mode} schedule needs a positive parameter")
        if self.mode == "constant" and float(self.parameter) != int(self.parameter):
            raise InputError("constant schedule parameter must be an integer")


def n_schedule(schedule: NSchedule, m: int) -> int:
    """Monte Carlo size N(m).

    strong_default: ceil(m^(1 + 1e-6)); weak_log: max(ceil(log m), 1);
    constant: the parameter; custom: ceil(m^parameter).
    """
    if m < 1:
        raise InputError(f"m must be >= 1, got {m}")
    if schedule.mode == "strong_default":
        n = math.ceil(m**STRONG_EXPONENT)
    elif schedule.mode == "weak_log":
        n = max(math.ceil(math.log(m)), 1)
    elif schedule.mode == "constant":
        n = int(schedule.parameter)
    else:
        n = math.ceil(m ** float(schedule.parameter))
    if not isinstance(n, int) or n < 1:
        raise NumericError(f"schedule {schedule} produced invalid N = {n!r} at m = {m}")
    return n


# -----------------------------------------------------------------------------
# Matrices


@dataclass
class KernelMatrix:
    entries: np.ndarray
    kind: str
    N: int = 0

    KINDS = ("exact", "monte_carlo", "monte_carlo_unnormalized")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise InputError(f"unknown kernel matrix kind {self.kind!r}")

    @property
    def m(self) -> int:
        return self.entries.shape[0]


def _check_m(m):
    if m > MAX_DENSE_M:
        raise InputError(f"m = {m} exceeds the dense-matrix bound {MAX_DENSE_M}")


def resolve_threads(threads=None) -> int:
    if threads in (None, "auto"):
        env = os.environ.get("SPECTRE_DA_THREADS")
        if env:
            return max(1, int(env))
        try:
            import psutil

            return max(1, psutil.cpu_count(logical=False) or 1)
        except ImportError:  # pragma: no cover
            return max(1, os.cpu_count() or 1)
    threads = int(threads)
    if threads < 1:
        raise InputError(f"threads must be >= 1, got {threads}")
    return threads


def _ratio_matrix(m, log_stationary, row_logk, threads):
    """Fill (1/m) exp(log k - log eta(target)) over the upper triangle, then mirror."""
    A = np.zeros((m, m))

    def fill(j):
        if j >= m - 1:
            return
        logk = row_logk(j)
        A[j, j + 1 :] = np.exp(logk - log_stationary[j + 1 :]) / m

    # BLAS stays single-threaded inside rows so results never depend on `threads`
    with threadpool_limits(limits=1, user_api="blas"):
        if threads == 1:
            for j in range(m - 1):
                fill(j)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(fill, range(m - 1)))
    A += A.T
    if not np.all(np.isfinite(A)):
        raise NumericError("kernel matrix has non-finite entries")
    return A


def build_erma_matrix(trace: ChainTrace, model: DAModel) -> KernelMatrix:
    if not model.has_exact_kernel:
        raise CapabilityError(f"ERMA needs a closed-form transition density; {model.model_id} has none")
    if not model.is_normalized:
        raise CapabilityError(f"ERMA needs a normalised stationary density; {model.model_id} is not")
    states = trace.states
    m = len(states)
    _check_m(m)
    log_pi = model.stationary_log_unnormalized_many(states)
    # full rows, then symmetrise: h is symmetric only up to roundoff
    H = np.empty((m, m))
    for j in range(m):
        H[j] = np.exp(model.exact_log_kernel_many(states[j], states) - log_pi) / m
    np.fill_diagonal(H, 0.0)
    H = 0.5 * (H + H.T)
    return KernelMatrix(H, "exact", 0)


def _monte_carlo(trace, model, N, rng, log_stationary, threads):
    if N < 1:
        raise InputError(f"N must be >= 1, got {N}")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    states = trace.states
    m = len(states)
    _check_m(m)
    features = model.target_features(states)

    def row(j):
        try:
            return estimate_kernel_log_row(
                model, states[j], states[j + 1 :], N, stream.child(j), features[j + 1 :]
            )
        except (np.linalg.LinAlgError, ArithmeticError) as exc:
            raise NumericError(f"{model.model_id}: row {j}, N = {N}: {exc}") from exc

    return _ratio_matrix(m, log_stationary, row, resolve_threads(threads))


def build_mcrma_matrix(trace: ChainTrace, model: DAModel, N: int, rng, threads=1) -> KernelMatrix:
    if not model.is_normalized:
        raise CapabilityError(
            f"{model.model_id} has an unnormalised stationary density; "
            "use build_mcrma_unnormalized_matrix"
        )
    log_pi = model.stationary_log_unnormalized_many(trace.states)
    return KernelMatrix(_monte_carlo(trace, model, N, rng, log_pi, threads), "monte_carlo", N)


def build_mcrma_unnormalized_matrix(
    trace: ChainTrace, model: DAModel, N: int, rng, threads=1, log_shift: float = 0.0
) -> KernelMatrix:
    """Monte Carlo matrix with eta in the denominator.

    ``log_shift`` adds a constant to log eta (eta scaled by exp(log_shift));
    the rescaled spectrum is invariant to it.
    """
    log_eta = model.stationary_log_unnormalized_many(trace.states) + log_shift
    return KernelMatrix(
        _monte_carlo(trace, model, N, rng, log_eta, threads), "monte_carlo_unnormalized", N
    )


# -----------------------------------------------------------------------------
# Spectra


@dataclass
class SpectrumEstimate:
    eigenvalues: np.ndarray
    m: int
    N: int
    rescaled: bool
    top_k: int
    full: np.ndarray = field(repr=False, default=None)
    raw_sum: float = 0.0


def spectrum_estimate(
    matrix: KernelMatrix, rescale: bool, top_k: int, allow_rescale_any: bool = False
) -> SpectrumEstimate:
    """Eigenvalues of a kernel matrix, optionally divided by the largest one.

    Rescaling is meant for ``monte_carlo_unnormalized`` matrices; pass
    ``allow_rescale_any=True`` to rescale another kind.
    """
    if top_k < 1:
        raise InputError(f"top_k must be >= 1, got {top_k}")
    if rescale and matrix.kind != "monte_carlo_unnormalized" and not allow_rescale_any:
        raise InputError(f"rescaling a {matrix.kind!r} matrix requires allow_rescale_any=True")
    vals = np.asarray(symmetric_eigenvalues(matrix.entries))
    raw_sum = float(vals.sum())
    if rescale:
        lead = vals[0]
        if not lead > 0:
            raise NumericError(
                f"largest eigenvalue is {lead:.3e} <= 0; cannot rescale (m too small or broken model)"
            )
        vals = vals / lead
        vals[0] = 1.0
    return SpectrumEstimate(
        eigenvalues=vals[:top_k].copy(),
        m=matrix.m,
        N=matrix.N,
        rescaled=rescale,
        top_k=top_k,
        full=vals,
        raw_sum=raw_sum,
    )


@dataclass
class TrajectoryRow:
    m: int
    N: int
    rank: int
    eigenvalue: float
    wall_seconds: float


def eigenvalue_trajectory(
    model: DAModel,
    trace: ChainTrace,
    m_grid,
    schedule: NSchedule,
    rescale: bool,
    top_k: int,
    rng,
    threads=1,
    estimator: str = "mcrma",
) -> list[TrajectoryRow]:
    """Top-k eigenvalues for every prefix length in ``m_grid`` of one trace.

    Each m gets N = n_schedule(schedule, m) and its own stream
    ``rng.child(m)``.  ``estimator="erma"`` uses the exact kernel instead.
    """
    m_grid = [int(m) for m in m_grid]
    if not m_grid or any(b <= a for a, b in zip(m_grid, m_grid[1:])):
        raise InputError(f"m_grid must be strictly increasing and non-empty, got {m_grid}")
    if m_grid[0] < 2:
        raise InputError("m_grid values must be >= 2")
    if m_grid[-1] > trace.m:
        raise InputError(f"m_grid maximum {m_grid[-1]} exceeds trace length {trace.m}")
    stream = rng if isinstance(rng, RngStream) else RngStream(int(rng))
    rows = []
    for m in m_grid:
        start = time.perf_counter()
        sub = trace.prefix(m)
        if estimator == "erma":
            N = 0
            mat = build_erma_matrix(sub, model)
        elif estimator != "mcrma":
            raise InputError(f"unknown estimator {estimator!r}")
        else:
            N = n_schedule(schedule, m)
            if rescale:
                mat = build_mcrma_unnormalized_matrix(sub, model, N, stream.child(m), threads)
            else:
                mat = build_mcrma_matrix(sub, model, N, stream.child(m), threads)
        est = spectrum_estimate(mat, rescale, top_k, allow_rescale_any=True)
        elapsed = time.perf_counter() - start
        for rank, value in enumerate(est.eigenvalues):
            rows.append(TrajectoryRow(m, N, rank, float(value), elapsed))
    return rows
