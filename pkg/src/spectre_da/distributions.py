"""Seeded random streams and the sampling / density primitives used by the models.

Stream derivation
-----------------
An :class:`RngStream` is identified by a 64-bit ``master_seed`` and a tuple
``stream_index`` path.  The generator is ``PCG64(SeedSequence(master_seed,
spawn_key=stream_index))``: ``SeedSequence`` hashes the spawn key into the
entropy pool, so streams with different paths are independent by
construction and a given path always yields the same draws, independent of
which thread (or how many threads) consumes it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba as nb
import numpy as np

from .numerics import InputError

# -----------------------------------------------------------------------------
# Streams


@dataclass(frozen=True)
class RngStream:
    master_seed: int
    stream_index: tuple[int, ...] = ()

    def __post_init__(self):
        if not 0 <= int(self.master_seed) < 2**64:
            raise InputError(f"master_seed must be a 64-bit unsigned int, got {self.master_seed}")
        idx = self.stream_index
        if isinstance(idx, (int, np.integer)):
            idx = (int(idx),)
        idx = tuple(int(i) for i in idx)
        if any(i < 0 for i in idx):
            raise InputError("stream indices must be nonnegative")
        object.__setattr__(self, "stream_index", idx)

    def child(self, *index: int) -> "RngStream":
        return RngStream(self.master_seed, self.stream_index + tuple(index))

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.master_seed), spawn_key=self.stream_index)
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)


# -----------------------------------------------------------------------------
# Polya-Gamma PG(1, c)
#
# The exact sampler follows the alternating-series method for J*(1, z) with
# z = c / 2 (PG(1, c) = J*(1, c/2) / 4): a proposal that mixes an inverse
# Gaussian truncated to (0, t] with an exponential on (t, inf), accepted by
# squeezing the partial sums of the density series.  t = 0.64 is the
# truncation point that maximises the acceptance rate.

_PG_T = 0.64
_PI = math.pi
_PI2_8 = math.pi * math.pi / 8.0
_LOG_PI_2 = math.log(math.pi / 2.0)


@dataclass(frozen=True)
class PolyaGammaParams:
    c: float

    def __post_init__(self):
        if not math.isfinite(self.c) or self.c < 0:
            raise InputError(f"PG(1, c) needs finite c >= 0, got {self.c}")


@nb.njit(cache=True, nogil=True)
def _log_norm_cdf(x):
    # log Phi(x); erfc keeps accuracy in the lower tail
    if x > -5.0:
        return math.log(0.5 * math.erfc(-x / math.sqrt(2.0)))
    # asymptotic expansion for the far tail
    x2 = x * x
    return -0.5 * x2 - math.log(-x) - 0.5 * math.log(2.0 * math.pi) + math.log1p(
        -1.0 / x2 + 3.0 / (x2 * x2)
    )


@nb.njit(cache=True, nogil=True)
def _series_term(n, x):
    # n-th coefficient of the J*(1) density series, piecewise at t
    k = (n + 0.5) * _PI
    if x > _PG_T:
        return k * math.exp(-0.5 * k * k * x)
    if x <= 0.0:
        return 0.0
    return math.exp(
        math.log(k) - 1.5 * (_LOG_PI_2 + math.log(x)) - 2.0 * (n + 0.5) * (n + 0.5) / x
    )


@nb.njit(cache=True, nogil=True)
def _exp_mass(z):
    # probability of proposing from the exponential (right) piece
    t = _PG_T
    fz = _PI2_8 + 0.5 * z * z
    b = math.sqrt(1.0 / t) * (t * z - 1.0)
    a = -math.sqrt(1.0 / t) * (t * z + 1.0)
    x0 = math.log(fz) + fz * t
    xb = x0 - z + _log_norm_cdf(b)
    xa = x0 + z + _log_norm_cdf(a)
    qdivp = 4.0 / _PI * (math.exp(xb) + math.exp(xa))
    return 1.0 / (1.0 + qdivp)


@nb.njit(cache=True, nogil=True)
def _truncated_inv_gauss(z, rng):
    # IG(mean 1/z, shape 1) restricted to (0, t]
    t = _PG_T
    x = t + 1.0
    if z < 1.0 / t:
        alpha = 0.0
        while rng.random() > alpha:
            e1 = rng.standard_exponential()
            e2 = rng.standard_exponential()
            while e1 * e1 > 2.0 * e2 / t:
                e1 = rng.standard_exponential()
                e2 = rng.standard_exponential()
            x = 1.0 + e1 * t
            x = t / (x * x)
            alpha = math.exp(-0.5 * z * z * x)
    else:
        mu = 1.0 / z
        while x > t:
            y = rng.standard_normal()
            y = y * y
            half_mu = 0.5 * mu
            mu_y = mu * y
            x = mu + half_mu * mu_y - half_mu * math.sqrt(4.0 * mu_y + mu_y * mu_y)
            if rng.random() > mu / (mu + x):
                x = mu * mu / x
    return x


@nb.njit(cache=True, nogil=True)
def _draw_jstar(z, fz, p_exp, rng):
    while True:
        if rng.random() < p_exp:
            x = _PG_T + rng.standard_exponential() / fz
        else:
            x = _truncated_inv_gauss(z, rng)
        s = _series_term(0, x)
        y = rng.random() * s
        n = 0
        while True:
            n += 1
            if n % 2 == 1:
                s -= _series_term(n, x)
                if y <= s:
                    return x
            else:
                s += _series_term(n, x)
                if y > s:
                    break


@nb.njit(cache=True, nogil=True)
def _pg1_fill(c, reps, out, rng):
    # out[r, i] ~ PG(1, c[i]); proposal constants computed once per tilt
    for i in range(c.shape[0]):
        z = 0.5 * c[i]
        fz = _PI2_8 + 0.5 * z * z
        p_exp = _exp_mass(z)
        for r in range(reps):
            out[r, i] = 0.25 * _draw_jstar(z, fz, p_exp, rng)


def _check_tilts(c) -> np.ndarray:
    c = np.ascontiguousarray(np.asarray(c, dtype=float).reshape(-1))
    if not np.all(np.isfinite(c)) or np.any(c < 0):
        raise InputError("PG(1, c) tilts must be finite and nonnegative")
    return c


def sample_pg1(params, rng, method: str = "exact") -> float:
    """One PG(1, c) draw; ``method`` is ``"exact"`` or ``"truncated"``."""
    c = params.c if isinstance(params, PolyaGammaParams) else PolyaGammaParams(float(params)).c
    return float(sample_pg1_many(np.array([c]), rng, method=method)[0])


def sample_pg1_many(c, rng, method: str = "exact") -> np.ndarray:
    """Independent PG(1, c_i) draws for an array of tilts, same shape as ``c``."""
    if method == "truncated":
        return sample_pg1_truncated(c, rng)
    if method != "exact":
        raise InputError(f"unknown PG sampler {method!r}")
    shape = np.shape(c)
    flat = _check_tilts(c)
    out = np.empty((1, flat.size))
    _pg1_fill(flat, 1, out, as_generator(rng))
    return out.reshape(shape)


def sample_pg1_repeated(c, reps: int, rng, method: str = "exact") -> np.ndarray:
    """(reps, len(c)) array whose rows are independent PG(1, c) vectors."""
    if method == "truncated":
        return sample_pg1_truncated(np.broadcast_to(c, (reps, np.size(c))), rng)
    if method != "exact":
        raise InputError(f"unknown PG sampler {method!r}")
    flat = _check_tilts(c)
    out = np.empty((reps, flat.size))
    _pg1_fill(flat, reps, out, as_generator(rng))
    return out


def sample_pg1_truncated(c, rng, terms: int = 200) -> np.ndarray:
    """Approximate PG(1, c) draws: truncated exponential sum, then tilt by rejection.

    W = (2/pi^2) sum_{l<=terms} E_l / (2l-1)^2 is drawn, and accepted with
    probability exp(-c^2 W / 2).  Slow for large c; meant as a cross-check
    for :func:`sample_pg1_many`.
    """
    gen = as_generator(rng)
    shape = np.shape(c)
    flat = _check_tilts(c)
    weights = (2.0 / np.pi**2) / (2.0 * np.arange(1, terms + 1) - 1.0) ** 2
    out = np.empty(flat.size)
    pending = np.arange(flat.size)
    while pending.size:
        w = gen.standard_exponential((pending.size, terms)) @ weights
        accept = gen.random(pending.size) < np.exp(-0.5 * flat[pending] ** 2 * w)
        out[pending[accept]] = w[accept]
        pending = pending[~accept]
    return out.reshape(shape)


_SERIES_RTOL = 1e-12
_SWITCH = 1.0 / (2.0 * np.pi)  # both series converge equally fast here


def _log_pg1_base(w: float) -> float:
    # log of the untilted density, alternating series with certified truncation
    if w <= _SWITCH:
        # sum_n (-1)^n (2n+1) / sqrt(2 pi w^3) exp(-(2n+1)^2 / (8w))
        lead = -0.5 * math.log(2.0 * math.pi) - 1.5 * math.log(w) - 1.0 / (8.0 * w)
        total, n = 1.0, 1
        while True:
            term = (2 * n + 1) * math.exp(-((2 * n + 1) ** 2 - 1) / (8.0 * w))
            if term < _SERIES_RTOL * total:
                break
            total += term if n % 2 == 0 else -term
            n += 1
    else:
        # sum_n (-1)^n 2 pi (2n+1) exp(-(2n+1)^2 pi^2 w / 2)
        lead = math.log(2.0 * math.pi) - 0.5 * math.pi**2 * w
        total, n = 1.0, 1
        while True:
            term = (2 * n + 1) * math.exp(-((2 * n + 1) ** 2 - 1) * math.pi**2 * w / 2.0)
            if term < _SERIES_RTOL * total:
                break
            total += term if n % 2 == 0 else -term
            n += 1
    return lead + math.log(total)


def log_cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - math.log(2.0)


def pg1_log_density(w: float, params) -> float:
    """log of the PG(1, c) density at w > 0."""
    c = params.c if isinstance(params, PolyaGammaParams) else PolyaGammaParams(float(params)).c
    w = float(w)
    if not w > 0 or not math.isfinite(w):
        raise InputError(f"PG density is defined for finite w > 0, got {w}")
    return _log_pg1_base(w) + (float(log_cosh(0.5 * c)) - 0.5 * c * c * w)


# -----------------------------------------------------------------------------
# Normal, beta, categorical

_LOG_2PI = math.log(2.0 * math.pi)


def sample_mvn(mean, covariance, rng) -> np.ndarray:
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    cov = np.atleast_2d(np.asarray(covariance, dtype=float))
    if cov.shape != (mean.size, mean.size):
        raise InputError(f"covariance shape {cov.shape} does not match mean length {mean.size}")
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"covariance is not positive definite: {exc}") from None
    return mean + chol @ as_generator(rng).standard_normal(mean.size)


def sample_mvn_precision(mean, precision_chol, rng) -> np.ndarray:
    """Normal draw given the lower Cholesky factor L of the *precision* (P = L L^T)."""
    z = as_generator(rng).standard_normal(np.size(mean))
    return mean + np.linalg.solve(precision_chol.T, z)


def mvn_log_density(x, mean, precision, log_det_precision) -> float:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    mean = np.atleast_1d(np.asarray(mean, dtype=float))
    precision = np.atleast_2d(np.asarray(precision, dtype=float))
    p = x.size
    if mean.size != p or precision.shape != (p, p):
        raise InputError(
            f"dimension mismatch: x {x.shape}, mean {mean.shape}, precision {precision.shape}"
        )
    d = x - mean
    return float(-0.5 * p * _LOG_2PI + 0.5 * log_det_precision - 0.5 * d @ precision @ d)


def sample_beta(a: float, b: float, rng) -> float:
    if not (a > 0 and b > 0 and math.isfinite(a) and math.isfinite(b)):
        raise InputError(f"Beta shapes must be positive and finite, got ({a}, {b})")
    return float(as_generator(rng).beta(a, b))


def sample_categorical(weights, rng) -> int:
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.size == 0 or np.any(w < 0) or not np.all(np.isfinite(w)) or w.sum() <= 0:
        raise InputError("categorical weights must be finite, nonnegative, with positive sum")
    cdf = np.cumsum(w / w.sum())
    u = as_generator(rng).random()
    return int(min(np.searchsorted(cdf, u, side="right"), w.size - 1))
