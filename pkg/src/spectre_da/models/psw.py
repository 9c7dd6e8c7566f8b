"""Polya-Gamma DA sampler for Bayesian logistic regression with a N_p(b, B) prior.

Latent w_i ~ PG(1, |u_i' beta|); then beta ~ N_p(Sigma(w) mu, Sigma(w)) with
Sigma(w)^-1 = U' diag(w) U + B^-1 and mu = U'(y - 1/2) + B^-1 b.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from ..da_core import DAModel
from ..distributions import mvn_log_density, sample_pg1_many, sample_pg1_repeated
from ..numerics import InputError, NumericError

_LOG_2PI = math.log(2.0 * math.pi)
_SOFTPLUS_CUTOFF = 35.0


def softplus(t):
    """log(1 + exp(t)) without overflow."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    big = t > _SOFTPLUS_CUTOFF
    small = t < -_SOFTPLUS_CUTOFF
    mid = ~(big | small)
    out[big] = t[big]
    out[small] = np.exp(t[small])
    out[mid] = np.log1p(np.exp(t[mid]))
    return out


def _cholesky(a, what):
    try:
        return np.linalg.cholesky(a)
    except np.linalg.LinAlgError as exc:
        raise NumericError(f"{what} is not positive definite: {exc}") from None


class PswModel(DAModel):
    model_id = "psw"
    is_normalized = False

    def __init__(self, U, y, b=None, B=None, pg_method: str = "exact"):
        U = np.atleast_2d(np.asarray(U, dtype=float))
        y = np.asarray(y, dtype=float).reshape(-1)
        n, p = U.shape
        if p < 1:
            raise InputError("design matrix needs at least one column")
        if y.size != n:
            raise InputError(f"response length {y.size} does not match {n} design rows")
        if not np.all((y == 0) | (y == 1)):
            raise InputError("responses must be 0/1")
        b = np.zeros(p) if b is None else np.asarray(b, dtype=float).reshape(-1)
        B = np.eye(p) if B is None else np.atleast_2d(np.asarray(B, dtype=float))
        if b.size != p or B.shape != (p, p):
            raise InputError(f"prior shapes b {b.shape}, B {B.shape} do not match p = {p}")
        if not np.allclose(B, B.T):
            raise InputError("prior covariance B must be symmetric")
        B_chol = _cholesky(B, "prior covariance B")

        self.U, self.y, self.b, self.B = U, y, b, B
        self.n, self.p = n, p
        self.pg_method = pg_method
        self.B_inv = np.linalg.inv(B)
        self.B_inv = 0.5 * (self.B_inv + self.B_inv.T)
        self.B_logdet = 2.0 * np.sum(np.log(np.diag(B_chol)))
        self.mu = U.T @ (y - 0.5) + self.B_inv @ b
        # row-wise outer products u_i u_i^T flattened, so U' diag(w) U = w @ uu
        self._uu = (U[:, :, None] * U[:, None, :]).reshape(n, p * p)

    # -- DA pieces ------------------------------------------------------------

    def precision(self, w) -> np.ndarray:
        """U' diag(w) U + B^-1 for one w (n,) or a batch (N, n)."""
        w = np.asarray(w, dtype=float)
        P = (w @ self._uu).reshape(w.shape[:-1] + (self.p, self.p)) + self.B_inv
        return P

    def draw_latent(self, x, rng):
        return sample_pg1_many(np.abs(self.U @ np.asarray(x, dtype=float)), rng, self.pg_method)

    def draw_latent_many(self, x, size, rng):
        psi = np.abs(self.U @ np.asarray(x, dtype=float))
        return sample_pg1_repeated(psi, size, rng, self.pg_method)

    def draw_next_state(self, z, rng):
        L = _cholesky(self.precision(z), "posterior precision")
        mean = np.linalg.solve(L.T, np.linalg.solve(L, self.mu))
        return mean + np.linalg.solve(L.T, rng.standard_normal(self.p))

    def latent_conditional_log_density(self, x_next, z):
        w = np.asarray(z, dtype=float)
        if np.any(w <= 0):
            raise InputError("PG latents must be positive")
        P = self.precision(w)
        L = _cholesky(P, "posterior precision")
        mean = np.linalg.solve(L.T, np.linalg.solve(L, self.mu))
        logdet = 2.0 * np.sum(np.log(np.diag(L)))
        return mvn_log_density(x_next, mean, P, logdet)

    # The quadratic form is expanded so an N x T block is one matrix product:
    #   log f = const - 1/2 sum_{a<=b} c_ab P_ab x_a x_b + mu.x
    #   const = -p/2 log 2pi + 1/2 log|P| - 1/2 mu' P^-1 mu
    # with c_ab = 1 on the diagonal and 2 off it.

    def target_features(self, states):
        X = np.atleast_2d(np.asarray(states, dtype=float))
        a, b = np.triu_indices(self.p)
        return np.ascontiguousarray(
            np.concatenate([X[:, a] * X[:, b], X, np.ones((X.shape[0], 1))], axis=1)
        )

    def prepare_latents(self, latents):
        W = np.atleast_2d(np.asarray(latents, dtype=float))
        P = self.precision(W)
        L = _cholesky(P, "posterior precision")
        logdet = 2.0 * np.sum(np.log(np.diagonal(L, axis1=-2, axis2=-1)), axis=-1)
        mu = np.broadcast_to(self.mu, (W.shape[0], self.p))
        mean = np.linalg.solve(P, mu[..., None])[..., 0]
        const = -0.5 * self.p * _LOG_2PI + 0.5 * logdet - 0.5 * np.sum(mean * mu, axis=1)
        a, b = np.triu_indices(self.p)
        quad = np.where(a == b, -0.5, -1.0) * P[:, a, b]
        return np.concatenate([quad, mu, const[:, None]], axis=1)

    def log_density_block(self, features, prepared):
        return prepared @ features.T

    def latent_conditional_log_density_many(self, targets, latents):
        return self.log_density_block(self.target_features(targets), self.prepare_latents(latents))

    def log_likelihood(self, beta) -> float:
        t = self.U @ np.asarray(beta, dtype=float)
        return float(-np.sum(self.y * softplus(-t) + (1.0 - self.y) * softplus(t)))

    def stationary_log_unnormalized(self, x):
        beta = np.asarray(x, dtype=float)
        d = beta - self.b
        prior = -0.5 * self.p * _LOG_2PI - 0.5 * self.B_logdet - 0.5 * d @ self.B_inv @ d
        return float(prior) + self.log_likelihood(beta)

    def stationary_log_unnormalized_many(self, states):
        beta = np.atleast_2d(np.asarray(states, dtype=float))
        d = beta - self.b
        prior = -0.5 * self.p * _LOG_2PI - 0.5 * self.B_logdet - 0.5 * np.einsum(
            "ij,jk,ik->i", d, self.B_inv, d
        )
        t = beta @ self.U.T
        lik = -np.sum(self.y * softplus(-t) + (1.0 - self.y) * softplus(t), axis=1)
        return prior + lik


def fit_logistic_mle(U, y, tol: float = 1e-8, max_iter: int = 50) -> np.ndarray:
    """Newton-Raphson logistic regression MLE (no intercept added; put it in U).

    Warns and returns the last iterate when the gradient does not fall
    below ``tol`` within ``max_iter`` steps (e.g. complete separation).
    """
    U = np.atleast_2d(np.asarray(U, dtype=float))
    y = np.asarray(y, dtype=float).reshape(-1)
    beta = np.zeros(U.shape[1])
    for _ in range(max_iter):
        prob = np.exp(-softplus(-(U @ beta)))
        grad = U.T @ (y - prob)
        if np.linalg.norm(grad) < tol:
            return beta
        hess = U.T @ (U * (prob * (1.0 - prob))[:, None])
        try:
            beta = beta + np.linalg.solve(hess, grad)
        except np.linalg.LinAlgError:
            beta = beta + np.linalg.lstsq(hess, grad, rcond=None)[0]
    prob = np.exp(-softplus(-(U @ beta)))
    if np.linalg.norm(U.T @ (y - prob)) >= tol:
        warnings.warn(
            f"logistic MLE did not converge in {max_iter} Newton steps "
            "(possible separation); returning last iterate",
            RuntimeWarning,
            stacklevel=2,
        )
    return beta
