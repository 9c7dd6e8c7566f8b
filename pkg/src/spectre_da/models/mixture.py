"""Two-component equal-variance normal mixture, seen through its label chain.

The estimation target is the z-chain on {1, 2}^n: the latent of that chain
is theta = (mu1, mu2, p).  ``variant="FS"`` is the label-switching sandwich
chain written as a DA chain, where both conditionals are the flip-averaged
versions of the MDA ones.

Priors: p ~ Uniform(0, 1), mu_j ~ N(0, tau^2), with tau the known component
standard deviation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln

from ..da_core import DAModel
from ..numerics import InputError

_LOG2 = math.log(2.0)


@dataclass(frozen=True)
class MixtureTheta:
    mu1: float
    mu2: float
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise InputError(f"mixing proportion must lie in (0, 1), got {self.p}")

    def as_array(self) -> np.ndarray:
        return np.array([self.mu1, self.mu2, self.p])


def flip(z):
    """Swap the labels 1 <-> 2."""
    return (3 - np.asarray(z)).astype(np.int8)


def _as_theta_array(theta) -> np.ndarray:
    if isinstance(theta, MixtureTheta):
        return theta.as_array()
    return np.asarray(theta, dtype=float)


class MixtureModel(DAModel):
    is_normalized = False

    def __init__(self, y, tau: float, variant: str = "MDA"):
        y = np.asarray(y, dtype=float).reshape(-1)
        if y.size < 1:
            raise InputError("need at least one observation")
        if not tau > 0:
            raise InputError(f"tau must be positive, got {tau}")
        variant = variant.upper()
        if variant not in ("MDA", "FS"):
            raise InputError(f"variant must be MDA or FS, got {variant!r}")
        self.y = y
        self.n = y.size
        self.tau = float(tau)
        self.variant = variant
        self.model_id = f"mixture-{variant.lower()}"

    def _check_labels(self, z) -> np.ndarray:
        z = np.asarray(z)
        if z.shape[-1] != self.n or not np.all((z == 1) | (z == 2)):
            raise InputError(f"labels must be a length-{self.n} vector over {{1, 2}}")
        return z

    def _group_stats(self, z):
        # counts and sums of y per component; ybar_j = sum_j / c_j (0 if empty)
        z = np.asarray(z)
        ones = (z == 1).astype(float)
        twos = (z == 2).astype(float)
        # both sums taken directly so that relabelling swaps them exactly
        return ones.sum(axis=-1), ones @ self.y, twos.sum(axis=-1), twos @ self.y

    # -- latent: theta | z --------------------------------------------------

    def _draw_theta(self, c1, s1, c2, s2, rng, size=None):
        tau = self.tau
        p = rng.beta(c1 + 1.0, c2 + 1.0, size)
        mu1 = s1 / (c1 + 1.0) + tau / np.sqrt(c1 + 1.0) * rng.standard_normal(size)
        mu2 = s2 / (c2 + 1.0) + tau / np.sqrt(c2 + 1.0) * rng.standard_normal(size)
        return mu1, mu2, p

    def draw_latent(self, x, rng) -> MixtureTheta:
        z = self._check_labels(x)
        if self.variant == "FS" and rng.random() < 0.5:
            z = flip(z)
        c1, s1, c2, s2 = self._group_stats(z)
        mu1, mu2, p = self._draw_theta(c1, s1, c2, s2, rng)
        return MixtureTheta(float(mu1), float(mu2), float(p))

    def draw_latent_many(self, x, size, rng) -> np.ndarray:
        """(size, 3) array of (mu1, mu2, p)."""
        z = self._check_labels(x)
        c1, s1, c2, s2 = self._group_stats(z)
        if self.variant == "FS":
            swap = rng.random(size) < 0.5
            c1, c2 = np.where(swap, c2, c1), np.where(swap, c1, c2)
            s1, s2 = np.where(swap, s2, s1), np.where(swap, s1, s2)
        mu1, mu2, p = self._draw_theta(c1, s1, c2, s2, rng, size)
        return np.column_stack([mu1, mu2, p])

    # -- next state: z | theta ----------------------------------------------

    def log_membership(self, theta):
        """log p~_i and log(1 - p~_i), each shaped (..., n)."""
        th = _as_theta_array(theta)
        mu1, mu2, p = th[..., 0:1], th[..., 1:2], th[..., 2:3]
        la = np.log(p) - 0.5 * ((self.y - mu1) / self.tau) ** 2
        lb = np.log1p(-p) - 0.5 * ((self.y - mu2) / self.tau) ** 2
        norm = np.logaddexp(la, lb)
        return la - norm, lb - norm

    def draw_next_state(self, z, rng):
        log_a, _ = self.log_membership(z)
        u = rng.random(self.n)
        labels = np.where(np.log(u) < log_a, 1, 2).astype(np.int8)
        if self.variant == "FS" and rng.random() < 0.5:
            labels = flip(labels)
        return labels

    def latent_conditional_log_density(self, x_next, z) -> float:
        labels = self._check_labels(x_next)
        log_a, log_b = self.log_membership(z)
        mda = float(np.sum(np.where(labels == 1, log_a, log_b)))
        if self.variant == "MDA":
            return mda
        flipped = float(np.sum(np.where(labels == 1, log_b, log_a)))
        return float(np.logaddexp(mda, flipped) - _LOG2)

    def latent_conditional_log_density_many(self, targets, latents):
        ones = (np.atleast_2d(np.asarray(targets)) == 1).astype(float)
        log_a, log_b = self.log_membership(np.atleast_2d(latents))
        diff = log_a - log_b
        mda = log_b.sum(axis=1)[:, None] + diff @ ones.T
        if self.variant == "MDA":
            return mda
        flipped = log_a.sum(axis=1)[:, None] - diff @ ones.T
        return np.logaddexp(mda, flipped) - _LOG2

    # -- stationary mass of z -----------------------------------------------

    def stationary_log_unnormalized(self, x) -> float:
        return float(self.stationary_log_unnormalized_many(np.atleast_2d(self._check_labels(x)))[0])

    def stationary_log_unnormalized_many(self, states):
        c1, s1, c2, s2 = self._group_stats(np.atleast_2d(states))
        t2 = 2.0 * self.tau**2
        # c_j^2 ybar_j^2 = s_j^2, so empty groups need no special case
        g1 = s1**2 / (t2 * (1.0 + c1)) - 0.5 * np.log1p(c1)
        g2 = s2**2 / (t2 * (1.0 + c2)) - 0.5 * np.log1p(c2)
        # symmetric in the two groups bit for bit
        return betaln(np.minimum(c1, c2) + 1.0, np.maximum(c1, c2) + 1.0) + (g1 + g2)

    def enumerate_states(self) -> np.ndarray:
        """All 2^n label vectors, row i encoding i in binary (bit set -> label 2)."""
        if self.n > 16:
            raise InputError("enumeration is limited to n <= 16")
        idx = np.arange(2**self.n)[:, None]
        bits = (idx >> np.arange(self.n)[::-1]) & 1
        return (1 + bits).astype(np.int8)


def mixture_kmeans_start(y, k: int = 2, max_iter: int = 100) -> MixtureTheta:
    """1-D Lloyd iterations from the extreme points; p is the share of cluster 1."""
    if k != 2:
        raise InputError("only k = 2 is supported")
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size < 2:
        raise InputError("k-means start needs at least 2 observations")
    lo, hi = float(y.min()), float(y.max())
    if lo == hi:
        return MixtureTheta(lo, lo, 0.5)
    centers = np.array([lo, hi])
    assign = None
    for _ in range(max_iter):
        new = np.where(np.abs(y - centers[0]) <= np.abs(y - centers[1]), 0, 1)
        if assign is not None and np.array_equal(new, assign):
            break
        assign = new
        for j in range(2):
            if np.any(assign == j):
                centers[j] = y[assign == j].mean()
    p = float(np.clip(np.mean(assign == 0), 0.05, 0.95))
    return MixtureTheta(float(centers[0]), float(centers[1]), p)


def simulate_mixture_data(theta: MixtureTheta, tau: float, n: int, rng) -> np.ndarray:
    labels = np.where(rng.random(n) < theta.p, 0, 1)
    means = np.array([theta.mu1, theta.mu2])[labels]
    return means + tau * rng.standard_normal(n)
