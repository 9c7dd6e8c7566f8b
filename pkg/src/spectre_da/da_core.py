"""Data-augmentation model contract, chain simulation and Monte Carlo kernel rows."""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .distributions import RngStream, as_generator
from .numerics import CapabilityError, InputError, NumericError, log_mean_exp

# cap on the (N x targets) block of log densities held at once
_BLOCK_ELEMENTS = 1 << 19


class DAModel(abc.ABC):
    """A two-block Gibbs sampler X -> Z -> X seen through its X-marginal chain.

    Subclasses supply the four scalar operations.  The ``*_many`` hooks have
    loop-based defaults and exist so that concrete models can vectorise the
    inner loop of the Monte Carlo kernel estimate.

    States passed to ``*_many`` hooks are stacked along axis 0 (as stored in
    a :class:`ChainTrace`); latent batches are whatever ``draw_latent_many``
    returns.
    """

    model_id: str = "da-model"
    is_normalized: bool = False

    @abc.abstractmethod
    def draw_latent(self, x, rng: np.random.Generator):
        """z ~ f_{Z|X}(. | x)."""

    @abc.abstractmethod
    def draw_next_state(self, z, rng: np.random.Generator):
        """x ~ f_{X|Z}(. | z)."""

    @abc.abstractmethod
    def latent_conditional_log_density(self, x_next, z) -> float:
        """log f_{X|Z}(x_next | z); finite or -inf."""

    @abc.abstractmethod
    def stationary_log_unnormalized(self, x) -> float:
        """log eta(x) with pi = eta / c (c = 1 when ``is_normalized``)."""

    def exact_log_kernel(self, x, x_next) -> float | None:
        """log k(x, x_next) when available in closed form, else None."""
        return None

    @property
    def has_exact_kernel(self) -> bool:
        return type(self).exact_log_kernel is not DAModel.exact_log_kernel

    # -- vectorisation hooks ------------------------------------------------

    def draw_latent_many(self, x, size: int, rng: np.random.Generator) -> Sequence[Any]:
        return [self.draw_latent(x, rng) for _ in range(size)]

    def latent_conditional_log_density_many(self, targets, latents) -> np.ndarray:
        """(len(latents), len(targets)) array of log f_{X|Z}(target | latent)."""
        out = np.empty((len(latents), len(targets)))
        for i, z in enumerate(latents):
            for t, x in enumerate(targets):
                out[i, t] = self.latent_conditional_log_density(x, z)
        return out

    def target_features(self, states):
        """Per-state precomputation for ``log_density_block``; indexable along axis 0."""
        return states

    def prepare_latents(self, latents):
        """Per-batch precomputation for ``log_density_block``."""
        return latents

    def log_density_block(self, features, prepared) -> np.ndarray:
        """(N, T) log densities from ``target_features`` rows and ``prepare_latents`` output."""
        return self.latent_conditional_log_density_many(features, prepared)

    def stationary_log_unnormalized_many(self, states) -> np.ndarray:
        return np.array([self.stationary_log_unnormalized(x) for x in states], dtype=float)

    def exact_log_kernel_many(self, x, targets) -> np.ndarray:
        if not self.has_exact_kernel:
            raise CapabilityError(f"{self.model_id} has no closed-form transition density")
        return np.array([self.exact_log_kernel(x, t) for t in targets], dtype=float)

    def step(self, x, rng: np.random.Generator):
        return self.draw_next_state(self.draw_latent(x, rng), rng)


@dataclass
class ChainTrace:
    states: np.ndarray
    burn_in: int
    master_seed: int | None
    model_id: str

    def __post_init__(self):
        self.states = np.asarray(self.states)
        if len(self.states) < 2:
            raise InputError(f"a chain trace needs at least 2 states, got {len(self.states)}")

    @property
    def m(self) -> int:
        return len(self.states)

    def prefix(self, m: int) -> "ChainTrace":
        if not 2 <= m <= self.m:
            raise InputError(f"prefix length {m} outside [2, {self.m}]")
        return ChainTrace(self.states[:m], self.burn_in, self.master_seed, self.model_id)


def run_chain(model: DAModel, x0, burn_in: int, m: int, rng) -> ChainTrace:
    """Run the DA chain from ``x0``; keep ``m`` states after ``burn_in`` iterations.

    ``states[0]`` is the state reached after the burn-in (``x0`` itself when
    ``burn_in == 0``).
    """
    if m < 2:
        raise InputError(f"m must be >= 2, got {m}")
    if burn_in < 0:
        raise InputError(f"burn_in must be >= 0, got {burn_in}")
    seed = rng.master_seed if isinstance(rng, RngStream) else None
    gen = as_generator(rng)
    x = x0
    states = []
    it = 0
    try:
        for it in range(burn_in):
            x = model.step(x, gen)
        states.append(np.array(x, copy=True))
        for it in range(burn_in, burn_in + m - 1):
            x = model.step(x, gen)
            states.append(np.array(x, copy=True))
    except (np.linalg.LinAlgError, FloatingPointError, ArithmeticError) as exc:
        raise NumericError(f"{model.model_id}: sampler failed at DA iteration {it}: {exc}") from exc
    return ChainTrace(np.stack(states), burn_in, seed, model.model_id)


def estimate_kernel_log_row(model: DAModel, x_j, targets, N: int, rng, features=None) -> np.ndarray:
    """log of the N-sample Monte Carlo estimate of k(x_j, target) for every target.

    One latent batch Z_1..Z_N ~ f_{Z|X}(.|x_j) is drawn and shared by all
    targets.  A target for which every summand is zero gets -inf.
    ``features`` may carry ``model.target_features(targets)`` computed earlier.
    """
    if N < 1:
        raise InputError(f"N must be >= 1, got {N}")
    gen = as_generator(rng)
    latents = model.prepare_latents(model.draw_latent_many(x_j, N, gen))
    if features is None:
        features = model.target_features(targets)
    n_targets = len(targets)
    out = np.empty(n_targets)
    block = max(1, _BLOCK_ELEMENTS // N)
    for lo in range(0, n_targets, block):
        hi = min(n_targets, lo + block)
        logf = model.log_density_block(features[lo:hi], latents)
        out[lo:hi] = log_mean_exp(logf, axis=0, overwrite=True)
    return out
