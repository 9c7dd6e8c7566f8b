"""Normal-normal DA chain: z ~ N(x/2, 1/8), then x ~ N(z, 1/4).

The x-chain is x' = x/2 + e with e ~ N(0, 3/8), an AR(1) process whose
stationary law is N(0, 1/2) and whose eigenvalues are 2^-n.
"""

from __future__ import annotations

import math

import numpy as np

from ..da_core import DAModel

LATENT_VAR = 1.0 / 8.0
STATE_VAR = 1.0 / 4.0
KERNEL_VAR = LATENT_VAR + STATE_VAR
STATIONARY_VAR = KERNEL_VAR / (1.0 - 0.25)


def _norm_logpdf(x, mean, var):
    return -0.5 * math.log(2.0 * math.pi * var) - 0.5 * (x - mean) ** 2 / var


def toy_exact_log_kernel(x, x_next):
    """log k(x, x') = log N(x'; x/2, 3/8), the latent integrated out."""
    return _norm_logpdf(x_next, 0.5 * x, KERNEL_VAR)


class ToyModel(DAModel):
    model_id = "toy"
    is_normalized = True

    def draw_latent(self, x, rng):
        return 0.5 * float(x) + math.sqrt(LATENT_VAR) * rng.standard_normal()

    def draw_latent_many(self, x, size, rng):
        return 0.5 * float(x) + math.sqrt(LATENT_VAR) * rng.standard_normal(size)

    def draw_next_state(self, z, rng):
        return float(z) + math.sqrt(STATE_VAR) * rng.standard_normal()

    def latent_conditional_log_density(self, x_next, z):
        return float(_norm_logpdf(float(x_next), float(z), STATE_VAR))

    def latent_conditional_log_density_many(self, targets, latents):
        targets = np.asarray(targets, dtype=float).reshape(-1)
        latents = np.asarray(latents, dtype=float).reshape(-1)
        out = np.subtract.outer(latents, targets)
        out *= out
        out *= -0.5 / STATE_VAR
        out += -0.5 * math.log(2.0 * math.pi * STATE_VAR)
        return out

    def stationary_log_unnormalized(self, x):
        return float(_norm_logpdf(float(x), 0.0, STATIONARY_VAR))

    def stationary_log_unnormalized_many(self, states):
        return _norm_logpdf(np.asarray(states, dtype=float).reshape(-1), 0.0, STATIONARY_VAR)

    def exact_log_kernel(self, x, x_next):
        return float(toy_exact_log_kernel(float(x), float(x_next)))

    def exact_log_kernel_many(self, x, targets):
        return toy_exact_log_kernel(float(x), np.asarray(targets, dtype=float).reshape(-1))

    @staticmethod
    def true_eigenvalues(count: int) -> np.ndarray:
        return 0.5 ** np.arange(count)
