"""Dense symmetric eigenvalues, the delta_2 spectral distance and matrix norms."""

from __future__ import annotations

import numpy as np
import scipy.linalg

SYMMETRY_RTOL = 1e-10


class ContractError(ValueError):
    """Input violates a structural precondition (shape, symmetry)."""


class InputError(ValueError):
    """Input carries invalid values (NaN/Inf, bad parameters, bad files)."""


class Spectrum(np.ndarray):
    """Eigenvalues as a 1-D float array sorted in descending order.

    A thin ndarray subclass so spectra drop straight into numpy code while
    still carrying the "already sorted" guarantee by type.
    """

    def __new__(cls, values):
        arr = np.asarray(values, dtype=float).reshape(-1)
        if not np.all(np.isfinite(arr)):
            raise InputError("spectrum contains non-finite values")
        # stable descending sort keeps construction order for ties
        order = np.argsort(-arr, kind="stable")
        return arr[order].view(cls)

    def __array_finalize__(self, obj):
        pass


def _check_finite(a, what="matrix"):
    if not np.all(np.isfinite(a)):
        raise InputError(f"{what} contains non-finite entries")


def symmetric_eigenvalues(matrix) -> Spectrum:
    """All eigenvalues of a real symmetric matrix, descending.

    The matrix must be symmetric to within ``1e-10 * max|entry|``; it is then
    symmetrised as ``(A + A.T) / 2`` before a full dense (tridiagonal + divide
    and conquer) decomposition.
    """
    a = np.asarray(matrix, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ContractError(f"expected a square matrix, got shape {a.shape}")
    _check_finite(a)
    if a.shape[0] == 0:
        return Spectrum([])
    scale = np.max(np.abs(a))
    asym = np.max(np.abs(a - a.T))
    if asym > SYMMETRY_RTOL * scale:
        raise ContractError(
            f"matrix is not symmetric: max|A - A^T| = {asym:.3e} "
            f"exceeds {SYMMETRY_RTOL:.0e} * max|A| = {SYMMETRY_RTOL * scale:.3e}"
        )
    if asym > 0:
        a = 0.5 * (a + a.T)
    vals = scipy.linalg.eigvalsh(a, driver="evd", check_finite=False)
    return Spectrum(vals)


def delta2(a, b) -> float:
    """l2 distance between descending-sorted, zero-padded sequences.

    Shorter inputs are padded with zeros, so a finite matrix spectrum can be
    compared with a (truncated) operator spectrum directly.

    Both sides are padded to ``len(a) + len(b)`` so that with negative
    entries present every value can still be matched against a zero.
    """
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    _check_finite(a, "spectrum")
    _check_finite(b, "spectrum")
    n = a.size + b.size
    pa = np.concatenate([a, np.zeros(n - a.size)])
    pb = np.concatenate([b, np.zeros(n - b.size)])
    pa = np.sort(pa)[::-1]
    pb = np.sort(pb)[::-1]
    return float(np.sqrt(np.sum((pa - pb) ** 2)))


def frobenius_distance(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise InputError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


class NumericError(ArithmeticError):
    """A numerical routine failed (non-PD matrix, degenerate spectrum, ...)."""


class CapabilityError(TypeError):
    """The model does not provide an operation the estimator needs."""


def log_mean_exp(a, axis=0, overwrite=False):
    """log(mean(exp(a))) along ``axis``; all -inf slices give -inf.

    With ``overwrite=True`` a float64 input is used as scratch space.
    """
    a = np.asarray(a, dtype=float)
    n = a.shape[axis]
    mx = np.max(a, axis=axis, keepdims=True)
    safe = np.where(np.isfinite(mx), mx, 0.0)
    tmp = a if overwrite else a.copy()
    tmp -= safe
    np.exp(tmp, out=tmp)
    with np.errstate(divide="ignore"):
        out = np.log(tmp.sum(axis=axis) / n) + np.squeeze(safe, axis=axis)
    return out
