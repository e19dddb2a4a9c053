"""Unconstrained real parameterization of density matrices.

Any finite real vector of length n^2 maps to a physical state: the
vector fills a lower-triangular factor T (n real diagonal entries, then
re/im pairs for the strictly-lower triangle, row-major) and the state is
``rho = T^H T / Tr(T^H T)``.  Positivity, Hermiticity and unit trace
hold by construction, so a simplex optimizer can roam the whole of R^(n^2).

The overall scale of the vector is a gauge freedom: ``p`` and ``c * p``
produce the same state, which realizes the n^2 - 1 physical degrees of
freedom with one redundant direction.
"""

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateParams, DimensionMismatch, FactorizationFailure
from .dynamics import DensityMatrix

RANK_JITTER = 1e-12

_tri_cache = {}


def _tri_indices(dim):
    """Cached (diag, lower-rows, lower-cols) index arrays for dim."""
    found = _tri_cache.get(dim)
    if found is None:
        diag = np.arange(dim)
        rows, cols = np.tril_indices(dim, -1)
        found = (diag, rows, cols)
        _tri_cache[dim] = found
    return found


@dataclass(frozen=True, eq=False)
class StateParams:
    """Real vector of length dim^2 encoding a density matrix."""

    dim: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float).ravel()
        if v.size != self.dim * self.dim:
            raise DimensionMismatch(
                f"need {self.dim * self.dim} parameters for dim {self.dim}, got {v.size}"
            )
        if not np.all(np.isfinite(v)):
            raise DegenerateParams("parameter vector contains non-finite entries")
        object.__setattr__(self, "values", v)


def factor_from_values(values, dim):
    """Assemble the lower-triangular factor T from a raw parameter vector."""
    diag, rows, cols = _tri_indices(dim)
    T = np.zeros((dim, dim), dtype=complex)
    T[diag, diag] = values[:dim]
    T[rows, cols] = values[dim::2] + 1j * values[dim + 1 :: 2]
    return T


def rho_matrix_from_values(values, dim):
    """Raw-array fast path: normalized T^H T without DensityMatrix checks.

    Tr(T^H T) equals |values|^2 because every parameter enters T exactly once.
    """
    norm = float(values @ values)
    if norm < 1e-300:
        raise DegenerateParams("all-zero parameter vector has no direction")
    T = factor_from_values(values, dim)
    return (T.conj().T @ T) / norm


def params_to_rho(p):
    """Map a parameter vector to its density matrix (total up to gauge)."""
    return DensityMatrix(rho_matrix_from_values(p.values, p.dim))


def rho_to_params(rho):
    """Invert params_to_rho via a reverse-Cholesky factorization.

    Finds lower-triangular T with positive diagonal and rho = T^H T by
    flipping the basis, running a standard Cholesky, and flipping back.
    Rank-deficient states get a RANK_JITTER * I nudge before retrying;
    a second failure raises FactorizationFailure.
    """
    m = rho.matrix
    dim = rho.dim
    flipped = m[::-1, ::-1]
    try:
        L = np.linalg.cholesky(flipped)
    except np.linalg.LinAlgError:
        try:
            L = np.linalg.cholesky(flipped + RANK_JITTER * np.eye(dim))
        except np.linalg.LinAlgError:
            raise FactorizationFailure(
                "state is numerically indefinite even after diagonal jitter"
            ) from None
    T = L[::-1, ::-1].conj().T
    diag, rows, cols = _tri_indices(dim)
    values = np.empty(dim * dim)
    values[:dim] = T[diag, diag].real
    lower = T[rows, cols]
    values[dim::2] = lower.real
    values[dim + 1 :: 2] = lower.imag
    return StateParams(dim=dim, values=values)
