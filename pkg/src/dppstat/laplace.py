"""Transform of a linear statistic as a single determinant.

For a process with marginal kernel K and statistic psi, the transform
``E[exp(-s * Lambda)]`` equals ``det(I - D K)`` where ``D`` is diagonal
with entries ``1 - exp(-s psi(i))``.  The diagonal is kept as a vector and
applied by row scaling, never materialized as a matrix.  Low-rank kernel
representations reduce the n x n determinant to a d x d one through the
two-sided spectrum identity ``det(I + PQ) = det(I + QP)``.

Evaluations at distinct arguments ``s`` are independent pure computations
and safe to run concurrently.
"""

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .kernels import DenseKernel, FactoredKernel, LinearStatistic, SvdFactors
from .linalg import complex_det, one_minus_exp


@dataclass(frozen=True)
class DeltaDiagonal:
    """Diagonal weights ``1 - exp(-s psi(i))`` for a fixed argument ``s``."""

    s: complex
    entries: np.ndarray

    @property
    def n(self):
        return self.entries.shape[0]


def delta_diagonal(psi: LinearStatistic, s: complex) -> DeltaDiagonal:
    """Build the diagonal weight vector for argument ``s``.

    Uses ``-expm1(-s psi)`` so entries stay accurate when ``s psi(i)`` is
    tiny (statistics concentrated near zero are the common case).
    """
    s = complex(s)
    if not (np.isfinite(s.real) and np.isfinite(s.imag)):
        raise InputError(f"laplace argument must be finite, got {s}")
    arg = s * psi.values.astype(np.complex128)
    entries = one_minus_exp(arg)
    if s.imag == 0 and not np.iscomplexobj(psi.values):
        entries = entries.real.copy()
    entries.flags.writeable = False
    return DeltaDiagonal(s=s, entries=entries)


def _check_lengths(n_kernel, psi):
    if psi.n != n_kernel:
        raise InputError(f"statistic length {psi.n} does not match kernel size {n_kernel}")


def laplace_dense(k: DenseKernel, psi: LinearStatistic, s: complex) -> complex:
    """Transform value ``det(I - D K)`` from the full kernel; O(n^3).

    Equals exactly 1 at ``s = 0``.
    """
    _check_lengths(k.n, psi)
    delta = delta_diagonal(psi, s)
    m = -delta.entries[:, None] * k.entries
    m[np.diag_indices_from(m)] += 1.0
    return complex_det(m)


def laplace_lowrank(b: FactoredKernel, psi: LinearStatistic, s: complex) -> complex:
    """Transform value from a factored kernel: the d x d determinant
    ``det(I_d - B D B^T)`` (conjugate-transposed when the factor says so);
    O(n d^2)."""
    _check_lengths(b.n, psi)
    delta = delta_diagonal(psi, s)
    right = b.factor.conj().T if b.conjugate else b.factor.T
    core = (b.factor * delta.entries[None, :]) @ right
    m = -core
    m[np.diag_indices_from(m)] += 1.0
    return complex_det(m)


def laplace_svd(f: SvdFactors, psi: LinearStatistic, s: complex) -> complex:
    """Transform value from singular factors of the kernel itself:
    ``det(I_d - S^(1/2) V^H D U S^(1/2))`` with ``S = diag(sigma)``; O(n d^2)."""
    _check_lengths(f.n, psi)
    delta = delta_diagonal(psi, s)
    root = np.sqrt(f.sigma)
    inner = f.v.conj().T @ (delta.entries[:, None] * f.u)
    m = -(root[:, None] * inner * root[None, :])
    m[np.diag_indices_from(m)] += 1.0
    return complex_det(m)


def laplace_weighted_svd(f: SvdFactors) -> complex:
    """Transform value when the factors approximate the already-weighted
    matrix ``D K`` (the per-argument low-rank path): ``det(I - U S V^H)``
    reduced to ``det(I_d - S^(1/2) V^H U S^(1/2))``."""
    root = np.sqrt(f.sigma)
    inner = f.v.conj().T @ f.u
    m = -(root[:, None] * inner * root[None, :])
    m[np.diag_indices_from(m)] += 1.0
    return complex_det(m)
