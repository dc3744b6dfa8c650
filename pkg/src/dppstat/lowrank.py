"""Low-rank kernel factorizations.

Two producers: column-subset (Nystrom) factors for Hermitian PSD kernels,
with landmark columns drawn by exact ridge leverage scores, and a
randomized range-finder SVD for arbitrary (possibly nonsymmetric) kernels.
Every operation takes an explicit seed or generator; there is no hidden
random state, so identical inputs reproduce identical factors.
"""

from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, InputError
from .kernels import HERMITIAN_TOL, DenseKernel, FactoredKernel, SvdFactors
from .laplace import DeltaDiagonal
from .linalg import is_hermitian

#: relative eigenvalue cutoff for the pseudo-inverse square root of the core block
CORE_CUTOFF = 1e-10
#: eigenvalues of a "PSD" input may dip this far below zero before being refused
PSD_SLACK = 1e-8


@dataclass(frozen=True)
class NystromConfig:
    """Column-subset factorization plan.

    ``ridge = None`` applies the effective-dimension default
    ``trace(K) / d`` at build time.
    """

    d: int
    ridge: float | None = None
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise InputError(f"target rank must be >= 1, got {self.d}")
        if self.ridge is not None and not self.ridge >= 0:
            raise InputError(f"ridge must be nonnegative, got {self.ridge}")


@dataclass(frozen=True)
class RandomizedSvdConfig:
    """Randomized range-finder plan: Gaussian sketch of width
    ``d + oversampling`` refined by ``power_iters`` subspace iterations."""

    d: int
    oversampling: int = 10
    power_iters: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise InputError(f"target rank must be >= 1, got {self.d}")
        if self.oversampling < 0 or self.power_iters < 0:
            raise InputError("oversampling and power_iters must be nonnegative")


def _require_hermitian_psd(k: DenseKernel, what):
    if not is_hermitian(k.entries, HERMITIAN_TOL):
        raise CapabilityError(f"{what} requires a Hermitian kernel")
    eigs = np.linalg.eigvalsh(0.5 * (k.entries + k.entries.conj().T))
    if eigs.min() < -PSD_SLACK * max(eigs.max(), 1.0):
        raise CapabilityError(
            f"{what} requires a positive semidefinite kernel "
            f"(smallest eigenvalue {eigs.min():.3e})")


def ridge_leverage_scores(k: DenseKernel, ridge: float) -> np.ndarray:
    """Exact ridge leverage scores ``(K (K + ridge I)^{-1})_{ii}``.

    Computed through the eigendecomposition with eigenvalues clipped at
    zero, which keeps every score in ``[0, 1)`` and their sum equal to the
    effective dimension ``trace(K (K + ridge I)^{-1})`` exactly.
    """
    if not ridge > 0:
        raise InputError(f"ridge must be positive, got {ridge}")
    _require_hermitian_psd(k, "leverage-score computation")
    lam, q = np.linalg.eigh(0.5 * (k.entries + k.entries.conj().T))
    lam = np.clip(lam, 0.0, None)
    weights = lam / (lam + ridge)
    scores = np.einsum("ij,j,ij->i", q.conj(), weights, q).real
    return scores


def _draws_without_replacement(weights, d, rng):
    """Sequential weighted draws with removal; uniform fallback once all
    remaining weight is exhausted."""
    w = np.asarray(weights, dtype=np.float64).copy()
    w[w < 0] = 0.0
    taken = np.zeros(w.size, dtype=bool)
    picks = np.empty(d, dtype=np.int64)
    for i in range(d):
        total = w.sum()
        if total > 0:
            picks[i] = rng.choice(w.size, p=w / total)
        else:
            remaining = np.flatnonzero(~taken)
            picks[i] = rng.choice(remaining)
        taken[picks[i]] = True
        w[picks[i]] = 0.0
    return np.sort(picks)


def nystrom(k: DenseKernel, cfg: NystromConfig) -> FactoredKernel:
    """Column-subset factor ``B = (K_Z)^{+1/2} K_{Z,:}`` with landmarks ``Z``
    drawn proportionally to ridge leverage scores, without replacement.

    The pseudo-inverse square root of the core block drops eigenvalues
    below ``1e-10`` times its largest one, so a rank-deficient core never
    raises.  The represented kernel ``B^H B`` agrees with ``K`` on the
    ``Z x Z`` block whenever the core is nonsingular, and never exceeds
    ``K`` in the semidefinite order.
    """
    if cfg.d > k.n:
        raise InputError(f"target rank {cfg.d} exceeds ground-set size {k.n}")
    _require_hermitian_psd(k, "column-subset factorization")
    ridge = cfg.ridge if cfg.ridge is not None else float(np.trace(k.entries).real) / cfg.d
    scores = ridge_leverage_scores(k, ridge)
    rng = np.random.default_rng(cfg.seed)
    z = _draws_without_replacement(scores, cfg.d, rng)

    core = k.entries[np.ix_(z, z)]
    lam, q = np.linalg.eigh(0.5 * (core + core.conj().T))
    keep = lam > CORE_CUTOFF * max(lam.max(), 0.0)
    if not np.any(keep):
        factor = np.zeros((cfg.d, k.n), dtype=k.entries.dtype)
        return FactoredKernel(factor=factor, conjugate=True)
    root = (q[:, keep] / np.sqrt(lam[keep])) @ q[:, keep].conj().T
    return FactoredKernel(factor=root @ k.entries[z, :], conjugate=True)


def _orthonormal_columns(a):
    q, _ = np.linalg.qr(a)
    return q


def _randomized_svd_core(matrix, d, oversampling, power_iters, rng) -> SvdFactors:
    n_rows, n_cols = matrix.shape
    width = min(d + oversampling, min(n_rows, n_cols))
    if d > min(n_rows, n_cols):
        raise InputError(f"target rank {d} exceeds matrix dimensions {matrix.shape}")
    if np.iscomplexobj(matrix):
        omega = rng.standard_normal((n_cols, width)) + 1j * rng.standard_normal((n_cols, width))
    else:
        omega = rng.standard_normal((n_cols, width))
    q = _orthonormal_columns(matrix @ omega)
    for _ in range(power_iters):
        q = _orthonormal_columns(matrix.conj().T @ q)
        q = _orthonormal_columns(matrix @ q)
    small = q.conj().T @ matrix
    u_small, sigma, vh = np.linalg.svd(small, full_matrices=False)
    u = q @ u_small
    return SvdFactors(u=u[:, :d], sigma=sigma[:d], v=vh[:d, :].conj().T)


def randomized_svd(m: DenseKernel, cfg: RandomizedSvdConfig,
                   rng=None) -> SvdFactors:
    """Rank-``d`` randomized SVD of an arbitrary square kernel.

    A Gaussian sketch captures the range, subspace iterations sharpen it
    for slowly decaying spectra, and a small exact SVD finishes.  Pass an
    explicit generator to override the config seed (used by per-node
    pipelines that spawn independent streams).
    """
    if cfg.d + cfg.oversampling > m.n:
        raise InputError(
            f"sketch width {cfg.d + cfg.oversampling} exceeds ground-set size {m.n}")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    return _randomized_svd_core(m.entries, cfg.d, cfg.oversampling, cfg.power_iters, rng)


def lowrank_of_weighted(m: DenseKernel, delta: DeltaDiagonal, cfg: RandomizedSvdConfig,
                        rng=None) -> SvdFactors:
    """Randomized SVD of the row-scaled matrix ``diag(delta) K``.

    The only n x n work is the single row scaling; the sketch then sees the
    weighted matrix, whose numerical rank is often far below the kernel's
    when many weights sit near zero.
    """
    if delta.n != m.n:
        raise InputError(f"weight length {delta.n} does not match kernel size {m.n}")
    if cfg.d + cfg.oversampling > m.n:
        raise InputError(
            f"sketch width {cfg.d + cfg.oversampling} exceeds ground-set size {m.n}")
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    weighted = delta.entries[:, None] * m.entries
    return _randomized_svd_core(weighted, cfg.d, cfg.oversampling, cfg.power_iters, rng)
