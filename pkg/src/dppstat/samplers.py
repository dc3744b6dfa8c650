"""Sampler baselines and exact oracles.

Two independent routes to ground truth at desk scale:

* the spectral sampler (Bernoulli selection of eigenvectors followed by
  sequential conditional draws with rank-one kernel updates) for Hermitian
  kernels with spectrum in [0, 1];
* exhaustive subset enumeration of the likelihood atoms
  ``P(X = A) = det(L_A) / det(I + L)`` for any valid likelihood kernel with
  ``n <= 15``, from which exact statistic distributions, exact samplers and
  empirical baselines are built.

Samplers take an explicit generator; batch helpers take a seed and record
it next to a fingerprint of the kernel they sampled.
"""

import hashlib
import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import CapabilityError, InputError, InvalidKernelError, SamplerWarning
from .kernels import (HERMITIAN_TOL, DenseKernel, LinearStatistic, _check_indices,
                      all_principal_minors, evaluate_statistic, k_to_l)
from .linalg import complex_det, is_hermitian

#: slack on the spectrum allowed before the spectral sampler refuses a kernel
SPECTRUM_TOL = 1e-8
#: atom probabilities below -ATOM_TOL invalidate a likelihood kernel
ATOM_TOL = 1e-9


def kernel_fingerprint(kernel: DenseKernel) -> str:
    """Short content hash of a kernel, for provenance headers."""
    h = hashlib.sha256()
    h.update(str(kernel.entries.shape).encode())
    h.update(str(kernel.entries.dtype).encode())
    h.update(np.ascontiguousarray(kernel.entries).tobytes())
    return h.hexdigest()[:16]


@dataclass(frozen=True)
class SampleBatch:
    """Realized subsets plus the seed and kernel fingerprint that produced them."""

    subsets: tuple
    kernel_fingerprint: str
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "subsets", tuple(tuple(int(i) for i in s) for s in self.subsets))

    @property
    def m(self):
        return len(self.subsets)


# ---------------------------------------------------------------------------
# spectral sampler
# ---------------------------------------------------------------------------

def _spectrum_or_refuse(k: DenseKernel):
    if not is_hermitian(k.entries, HERMITIAN_TOL):
        raise CapabilityError(
            "the spectral sampler requires a Hermitian kernel; "
            "use the enumeration sampler for small nonsymmetric kernels")
    sym = 0.5 * (k.entries + k.entries.conj().T)
    lam, phi = np.linalg.eigh(sym)
    if lam.min() < -SPECTRUM_TOL or lam.max() > 1.0 + SPECTRUM_TOL:
        raise CapabilityError(
            f"spectrum [{lam.min():.3e}, {lam.max():.3e}] leaves [0, 1] beyond "
            f"tolerance {SPECTRUM_TOL:.0e}")
    return np.clip(lam, 0.0, 1.0), phi


def _hkpv_from_spectrum(lam, phi, rng):
    """One draw given the spectral decomposition.

    The conditional kernel ``H`` of the sequential phase is maintained in
    factored form ``H = V V^H`` (V keeps orthonormal columns), so the
    rank-one update ``H <- H - H_ee^{-1} H_{:e} H_{e:}`` becomes a
    Householder rotation of the columns followed by dropping the rotated
    direction.  Diagonals of H are then row norms and stay nonnegative by
    construction.
    """
    bern = rng.random(lam.size) < lam
    v = phi[:, bern].copy()
    target = v.shape[1]
    chosen: list[int] = []
    for _ in range(target):
        diag = np.einsum("ij,ij->i", v.conj(), v).real
        if chosen:
            diag[chosen] = 0.0
        if diag.min() < -SPECTRUM_TOL:
            warnings.warn(f"conditional weight clamped from {diag.min():.3e} to 0",
                          SamplerWarning, stacklevel=3)
        diag = np.clip(diag, 0.0, None)
        total = diag.sum()
        if total <= 0:
            break  # exhausted support; numerically possible only at machine scale
        eta = int(rng.choice(diag.size, p=diag / total))
        chosen.append(eta)

        w = v[eta, :].conj()
        norm_w = np.linalg.norm(w)
        if norm_w == 0:
            v = v[:, 1:]
            continue
        w = w / norm_w
        # Householder sending w to a unit multiple of e_0 without cancellation
        phase = w[0] / abs(w[0]) if abs(w[0]) > 0 else 1.0
        hv = w.copy()
        hv[0] += phase
        coeff = 2.0 / np.vdot(hv, hv).real
        v = v - np.outer((v @ hv) * coeff, hv.conj())
        v = v[:, 1:]
    return tuple(sorted(chosen))


def hkpv_sample(k: DenseKernel, rng) -> tuple:
    """One realization of the process by the spectral algorithm.

    Decomposes ``K``, keeps eigenvector ``i`` with probability
    ``lambda_i`` (eigenvalues clipped into [0, 1]), then draws that many
    items sequentially with probabilities proportional to the diagonal of
    the updated conditional kernel.  Returns the sorted index tuple.
    """
    lam, phi = _spectrum_or_refuse(k)
    return _hkpv_from_spectrum(lam, phi, rng)


def hkpv_batch(k: DenseKernel, m: int, seed: int) -> SampleBatch:
    """``m`` independent spectral-sampler draws sharing one decomposition."""
    if m < 1:
        raise InputError(f"batch size must be >= 1, got {m}")
    lam, phi = _spectrum_or_refuse(k)
    rng = np.random.default_rng(seed)
    subsets = [_hkpv_from_spectrum(lam, phi, rng) for _ in range(m)]
    return SampleBatch(subsets=tuple(subsets), kernel_fingerprint=kernel_fingerprint(k), seed=seed)


# ---------------------------------------------------------------------------
# exhaustive enumeration
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AtomTable:
    """Probabilities of all ``2^n`` outcomes, indexed by subset bitmask."""

    n: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=np.float64, copy=True)
        if p.shape != (1 << self.n,):
            raise InputError(f"expected 2^{self.n} probabilities, got shape {p.shape}")
        p.flags.writeable = False
        object.__setattr__(self, "probs", p)

    @staticmethod
    def mask_of(subset, n) -> int:
        idx = _check_indices(subset, n)
        mask = 0
        for i in idx:
            mask |= 1 << int(i)
        return mask

    def subset_of(self, mask: int) -> tuple:
        return tuple(i for i in range(self.n) if (mask >> i) & 1)

    def probability(self, subset) -> float:
        return float(self.probs[self.mask_of(subset, self.n)])

    def marginal(self, subset) -> float:
        """Inclusion probability ``P(A subseteq X)`` recovered from the atoms."""
        amask = self.mask_of(subset, self.n)
        masks = np.arange(self.probs.size)
        return float(self.probs[(masks & amask) == amask].sum())


def brute_force_atoms(l: DenseKernel) -> AtomTable:
    """Full atom table ``P(X = A) = det(L_A) / det(I + L)`` by enumeration.

    Requires ``n <= 15``.  Raises :class:`InvalidKernelError` when the
    normalizer vanishes, an atom is negative beyond ``1e-9``, an atom has a
    non-real residue, or the atoms fail to sum to one within ``1e-9``
    (the subset-sum determinant identity).
    """
    n = l.n
    normalizer = complex_det(np.eye(n, dtype=l.entries.dtype) + l.entries)
    if normalizer == 0:
        raise InvalidKernelError("det(I + L) = 0: likelihood kernel defines no law")
    atoms = all_principal_minors(l.entries) / normalizer
    worst_imag = float(np.max(np.abs(atoms.imag)))
    if worst_imag > ATOM_TOL:
        raise InvalidKernelError(f"atom with imaginary residue {worst_imag:.3e}")
    probs = atoms.real.copy()
    if probs.min() < -ATOM_TOL:
        raise InvalidKernelError(f"negative atom probability {probs.min():.3e}")
    total = probs.sum()
    if abs(total - 1.0) > ATOM_TOL:
        raise InvalidKernelError(f"atoms sum to {total!r}, not 1")
    return AtomTable(n=n, probs=probs)


def _statistic_per_mask(psi_values, n):
    """Statistic value of every bitmask via the one-bit recurrence."""
    size = 1 << n
    vals = np.zeros(size)
    for mask in range(1, size):
        low = mask & -mask
        vals[mask] = vals[mask ^ low] + psi_values[low.bit_length() - 1]
    return vals


@dataclass(frozen=True)
class ExactCdf:
    """Piecewise-constant distribution function with known jumps.

    ``jumps`` are the distinct statistic values (sorted), ``masses`` their
    probabilities, ``cdf`` the cumulative mass at each jump.
    """

    jumps: np.ndarray
    masses: np.ndarray

    def __post_init__(self):
        j = np.array(self.jumps, dtype=np.float64, copy=True)
        w = np.array(self.masses, dtype=np.float64, copy=True)
        if j.ndim != 1 or j.shape != w.shape or j.size == 0:
            raise InputError("jumps and masses must be matching nonempty vectors")
        if np.any(np.diff(j) <= 0):
            raise InputError("jumps must be strictly increasing")
        for a in (j, w):
            a.flags.writeable = False
        object.__setattr__(self, "jumps", j)
        object.__setattr__(self, "masses", w)

    @classmethod
    def from_atoms(cls, table: AtomTable, psi: LinearStatistic) -> "ExactCdf":
        if psi.n != table.n:
            raise InputError(f"statistic length {psi.n} does not match table n = {table.n}")
        if np.iscomplexobj(psi.values):
            raise InputError("exact statistic distributions require a real statistic")
        vals = _statistic_per_mask(psi.values, table.n)
        jumps, inverse = np.unique(vals, return_inverse=True)
        masses = np.bincount(inverse, weights=table.probs, minlength=jumps.size)
        return cls(jumps=jumps, masses=masses)

    @property
    def cdf(self):
        return np.cumsum(self.masses)

    @property
    def total_mass(self):
        return float(self.masses.sum())

    def evaluate(self, t):
        """Right-continuous CDF value(s) at ``t``."""
        idx = np.searchsorted(self.jumps, t, side="right")
        cum = np.concatenate([[0.0], self.cdf])
        return cum[idx]

    def evaluate_left(self, t):
        """Left limit ``F(t-)``."""
        idx = np.searchsorted(self.jumps, t, side="left")
        cum = np.concatenate([[0.0], self.cdf])
        return cum[idx]

    def mean(self):
        return float(self.jumps @ self.masses)

    def std(self):
        mu = self.mean()
        return float(math.sqrt(max(((self.jumps - mu) ** 2) @ self.masses, 0.0)))


def brute_force_statistic_cdf(l: DenseKernel, psi: LinearStatistic) -> ExactCdf:
    """Exact distribution of the statistic by aggregating likelihood atoms."""
    return ExactCdf.from_atoms(brute_force_atoms(l), psi)


def sample_atoms(table: AtomTable, rng, size: int | None = None):
    """Inverse-CDF draws from an atom table, in fixed bitmask order."""
    cum = np.cumsum(table.probs)
    cum = cum / cum[-1]
    if size is None:
        mask = int(np.searchsorted(cum, rng.random(), side="right"))
        return table.subset_of(min(mask, cum.size - 1))
    masks = np.searchsorted(cum, rng.random(size), side="right")
    masks = np.minimum(masks, cum.size - 1)
    return [table.subset_of(int(m)) for m in masks]


def brute_force_sample(l: DenseKernel, rng) -> tuple:
    """One exact draw by inverse transform over the enumerated atoms."""
    return sample_atoms(brute_force_atoms(l), rng)


def brute_force_batch(l: DenseKernel, m: int, seed: int) -> SampleBatch:
    """``m`` exact draws sharing one enumeration of the atom table."""
    if m < 1:
        raise InputError(f"batch size must be >= 1, got {m}")
    table = brute_force_atoms(l)
    subsets = sample_atoms(table, np.random.default_rng(seed), size=m)
    return SampleBatch(subsets=tuple(subsets),
                       kernel_fingerprint=kernel_fingerprint(l), seed=seed)


# ---------------------------------------------------------------------------
# empirical distribution and bands
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EmpiricalCdf:
    """Empirical CDF of statistic values with a distribution-free band.

    The band half-width is ``sqrt(ln(2 / delta) / (2 m))``; it covers the
    true CDF uniformly with probability at least ``1 - delta``.
    """

    y_sorted: np.ndarray
    delta: float

    def __post_init__(self):
        y = np.array(self.y_sorted, dtype=np.float64, copy=True)
        if y.ndim != 1 or y.size < 1:
            raise InputError("need at least one sample value")
        if not 0 < self.delta < 1:
            raise InputError(f"delta must lie in (0, 1), got {self.delta}")
        y = np.sort(y)
        y.flags.writeable = False
        object.__setattr__(self, "y_sorted", y)

    @property
    def m(self):
        return self.y_sorted.size

    @property
    def band_half_width(self):
        return math.sqrt(math.log(2.0 / self.delta) / (2.0 * self.m))

    def evaluate(self, t):
        return np.searchsorted(self.y_sorted, t, side="right") / self.m

    def evaluate_left(self, t):
        return np.searchsorted(self.y_sorted, t, side="left") / self.m

    def band(self, t):
        """Lower and upper band edges at ``t``, clipped to [0, 1]."""
        f = self.evaluate(t)
        h = self.band_half_width
        return np.clip(f - h, 0.0, 1.0), np.clip(f + h, 0.0, 1.0)


def empirical_cdf(batch: SampleBatch, psi: LinearStatistic, delta: float) -> EmpiricalCdf:
    """Empirical CDF of the statistic over a sample batch."""
    if batch.m < 1:
        raise InputError("empty sample batch")
    ys = np.array([evaluate_statistic(psi, s) for s in batch.subsets], dtype=np.float64)
    return EmpiricalCdf(y_sorted=ys, delta=delta)


def sup_distance(a, b) -> float:
    """Exact sup-norm distance between two step CDFs.

    Both arguments expose ``evaluate`` / ``evaluate_left`` and a breakpoint
    vector (``jumps`` or ``y_sorted``).  The supremum over the line is
    attained at a breakpoint of one of the two, from the left or the right.
    """
    pts = np.concatenate([
        np.asarray(getattr(a, "jumps", getattr(a, "y_sorted", None))),
        np.asarray(getattr(b, "jumps", getattr(b, "y_sorted", None))),
    ])
    pts = np.unique(pts)
    right = np.max(np.abs(np.asarray(a.evaluate(pts)) - np.asarray(b.evaluate(pts))))
    left = np.max(np.abs(np.asarray(a.evaluate_left(pts)) - np.asarray(b.evaluate_left(pts))))
    return float(max(right, left))


# ---------------------------------------------------------------------------
# counting statistics
# ---------------------------------------------------------------------------

def bernoulli_convolution_pmf(probabilities) -> np.ndarray:
    """PMF of a sum of independent Bernoulli variables, by direct convolution."""
    p = np.asarray(probabilities, dtype=np.float64)
    pmf = np.array([1.0])
    for pi in p:
        nxt = np.zeros(pmf.size + 1)
        nxt[:-1] += pmf * (1.0 - pi)
        nxt[1:] += pmf * pi
        pmf = nxt
    return pmf


@dataclass(frozen=True)
class CountingCheckReport:
    """Agreement report between the two exact laws of a counting statistic."""

    subset: tuple
    spectrum: np.ndarray
    sup_distance: float


def counting_statistic_spectrum_check(k: DenseKernel, a) -> CountingCheckReport:
    """Cross-check the law of ``|X intersect A|`` along two exact routes.

    Route one: the number of points in ``A`` is a sum of independent
    Bernoulli variables with parameters the eigenvalues of ``K_A``
    (convolved directly).  Route two: enumeration of the likelihood atoms
    aggregated by the indicator statistic.  Reports the sup distance of the
    two CDFs over the integer support.
    """
    idx = _check_indices(a, k.n)
    if len(idx) > 12:
        raise InputError(f"counting check is limited to |A| <= 12, got {len(idx)}")
    if not is_hermitian(k.entries, HERMITIAN_TOL):
        raise CapabilityError("counting-statistic law requires a Hermitian kernel")
    if idx.size == 0:
        return CountingCheckReport(subset=(), spectrum=np.zeros(0), sup_distance=0.0)
    sub = k.entries[np.ix_(idx, idx)]
    spectrum = np.linalg.eigvalsh(0.5 * (sub + sub.conj().T))
    spectrum = np.clip(spectrum, 0.0, 1.0)
    bern_cdf = np.cumsum(bernoulli_convolution_pmf(spectrum))

    indicator = np.zeros(k.n)
    indicator[idx] = 1.0
    enum = brute_force_statistic_cdf(k_to_l(k), LinearStatistic(indicator, nonnegative=True))
    counts = np.arange(len(idx) + 1, dtype=np.float64)
    enum_cdf = enum.evaluate(counts)
    dist = float(np.max(np.abs(enum_cdf - bern_cdf)))
    return CountingCheckReport(subset=tuple(int(i) for i in idx),
                               spectrum=spectrum, sup_distance=dist)
