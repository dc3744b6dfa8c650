"""Kernel containers, conversions between the marginal and likelihood
parametrizations, validity diagnostics, and linear statistics.

Two matrix roles share the :class:`DenseKernel` container: the marginal
kernel ``K`` (principal minors are inclusion probabilities) and the
likelihood kernel ``L`` (principal minors are unnormalized atom masses).
The operation consuming the value decides the role.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, ConditioningError, InputError
from .linalg import complex_det, condition_number, is_hermitian

#: relative tolerance for the Hermitian-symmetry diagnostic
HERMITIAN_TOL = 1e-10
#: condition number above which K <-> L conversions are refused
CONDITION_LIMIT = 1e12
#: largest ground-set size for which subsets are enumerated (2^15 subsets)
ENUMERATION_CAP = 15
#: slack allowed on spectra and atom probabilities before declaring invalidity
VALIDITY_SLACK = 1e-10


def _as_matrix(entries):
    a = np.array(entries, copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InputError(f"kernel must be a square matrix with n >= 1, got shape {a.shape}")
    if not np.issubdtype(a.dtype, np.number):
        raise InputError(f"kernel entries must be numeric, got dtype {a.dtype}")
    if np.issubdtype(a.dtype, np.complexfloating):
        a = a.astype(np.complex128)
    else:
        a = a.astype(np.float64)
    if not np.all(np.isfinite(a.view(np.float64) if a.dtype == np.complex128 else a)):
        raise InputError("kernel entries must be finite")
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class DenseKernel:
    """Square kernel matrix over a ground set of ``n`` items.

    Real input is kept in float64, complex input in complex128.  The
    array is frozen after construction; all operations are pure.
    """

    entries: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "entries", _as_matrix(self.entries))

    @property
    def n(self):
        return self.entries.shape[0]

    @property
    def is_complex(self):
        return np.issubdtype(self.entries.dtype, np.complexfloating)


@dataclass(frozen=True)
class FactoredKernel:
    """Rank-``d`` factor ``B`` (d x n) representing ``K = B^T B``.

    With ``conjugate=True`` the represented kernel is ``B^H B`` instead;
    the two coincide for real factors.
    """

    factor: np.ndarray
    conjugate: bool = False

    def __post_init__(self):
        a = np.array(self.factor, copy=True)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise InputError(f"factor must be a d x n matrix, got shape {a.shape}")
        if a.shape[0] > a.shape[1]:
            raise InputError(f"factor rank d={a.shape[0]} exceeds ground-set size n={a.shape[1]}")
        a = a.astype(np.complex128 if np.iscomplexobj(a) else np.float64)
        if not np.all(np.isfinite(a.view(np.float64) if a.dtype == np.complex128 else a)):
            raise InputError("factor entries must be finite")
        a.flags.writeable = False
        object.__setattr__(self, "factor", a)

    @property
    def d(self):
        return self.factor.shape[0]

    @property
    def n(self):
        return self.factor.shape[1]

    def dense(self):
        """Materialize the represented kernel as a :class:`DenseKernel`."""
        b = self.factor
        bt = b.conj().T if self.conjugate else b.T
        return DenseKernel(bt @ b)


#: operator-norm tolerance on factor orthonormality
ORTHONORMALITY_TOL = 1e-8


@dataclass(frozen=True)
class SvdFactors:
    """Rank-``d`` singular factors ``(u, sigma, v)`` with ``M ~= u @ diag(sigma) @ v^H``.

    ``sigma`` is real, nonnegative and nonincreasing; the columns of ``u``
    and ``v`` are orthonormal to :data:`ORTHONORMALITY_TOL` in operator norm.
    """

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, copy=True)
        v = np.array(self.v, copy=True)
        sig = np.array(self.sigma, dtype=np.float64, copy=True)
        if u.ndim != 2 or v.ndim != 2 or sig.ndim != 1:
            raise InputError("u and v must be n x d matrices, sigma a length-d vector")
        if u.shape != v.shape or u.shape[1] != sig.shape[0]:
            raise InputError(
                f"inconsistent factor shapes u={u.shape} sigma={sig.shape} v={v.shape}")
        if np.any(sig < 0) or np.any(np.diff(sig) > 0):
            raise InputError("sigma must be nonnegative and nonincreasing")
        if not (np.all(np.isfinite(u.real)) and np.all(np.isfinite(u.imag))
                and np.all(np.isfinite(v.real)) and np.all(np.isfinite(v.imag))
                and np.all(np.isfinite(sig))):
            raise InputError("factor entries must be finite")
        for name, m in (("u", u), ("v", v)):
            gram = m.conj().T @ m
            dev = np.linalg.norm(gram - np.eye(m.shape[1]), ord=2)
            if dev > ORTHONORMALITY_TOL:
                raise InputError(f"columns of {name} deviate from orthonormal by {dev:.2e}")
        u = u.astype(np.complex128 if np.iscomplexobj(u) else np.float64)
        v = v.astype(np.complex128 if np.iscomplexobj(v) else np.float64)
        for m in (u, v, sig):
            m.flags.writeable = False
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "sigma", sig)
        object.__setattr__(self, "v", v)

    @property
    def d(self):
        return self.sigma.shape[0]

    @property
    def n(self):
        return self.u.shape[0]

    def dense(self):
        """Materialize ``u @ diag(sigma) @ v^H`` as a :class:`DenseKernel`."""
        return DenseKernel((self.u * self.sigma) @ self.v.conj().T)


@dataclass(frozen=True)
class LinearStatistic:
    """Per-item values of a linear observable ``sum_{x in X} psi(x)``.

    Complex values are accepted for raw transform evaluation only; the
    ``nonnegative`` flag certifies real, nonnegative values and is required
    by every CDF-facing consumer.
    """

    values: np.ndarray
    nonnegative: bool = False

    def __post_init__(self):
        a = np.array(self.values, copy=True)
        if a.ndim != 1 or a.size < 1:
            raise InputError(f"statistic values must be a nonempty vector, got shape {a.shape}")
        a = a.astype(np.complex128 if np.iscomplexobj(a) else np.float64)
        if not np.all(np.isfinite(a.view(np.float64) if a.dtype == np.complex128 else a)):
            raise InputError("statistic values must be finite")
        if self.nonnegative:
            if np.iscomplexobj(a):
                raise InputError("a nonnegative statistic cannot carry complex values")
            if np.any(a < 0):
                raise InputError("statistic flagged nonnegative has negative entries")
        a.flags.writeable = False
        object.__setattr__(self, "values", a)

    @property
    def n(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class KernelDiagnostics:
    """Validity report for a kernel in the marginal (``K``) role.

    ``spectrum_in_unit_interval`` is ``None`` for non-Hermitian input, and
    ``min_atom_probability`` is ``None`` whenever subset enumeration was
    skipped.  A valid process requires the minimum atom probability to be
    ``>= -1e-10``.
    """

    hermitian: bool
    spectrum_in_unit_interval: bool | None
    min_atom_probability: float | None
    max_subset_size_checked: int

    @property
    def enumerated(self):
        return self.min_atom_probability is not None


def _check_indices(subset, n):
    idx = np.asarray(list(subset), dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise InputError(f"subset indices must lie in [0, {n})")
    if np.unique(idx).size != idx.size:
        raise InputError("subset indices must be distinct")
    return idx


def marginal(kernel: DenseKernel, subset) -> complex:
    """Inclusion probability ``P(A subseteq X)`` as the principal minor of K.

    The empty subset returns 1.
    """
    idx = _check_indices(subset, kernel.n)
    if idx.size == 0:
        return 1.0 + 0.0j
    return complex_det(kernel.entries[np.ix_(idx, idx)])


def evaluate_statistic(psi: LinearStatistic, subset):
    """Value of the statistic on a realized subset: ``sum_{i in A} psi(i)``."""
    idx = _check_indices(subset, psi.n)
    if idx.size == 0:
        return 0.0 if not np.iscomplexobj(psi.values) else 0.0 + 0.0j
    return psi.values[idx].sum()


def l_to_k(l: DenseKernel) -> DenseKernel:
    """Marginal kernel ``K = (I + L)^{-1} L`` of an L-ensemble."""
    n = l.n
    a = np.eye(n, dtype=l.entries.dtype) + l.entries
    cond = condition_number(a)
    if not np.isfinite(cond) or cond >= CONDITION_LIMIT:
        raise ConditioningError(
            f"I + L has condition number {cond:.3e} (limit {CONDITION_LIMIT:.0e})", cond=cond)
    return DenseKernel(np.linalg.solve(a, l.entries))


def k_to_l(k: DenseKernel) -> DenseKernel:
    """Likelihood kernel ``L = (I - K)^{-1} K``; fails when 1 is in the
    spectrum of K (projection directions).  Thin the kernel first
    (:func:`thin_kernel`) to restore invertibility."""
    n = k.n
    a = np.eye(n, dtype=k.entries.dtype) - k.entries
    cond = condition_number(a)
    if not np.isfinite(cond) or cond >= CONDITION_LIMIT:
        raise ConditioningError(
            f"I - K has condition number {cond:.3e} (limit {CONDITION_LIMIT:.0e}); "
            "the kernel has an eigenvalue at or near 1", cond=cond)
    return DenseKernel(np.linalg.solve(a, k.entries))


def thin_kernel(k: DenseKernel, eps: float) -> DenseKernel:
    """Kernel of the independently thinned process, ``(1 + eps)^{-1} K``.

    Retaining each sampled item with probability ``(1 + eps)^{-1}`` maps the
    process with kernel K to the process with the returned kernel, which has
    an L-ensemble for all but finitely many ``eps``.
    """
    if not eps > 0:
        raise InputError(f"eps must be positive, got {eps}")
    return DenseKernel(k.entries / (1.0 + eps))


def all_principal_minors(entries: np.ndarray) -> np.ndarray:
    """Determinants of every principal submatrix, indexed by subset bitmask.

    Batched by subset size (one stacked determinant call per size), which
    keeps full enumeration at ``n = 15`` well under a second.  Plain
    products are safe here: minors of order <= 15 cannot leave the double
    range for finite entries.
    """
    from itertools import combinations

    n = entries.shape[0]
    if n > ENUMERATION_CAP:
        raise CapabilityError(f"subset enumeration is capped at n <= {ENUMERATION_CAP}, got n = {n}")
    size = 1 << n
    minors = np.empty(size, dtype=np.complex128)
    minors[0] = 1.0
    for k in range(1, n + 1):
        combos = list(combinations(range(n), k))
        stack = np.empty((len(combos), k, k), dtype=entries.dtype)
        masks = np.empty(len(combos), dtype=np.int64)
        for j, combo in enumerate(combos):
            ci = np.asarray(combo)
            stack[j] = entries[np.ix_(ci, ci)]
            masks[j] = np.bitwise_or.reduce(1 << ci)
        minors[masks] = np.linalg.det(stack)
    return minors


def _superset_moebius(table: np.ndarray, n: int) -> np.ndarray:
    """Superset Moebius transform ``g(A) = sum_{B >= A} (-1)^{|B \\ A|} f(B)``,
    vectorized one bit axis at a time."""
    cube = table.copy().reshape((2,) * n)
    for axis in range(n):
        unset = [slice(None)] * n
        is_set = [slice(None)] * n
        unset[axis] = 0
        is_set[axis] = 1
        cube[tuple(unset)] -= cube[tuple(is_set)]
    return cube.reshape(-1)


def atom_probabilities(kernel: DenseKernel) -> np.ndarray:
    """All ``2^n`` atom probabilities ``P(X = A)`` from the marginal kernel.

    Entry ``mask`` holds the atom of the subset whose members are the set
    bits of ``mask``.  Derived from the inclusion probabilities by
    inclusion-exclusion over the subset lattice, so no likelihood kernel is
    required; projection kernels are handled too.  Imaginary residues of
    the minors are discarded.  Requires ``n <= 15``.
    """
    minors = all_principal_minors(kernel.entries)
    return _superset_moebius(minors.real, kernel.n)


def validate_kernel(k: DenseKernel, max_subset: int = ENUMERATION_CAP) -> KernelDiagnostics:
    """Validity diagnostics for a kernel in the marginal role.

    Always reports Hermitian symmetry (to :data:`HERMITIAN_TOL` relative)
    and, for Hermitian input, whether the spectrum lies in
    ``[-1e-10, 1 + 1e-10]``.  When ``n <= max_subset`` the full atom table
    is enumerated and its minimum reported; a minimum below ``-1e-10``
    means the matrix defines no probability law, and a kernel whose minors
    carry an imaginary residue beyond that slack reports ``-inf``.
    Enumeration beyond ``n = 15`` is refused.
    """
    hermitian = is_hermitian(k.entries, HERMITIAN_TOL)
    spectrum_ok = None
    if hermitian:
        eigs = np.linalg.eigvalsh(0.5 * (k.entries + k.entries.conj().T))
        spectrum_ok = bool(eigs.min() >= -VALIDITY_SLACK and eigs.max() <= 1.0 + VALIDITY_SLACK)
    min_atom = None
    checked = 0
    if k.n <= max_subset:
        if k.n > ENUMERATION_CAP:
            raise CapabilityError(
                f"enumeration requested for n = {k.n} but the cap is {ENUMERATION_CAP}")
        minors = all_principal_minors(k.entries)
        if np.max(np.abs(minors.imag)) > VALIDITY_SLACK:
            min_atom = -np.inf
        else:
            min_atom = float(_superset_moebius(minors.real, k.n).min())
        checked = k.n
    return KernelDiagnostics(
        hermitian=hermitian,
        spectrum_in_unit_interval=spectrum_ok,
        min_atom_probability=min_atom,
        max_subset_size_checked=checked,
    )
