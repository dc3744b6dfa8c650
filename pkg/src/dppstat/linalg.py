"""Determinant and elementary-function helpers used throughout the package.

Determinants are evaluated through pivoted LU factorization with the
log-magnitude and the phase accumulated separately, so that matrices with a
thousand factors on the diagonal neither overflow nor underflow double
precision.  ``numpy.linalg.slogdet`` provides exactly that decomposition; the
wrappers below fix the conventions (complex output, empty-matrix determinant
equal to one) and expose the log form.
"""

import numpy as np

from .errors import InputError

#: entries with magnitude below this are treated as an exact zero determinant
_LOG_ZERO = -np.inf


def complex_logdet(a):
    """Log-determinant of a square complex (or real) matrix.

    Returns ``(log_magnitude, phase)`` with ``det = exp(log_magnitude) *
    phase`` and ``|phase| = 1``.  A singular matrix yields
    ``(-inf, 0)``.  The empty 0x0 matrix has determinant one.
    """
    a = np.asarray(a)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    sign, logabs = np.linalg.slogdet(a)
    if sign == 0:
        return _LOG_ZERO, 0.0 + 0.0j
    return float(logabs), complex(sign)


def complex_det(a):
    """Determinant of a square matrix as a complex scalar.

    Safe for sizes where the plain product of pivots would leave the
    double range; see :func:`complex_logdet`.
    """
    logabs, phase = complex_logdet(a)
    if logabs == _LOG_ZERO:
        return 0.0 + 0.0j
    return phase * np.exp(logabs)


def one_minus_exp(z):
    """Elementwise ``1 - exp(-z)`` computed as ``-expm1(-z)``.

    Accurate for arguments near zero, where the naive form loses all
    significant digits; supports real and complex arrays.
    """
    return -np.expm1(-np.asarray(z))


def condition_number(a):
    """2-norm condition number (exact, via singular values)."""
    return float(np.linalg.cond(np.asarray(a)))


def is_hermitian(a, tol):
    """True when ``a`` equals its conjugate transpose to ``tol`` relative
    to the largest entry magnitude (an all-zero matrix is Hermitian)."""
    a = np.asarray(a)
    scale = np.max(np.abs(a)) if a.size else 0.0
    if scale == 0.0:
        return True
    return bool(np.max(np.abs(a - a.conj().T)) <= tol * scale)
