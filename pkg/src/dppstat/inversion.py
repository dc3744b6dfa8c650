"""Numerical inversion of Laplace transforms of distribution functions.

The target satisfies ``integral F(t) exp(-s t) dt = L(s) / s``, so ``F`` is
recovered from the Bromwich contour integral along a vertical line
``Re(s) = sigma`` inside the analyticity region.  The line is discretized
by the trapezoidal ladder ``s_k = sigma + i k pi / T_p``; the resulting
Fourier series is not summed directly but accelerated through the
continued-fraction (quotient-difference / Pade) scheme of de Hoog, Knight
and Stokes, including the improved remainder for the final convergent.

A single :class:`QuadraturePlan` fixes the ladder for every evaluation
point ``t <= t_max``, so a whole grid of inversions reuses one set of
(expensive) transform samples.  Post-sampling work is polynomial in the
number of nodes.  ``dehoog_invert`` is pure and reentrant: inversions at
distinct ``t`` may run in parallel.

Resolution caveat: with ``E`` samples on a ladder of half-period ``T_p``
the reconstruction cannot localize features of ``F`` much finer than
``~ T_p / E``.  Near a jump discontinuity, and near ``t = 0`` whenever
``F(0+) > 0``, pointwise error is limited by ringing; the error decays
rapidly with the distance to the jump measured in units of ``T_p``.
This is inherent to the shared-ladder discretization, not to floating
point (checked against a multi-precision run of the same scheme).
"""

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import EvaluationError, InputError, InversionWarning

#: default number of transform evaluations (nodes on the ladder)
DEFAULT_E_NODES = 41
#: default ratio of the ladder half-period to the largest evaluation point
DEFAULT_PERIOD_SCALE = 2.0
#: discretization tolerance behind the default abscissa rule
DEFAULT_TOL = 1e-10
#: substitute for vanishing quotient-difference denominators
_QD_TINY = 1e-30


@dataclass(frozen=True)
class QuadraturePlan:
    """Shared trapezoidal ladder on the vertical line ``Re(s) = sigma``.

    Node ``k`` is ``sigma + i k pi / t_period`` for ``k = 0 .. e_nodes-1``.
    """

    sigma: float
    e_nodes: int
    period_scale: float
    t_max: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise InputError(f"sigma must be positive, got {self.sigma}")
        if self.e_nodes < 5 or self.e_nodes % 2 == 0:
            raise InputError(f"e_nodes must be odd and >= 5, got {self.e_nodes}")
        if not self.period_scale >= 1:
            raise InputError(f"period_scale must be >= 1, got {self.period_scale}")
        if not self.t_max > 0:
            raise InputError(f"t_max must be positive, got {self.t_max}")

    @property
    def t_period(self):
        """Half-period ``T_p`` of the trapezoidal discretization."""
        return self.period_scale * self.t_max

    @property
    def nodes(self):
        """The ``e_nodes`` complex arguments, smallest imaginary part first."""
        return self.sigma + 1j * np.pi * np.arange(self.e_nodes) / self.t_period


def make_plan(t_values, e_nodes: int = DEFAULT_E_NODES, sigma: float | None = None,
              period_scale: float = DEFAULT_PERIOD_SCALE) -> QuadraturePlan:
    """Plan a node ladder covering every requested evaluation point.

    ``T_p = period_scale * max(t)``; when ``sigma`` is not given it defaults
    to ``-ln(tol) / (2 T_p)`` with ``tol = 1e-10``, which keeps the aliasing
    contribution of the periodization at the ``tol`` level.  The returned
    plan is identical for every ``t`` in ``t_values``, so transform samples
    can be shared across the whole grid.
    """
    t = np.asarray(list(t_values), dtype=np.float64)
    if t.size == 0:
        raise InputError("t_values must be nonempty")
    if np.any(t <= 0) or not np.all(np.isfinite(t)):
        raise InputError("all evaluation points must be positive and finite")
    t_max = float(t.max())
    t_period = period_scale * t_max
    if sigma is None:
        sigma = -math.log(DEFAULT_TOL) / (2.0 * t_period)
    return QuadraturePlan(sigma=float(sigma), e_nodes=int(e_nodes),
                          period_scale=float(period_scale), t_max=t_max)


@dataclass
class TransformSamples:
    """Transform values on a plan's ladder; treated as immutable.

    The continued-fraction coefficients derived from the samples are cached
    after the first inversion (they depend on the samples only, not on the
    evaluation point).
    """

    plan: QuadraturePlan
    values: np.ndarray
    _coeffs: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        vals = np.array(self.values, dtype=np.complex128, copy=True)
        if vals.shape != (self.plan.e_nodes,):
            raise InputError(
                f"expected {self.plan.e_nodes} sample values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals.view(np.float64))):
            raise InputError("transform samples must be finite")
        vals.flags.writeable = False
        self.values = vals


def sample_transform(evaluator, plan: QuadraturePlan,
                     max_workers: int | None = None) -> TransformSamples:
    """Evaluate a transform at every node of the plan.

    ``evaluator`` maps a complex argument to a complex value.  Nodes are
    independent; with ``max_workers`` > 1 they are evaluated from a thread
    pool (profitable when the evaluator releases the GIL in BLAS).  The
    result ordering is by node index regardless of scheduling.  An evaluator
    failure is re-raised as :class:`EvaluationError` with the failing node
    attached.
    """
    nodes = plan.nodes

    def call(i):
        s = complex(nodes[i])
        try:
            return complex(evaluator(s))
        except Exception as exc:  # attach the node, keep the cause
            raise EvaluationError(
                f"transform evaluation failed at node {i} (s = {s})",
                node=s, index=i) from exc

    if max_workers is not None and max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            values = list(pool.map(call, range(len(nodes))))
    else:
        values = [call(i) for i in range(len(nodes))]
    return TransformSamples(plan=plan, values=np.asarray(values))


def _safe_divisor(z):
    if z == 0:
        warnings.warn("vanishing quotient-difference denominator perturbed to 1e-30",
                      InversionWarning, stacklevel=3)
        return _QD_TINY
    return z


def _continued_fraction_coeffs(samples: TransformSamples) -> np.ndarray:
    """Coefficients ``d_0 .. d_{E-1}`` of the continued fraction whose
    convergents accelerate the trapezoidal Fourier series.

    Step 1 of the scheme: Fourier coefficients ``a_k = L(s_k)/s_k`` with
    the head halved.  Step 2: the rhombus rules of the quotient-difference
    algorithm on the ``a_k``.
    """
    plan = samples.plan
    m = (plan.e_nodes - 1) // 2
    a = samples.values / plan.nodes
    a[0] *= 0.5

    e = np.zeros((2 * m + 1, m + 1), dtype=np.complex128)
    q = np.zeros((2 * m, m), dtype=np.complex128)
    q[0, 0] = a[1] / _safe_divisor(a[0])
    for i in range(1, 2 * m):
        q[i, 0] = a[i + 1] / _safe_divisor(a[i])
    for r in range(1, m + 1):
        mr = 2 * (m - r) + 1
        e[0:mr, r] = q[1:mr + 1, r - 1] - q[0:mr, r - 1] + e[1:mr + 1, r - 1]
        if r != m:
            rq = r + 1
            mr = 2 * (m - rq) + 3
            for i in range(mr):
                q[i, rq - 1] = q[i + 1, rq - 2] * e[i + 1, rq - 1] / _safe_divisor(e[i, rq - 1])

    d = np.zeros(2 * m + 1, dtype=np.complex128)
    d[0] = a[0]
    d[1::2] = -q[0, :]
    d[2::2] = -e[0, 1:]
    return d


def dehoog_invert(samples: TransformSamples, t: float) -> float:
    """Estimate ``F(t)`` from the shared transform samples.

    Evaluates the continued-fraction convergent by the standard three-term
    recurrence at ``z = exp(i pi t / T_p)``, replaces the last partial
    quotient by the improved square-root remainder, and returns
    ``exp(sigma t) / T_p`` times the real part.  Requires ``0 < t <= t_max``
    of the plan.
    """
    plan = samples.plan
    if not 0 < t <= plan.t_max:
        raise InputError(f"t must lie in (0, {plan.t_max}], got {t}")
    if samples._coeffs is None:
        samples._coeffs = _continued_fraction_coeffs(samples)
    d = samples._coeffs
    m = (plan.e_nodes - 1) // 2
    t_period = plan.t_period

    z = np.exp(1j * np.pi * t / t_period)
    a_prev, a_cur = 0.0 + 0.0j, d[0]
    b_prev, b_cur = 1.0 + 0.0j, 1.0 + 0.0j
    for i in range(1, 2 * m):
        a_prev, a_cur = a_cur, a_cur + d[i] * a_prev * z
        b_prev, b_cur = b_cur, b_cur + d[i] * b_prev * z
    brem = (1.0 + (d[2 * m - 1] - d[2 * m]) * z) / 2.0
    rem = -brem * (1.0 - np.sqrt(1.0 + d[2 * m] * z / _safe_divisor(brem ** 2)))
    a_last = a_cur + rem * a_prev
    b_last = b_cur + rem * b_prev
    ratio = a_last / _safe_divisor(b_last)
    return float(np.exp(plan.sigma * t) / t_period * ratio.real)
