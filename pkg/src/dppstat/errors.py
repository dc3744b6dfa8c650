"""Exception and warning types shared across the package."""


class DppstatError(Exception):
    """Base class for all errors raised by dppstat."""


class InputError(DppstatError, ValueError):
    """Malformed or out-of-contract input (bad shapes, indices, ranges)."""


class ConditioningError(DppstatError):
    """A linear solve was refused because the system is too ill-conditioned.

    Carries the estimated condition number in ``cond``.
    """

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


class CapabilityError(DppstatError):
    """The requested operation is outside what this implementation supports
    for the given input (e.g. enumeration beyond the subset cap, spectral
    sampling of a non-Hermitian kernel)."""


class InvalidKernelError(DppstatError):
    """The input matrix does not define a valid point process (negative
    atom probability beyond tolerance, vanishing normalizer, ...)."""


class EvaluationError(DppstatError):
    """A user-supplied transform evaluator failed at a quadrature node.

    ``node`` is the complex argument that failed, ``index`` its position
    in the node ladder.
    """

    def __init__(self, message, node=None, index=None):
        super().__init__(message)
        self.node = node
        self.index = index


class InversionWarning(UserWarning):
    """Numerical irregularity inside the continued-fraction inversion
    (vanishing quotient-difference denominator perturbed to proceed)."""


class SamplerWarning(UserWarning):
    """Round-off irregularity inside a sampler (e.g. a conditional
    probability clamped at zero)."""


class PipelineWarning(UserWarning):
    """Non-fatal pipeline diagnostics (quantile saturation, complex
    residue in a transform expected to be real)."""
