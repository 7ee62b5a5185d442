"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class PreconditionError(ValueError):
    """Input violates the bound required by a conditionally stable quantizer."""


class StabilityViolation(RuntimeError):
    """Quantizer state exceeded its abort threshold."""

    def __init__(self, index, value, cap):
        self.index = index
        self.value = value
        self.cap = cap
        super().__init__(
            f"|u_{index}| = {value:.6g} exceeds u_cap = {cap:.6g}; "
            "the quantization rule is unstable for this input"
        )


class DegreeTooLarge(ValueError):
    """Degree beyond the range supported by exact integer lattice rounding."""


class ConditioningError(ValueError):
    """Basis conversion too ill-conditioned to be trusted."""


class QuadratureError(RuntimeError):
    """Adaptive quadrature failed to reach the requested tolerance."""
