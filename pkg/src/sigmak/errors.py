"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class NotAdmissible(ArithmeticError):
    """A matrix (or an iterate at some grid point) left the ellipticity cone.

    Attributes
    ----------
    index : tuple or None
        Grid multi-index of the first failing point, if any.
    order : int or None
        The failing elementary symmetric function index j (sigma_j <= 0),
        or 0 when the blended operator itself is non-positive.
    value : float or None
        The offending value.
    """

    def __init__(self, message, index=None, order=None, value=None):
        super().__init__(message)
        self.index = index
        self.order = order
        self.value = value


class NoConvergence(RuntimeError):
    def __init__(self, iterations, residual):
        super().__init__(
            f"Newton did not converge after {iterations} iterations "
            f"(residual {residual:.3e})")
        self.iterations = iterations
        self.residual = residual


class ContinuationStalled(RuntimeError):
    def __init__(self, t_reached, trace=None):
        super().__init__(f"continuation stalled at t={t_reached:.6g}")
        self.t_reached = t_reached
        self.trace = trace if trace is not None else []


class FixedPointStalled(RuntimeError):
    def __init__(self, iterations, gap, t=None, trace=None):
        super().__init__(
            f"fixed point iteration stalled after {iterations} steps "
            f"(gap {gap:.3e})")
        self.iterations = iterations
        self.gap = gap
        self.t = t
        self.trace = trace if trace is not None else []


class HarnackInfeasible(DomainError):
    """lambda_max(S) * D**2 >= pi**2 / 2, so the Harnack bound is void."""


class ConfigError(ValueError):
    pass
