"""Exception hierarchy shared by the solver modules and the CLI."""


class ResonanceError(Exception):
    """Base class for all errors raised by the package."""


class ConfigurationError(ResonanceError):
    """Invalid domain, basis or option combination."""


class DimensionError(ResonanceError, ValueError):
    """Vector lengths do not match the basis."""


class EvaluationError(ResonanceError):
    """A pointwise map produced a non-finite value."""


class SpecificationError(ResonanceError):
    """A problem description is incomplete or inconsistent.

    ``key`` and ``line`` locate the offending entry when the problem was
    loaded from a config file.
    """

    def __init__(self, message, key=None, line=None):
        self.key = key
        self.line = line
        self.message = message
        where = []
        if key is not None:
            where.append(f"key {key!r}")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class NonOrthogonalForcing(ResonanceError):
    """Resonant linear solve whose right side has a component on the kernel."""

    def __init__(self, shift, projection, tol):
        self.shift = shift
        self.projection = projection
        self.tol = tol
        super().__init__(
            f"forcing is not orthogonal to the kernel at shift {shift:g}: "
            f"|projection| = {projection:.3e} exceeds {tol:.3e}"
        )


class ResonantModeNonOrthogonal(ResonanceError):
    """A 2x2 linear block solve hit a resonant mode with nonzero data."""

    def __init__(self, mode, component, value):
        self.mode = mode
        self.component = component
        self.value = value
        super().__init__(
            f"resonant mode {mode}: component {component} has projection {value:.3e}"
        )


class UnsupportedSystemError(ResonanceError):
    """Coupling matrix or resonance structure outside the treated cases."""


class MultiplicityError(ConfigurationError):
    """A simple eigenvalue was required but the group has several members."""
