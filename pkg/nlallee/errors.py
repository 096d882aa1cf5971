"""Exceptions raised by nlallee."""


class NlAlleeError(Exception):
    """Base class for every error raised by this package."""


class DomainError(NlAlleeError, ValueError):
    """An input is outside the domain where the model or a formula is defined."""


class ConfigError(DomainError):
    def __init__(self, message: str, line: int = None, key: str = None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key '{key}'")
        prefix = (", ".join(where) + ": ") if where else ""
        super().__init__(prefix + message)


class MissingRecord(NlAlleeError, KeyError):
    """A trajectory does not hold a record at a requested time."""

    def __str__(self):
        return str(self.args[0]) if self.args else "missing record"


class SolverError(NlAlleeError, RuntimeError):
    def __init__(self, message: str, t: float = None):
        self.t = t
        if t is not None:
            message = f"{message} (t={t:.6g})"
        super().__init__(message)


class BlowUp(SolverError):
    """The solution exceeded the blow-up ceiling 10^3 * max(M, 1)."""


class StepUnderflow(SolverError):
    """The adaptive step fell below 1e-12 * t_end."""


class NegativityBreach(SolverError):
    """An accepted step produced values below -10^3 * atol."""


class NonConvergence(SolverError):
    """Inverse iteration did not reach its residual target."""


class SignError(SolverError):
    """The computed principal eigenvector is not one-signed."""


class FrontError(SolverError):
    pass


class FrontNotFound(FrontError):
    """No level crossing was found in a recorded profile."""


class BoundaryContamination(FrontError):
    """The tracked front came within the guard strip of the domain boundary."""
