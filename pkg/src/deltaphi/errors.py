"""Exception hierarchy shared by every module of the package."""


class DeltaPhiError(Exception):
    """Base class for all errors raised by :mod:`deltaphi`."""


class ValidationError(DeltaPhiError, ValueError):
    """Bad configuration or input that violates a documented bound."""


# --- perturbation / shift -------------------------------------------------

class DegeneratePerturbation(ValidationError):
    pass


class InteriorZero(ValidationError):
    pass


class EndpointMismatch(ValidationError):
    pass


class OutOfDomain(ValidationError):
    pass


class UnsupportedField(ValidationError):
    pass


class NumericalError(DeltaPhiError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


class NoConvergence(NumericalError):
    pass


# --- constants ------------------------------------------------------------

class InvalidDelta(ValidationError):
    pass


class AmplitudeTooLarge(ValidationError):
    pass


class TrapezoidViolation(NumericalError):
    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


# --- inverse solver -------------------------------------------------------

class SolvabilityError(DeltaPhiError):
    """``w`` is not (numerically) in the range of the difference operator."""


class NoDecay(SolvabilityError):
    pass


class SolvabilityRequired(SolvabilityError):
    pass


class TailStall(NumericalError):
    pass


class ToleranceUnreachable(NumericalError):
    pass


# --- kernel / jets --------------------------------------------------------

class OrbitExhausted(NumericalError):
    def __init__(self, message, distance=None):
        super().__init__(message)
        self.distance = distance


class OrderUnsupported(ValidationError):
    pass


class ContractionNotFound(NumericalError):
    pass


class GridTooCoarse(ValidationError):
    pass
