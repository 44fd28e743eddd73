"""Exception hierarchy shared by every solver module."""


class SmrmError(Exception):
    """Base class for all errors raised by this package."""


class InvalidModel(SmrmError):
    """The model breaks one or more structural invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations) or "invalid model")


class EmptyTarget(SmrmError):
    pass


class NoReachableState(SmrmError):
    pass


class SingularSystem(SmrmError):
    pass


class InvalidParameter(SmrmError):
    pass


class DegenerateLength(SmrmError):
    pass


class NotFullDeconvolutor(SmrmError):
    pass


class GridMismatch(SmrmError):
    pass


class SingularSliceMatrix(SmrmError):
    """A frequency slice of the approximate LU system could not be solved."""

    def __init__(self, tau, detail=""):
        self.tau = int(tau)
        msg = f"linear system at frequency index tau={self.tau} is singular"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


class InvalidMixture(SmrmError):
    pass


class PointMassNotSupported(SmrmError):
    """Raised when a lattice or point-mass reward reaches a continuous solver."""


class QuantileOutOfRange(SmrmError):
    pass


class ReachabilityNotAlmostSure(SmrmError):
    pass


class NonterminatingModel(SmrmError):
    pass


class ModelFileError(SmrmError):
    pass
