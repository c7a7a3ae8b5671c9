"""Exception hierarchy shared across the package."""


class RpecluError(ValueError):
    """Base class for all package errors."""


class InvalidDimensionError(RpecluError):
    pass


class InfeasibleError(RpecluError):
    """Problem size does not admit the requested fit."""


class FitFailureError(RpecluError):
    """EM could not produce a non-degenerate mixture."""


class ScoreInvalidError(RpecluError):
    pass


class PartialEnsembleError(RpecluError):
    """Fewer projections scored successfully than were requested for consensus."""

    def __init__(self, n_ok, b_star):
        super().__init__(f"only {n_ok} projections scored successfully, need b_star={b_star}")
        self.n_ok = n_ok
        self.b_star = b_star
