"""Exception types shared across the toolkit."""


class InvalidInputError(ValueError):
    """Malformed or out-of-range input (non-finite matrix, bad config, ...)."""


class DomainError(ValueError):
    """Argument outside the domain of a function, e.g. H with an entry >= 1."""


class PreconditionError(ValueError):
    """A diagnostic was asked to check a hypothesis its inputs do not satisfy."""


class NonConvergenceError(RuntimeError):
    """Optimizer hit its iteration cap; carries the best iterate seen."""

    def __init__(self, message, best=None, record=None):
        super().__init__(message)
        self.best = best
        self.record = record


class StallError(NonConvergenceError):
    """Line search could not produce an acceptable step."""
