"""Exception hierarchy shared by every module."""


class CRWError(Exception):
    """Base class for all package errors."""


class ValidationError(CRWError, ValueError):
    """Malformed input: bad chain parameters, barriers, JSON, patterns."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field


class DomainError(ValidationError):
    """A formula was called outside the parameter region where it holds."""


class DegenerateLambda(DomainError):
    """p == q, so the exponential martingale base q/p collapses to 1."""


class ReducibleChain(CRWError):
    """The chain has no unique stationary distribution."""


class NotMarkov(CRWError):
    """A pattern game's payoff sequence is not a first-order Markov chain."""

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness


class SolverError(CRWError):
    """A numerical method failed to produce an answer."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class NoConvergence(SolverError):
    pass


class DegenerateDrift(SolverError):
    """Only the trivial root lambda = 1 exists (zero stationary drift)."""


class SingularSystem(SolverError):
    pass


class NonAbsorbing(SolverError):
    """Some reachable lattice state can never reach a barrier."""


class BudgetExceeded(SolverError):
    pass
