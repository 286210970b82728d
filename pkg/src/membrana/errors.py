"""Exception hierarchy shared by the solvers and the CLI."""


class MembranaError(Exception):
    pass


class GeometryError(MembranaError, ValueError):
    pass


class AssemblyError(MembranaError, ValueError):
    pass


class SolverFailure(MembranaError, RuntimeError):
    """An iterative solver did not converge. Not a statement about existence."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class EigenConvergenceError(SolverFailure):
    pass


class NoPositiveSolution(MembranaError):
    """The existence threshold is not met: the problem has no positive solution."""


class Indeterminate(MembranaError):
    """A threshold quantity lies inside the numerical indeterminacy band."""


class OutOfDomain(MembranaError, ValueError):
    pass


class NotFound(MembranaError):
    """No coexistence state was located (divergence or semitrivial limit).

    ``evidence`` says how strong the negative result is: ``"necessary"`` when
    a necessary condition fails, ``"parabolic"`` when a long evolution from
    positive data settled on a state with a vanishing component, ``"newton"``
    when only the Newton seeds failed.
    """

    def __init__(self, message, evidence="newton"):
        super().__init__(message)
        self.evidence = evidence


class Degenerate(MembranaError):
    """The bifurcation window is too narrow to trace a branch."""


class ConfigError(MembranaError, ValueError):
    pass
