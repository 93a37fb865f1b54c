"""Exception types raised by the solver stack."""


class ContactError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgumentError(ContactError, ValueError):
    pass


class OutOfDomainError(InvalidArgumentError):
    pass


class AssemblyError(ContactError):
    pass


class IllPosedProblemError(ContactError):
    """Raised when no Dirichlet dofs remain, so the stiffness is singular."""


class SingularSystemError(ContactError):
    pass


class NonConvergenceError(ContactError):
    """An iterative solver hit its iteration cap.

    ``history`` holds the residual norms (Newton) or active-set sizes
    (active-set method) recorded before giving up.
    """

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = list(history or [])
