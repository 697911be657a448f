"""Exception types shared across the toolkit."""


class MtsrefError(Exception):
    """Base class for all toolkit errors."""


class OutDegreeLimitError(MtsrefError):
    """A state has too many outgoing transitions for admissible-set enumeration."""

    def __init__(self, state, degree, limit):
        super().__init__(
            f"state {state} has out-degree {degree}, exceeding the cap {limit}"
        )
        self.state = state
        self.degree = degree
        self.limit = limit


class ParamLimitError(MtsrefError):
    """Too many parameters for exhaustive valuation or selector enumeration."""


class StateLimitError(MtsrefError):
    """Too many states for an exponential-in-state-count construction."""


class VarLimitError(MtsrefError):
    """Too many variables for the expansion-based QBF evaluator."""


class SizeLimitError(MtsrefError):
    """An enumerated result set grew past its cardinality cap."""


class CyclicInputError(MtsrefError):
    """An operation restricted to acyclic systems received a cyclic one."""


class KindError(MtsrefError):
    """A system of the wrong kind was passed to a checker."""


class InconsistentInputError(MtsrefError):
    """A checker requiring pruned input received a locally inconsistent system."""


class GenFailureError(MtsrefError):
    """The random generator exhausted its redraw budget."""


class SolverUnavailableError(MtsrefError):
    """The external solver command could not be executed."""


class SolverTimeoutError(MtsrefError):
    """The external solver exceeded its wall-clock budget."""

    def __init__(self, limit):
        super().__init__(f"external solver timed out after {limit} s")
        self.limit = limit


class SolverProtocolError(MtsrefError):
    """The external solver exited with an unexpected status."""

    def __init__(self, status):
        super().__init__(f"external solver exited with unexpected status {status}")
        self.status = status
