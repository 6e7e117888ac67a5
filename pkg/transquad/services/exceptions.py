"""Error types raised by the transquad services."""


class TransquadError(Exception):
    """Base class for every error the services raise on purpose"""


class SpecError(TransquadError):
    """Malformed spec file or configuration tree"""


class UnknownId(TransquadError):
    def __init__(self, entry_id, known=()):
        self.entry_id = entry_id
        self.known = tuple(known)
        hint = f" (known: {', '.join(self.known)})" if self.known else ''
        super().__init__(f"Unknown gallery id '{entry_id}'{hint}")


class AddressAtSup(TransquadError):
    def __init__(self, address):
        self.address = address
        super().__init__(f"Address {address} sits at the supremum; it has no successor")


class SpaceMismatch(TransquadError):
    def __init__(self, left, right):
        self.left = left
        self.right = right
        super().__init__(f"Incompatible values: {left} and {right}")


class NotConvergent(TransquadError):
    """The Cauchy window failed, or partial sums blew up, before the budget ran out"""

    def __init__(self, message, cutoff=None, partial=None):
        self.cutoff = cutoff
        self.partial = partial
        super().__init__(message)


class ToleranceUnachievable(TransquadError):
    def __init__(self, message, bound=None, cutoff=None):
        self.bound = bound
        self.cutoff = cutoff
        super().__init__(message)


class NotLocallySummable(TransquadError):
    def __init__(self, cutoff, reason=''):
        self.cutoff = cutoff
        super().__init__(f"Family is not summable below {cutoff}{': ' + reason if reason else ''}")


class NotLocallyIntegrable(TransquadError):
    def __init__(self, cutoff, reason=''):
        self.cutoff = cutoff
        super().__init__(f"Mapping is not locally HL integrable beyond {cutoff}{': ' + reason if reason else ''}")


class NoProgress(TransquadError):
    def __init__(self, x, epsilon):
        self.x = x
        self.epsilon = epsilon
        super().__init__(f"No certified step beyond x={x!r} at epsilon={epsilon!r}")


class BudgetExceeded(TransquadError):
    def __init__(self, message, partial=None):
        self.partial = partial
        super().__init__(message)


class DepthExceeded(TransquadError):
    def __init__(self, depth, interval=None):
        self.depth = depth
        self.interval = interval
        super().__init__(f"Bisection passed depth {depth} at {interval}")


class MaxIterExceeded(TransquadError):
    def __init__(self, iterations, gap, last_pair=None):
        self.iterations = iterations
        self.gap = gap
        self.last_pair = last_pair
        super().__init__(f"No convergence after {iterations} iterations (bracket gap {gap:.3e})")


class MonotonicityViolation(TransquadError):
    def __init__(self, chain, iteration, excess):
        self.chain = chain
        self.iteration = iteration
        self.excess = excess
        super().__init__(
            f"{chain} chain broke its declared order at iteration {iteration} (excess {excess:.3e})"
        )
