"""Exception types raised by cohortkit."""


class CohortkitError(ValueError):
    """Base class for invalid inputs to cohortkit operations."""


class LifeTableError(CohortkitError):
    """A life table failed validation on construction or load."""


class DomainError(CohortkitError):
    """An argument lies outside the domain of the requested operation."""


class AcceptanceStarvation(RuntimeError):
    """The rejection sampler produced too few accepted draws within budget."""

    def __init__(self, accepted, attempts, minimum):
        self.accepted = accepted
        self.attempts = attempts
        self.minimum = minimum
        super().__init__(
            f"only {accepted} accepted samples after {attempts} attempts "
            f"(minimum {minimum}); acceptance probability too small for this budget"
        )
