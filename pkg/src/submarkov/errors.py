"""Exception types shared across the package."""


class ValidationError(ValueError):
    """Malformed input: bad tokens, bad files, violated preconditions."""


class BudgetError(ValidationError):
    """Domain enumeration asked for more sentences than the configured budget."""


class ConsistencyError(RuntimeError):
    """A verification or consistency check failed on otherwise well-formed data.

    Carries an optional ``witness`` describing the offending object
    (context, quadruple, ...).
    """

    def __init__(self, message, witness=None):
        super().__init__(message)
        self.witness = witness
