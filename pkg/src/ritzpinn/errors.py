class ConfigurationError(ValueError):
    """Inconsistent or invalid setup (shapes, domains, missing ansatz, ...)."""


class NumericalError(ArithmeticError):
    """A non-finite value or a failed iteration.

    ``layer`` holds the index of the network layer that produced the first
    non-finite value, when the error comes from a network evaluation.
    """

    def __init__(self, message, layer=None):
        super().__init__(message)
        self.layer = layer
