import numpy as np


class ParameterError(ValueError):
    """Invalid configuration or argument value."""


class DimensionError(ValueError):
    """Array shapes are inconsistent with each other or with the config."""


class NumericalDomainError(ArithmeticError):
    """A quadratic form that must be positive was not."""


class BlockDecompositionError(np.linalg.LinAlgError):
    """Cholesky factorization of one diagonal block failed.

    Attributes
    ----------
    block : int
        Index of the offending block.
    """

    def __init__(self, block, msg=None):
        self.block = block
        super().__init__(msg or f"block {block} is not positive definite")
