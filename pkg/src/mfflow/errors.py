"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid arguments: mismatched jets, out-of-range indices, bad configs."""


class NumericError(ArithmeticError):
    """Non-finite intermediate, failed quadrature, divergent series."""
