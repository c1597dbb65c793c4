"""Exception types shared across the package."""


class GeometryError(ValueError):
    """Invalid domain description or broken mesh."""


class SolverError(RuntimeError):
    """Numerical failure: eigensolver breakdown, missing roots, size caps."""


class HypFViolation(ValueError):
    """The functional does not have strictly positive partial derivatives."""
