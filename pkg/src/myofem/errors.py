"""Exception hierarchy for the solver, mesh, and I/O layers."""


class MyofemError(Exception):
    """Base class for all package-specific errors."""


class NonPositiveJacobian(MyofemError):
    """Deformation gradient determinant J <= 0 (element inversion).

    Raised during stress/residual evaluation; the Newton line search treats it
    as a rejected trial step and backtracks.
    """

    def __init__(self, message="J <= 0", cell=None, j_min=None):
        super().__init__(message)
        self.cell = cell
        self.j_min = j_min


class NonPositiveDilation(MyofemError):
    """Dilation field value D <= 0, outside the domain of the volumetric energy."""

    def __init__(self, message="D <= 0", cell=None):
        super().__init__(message)
        self.cell = cell


class InvertedCell(MyofemError):
    """Isoparametric reference map has non-positive determinant."""

    def __init__(self, message="inverted cell", cell=None):
        super().__init__(message)
        self.cell = cell


class GeometryInfeasible(MyofemError):
    """Parametric geometry closure relation has no solution."""


class ParseError(MyofemError):
    """Malformed input file; carries line number and offending content."""

    def __init__(self, message, line=None, path=None):
        loc = ""
        if path is not None:
            loc += str(path)
        if line is not None:
            loc += f":{line}"
        super().__init__(f"{loc}: {message}" if loc else message)
        self.line = line
        self.path = path


class ValidationError(MyofemError):
    """Input parsed but violates a structural invariant (bad index, inverted
    hexahedron, non-unit fibre vector, ...)."""


class ConfigError(MyofemError):
    """Run configuration is malformed or contains unknown keys."""


class NonConvergence(MyofemError):
    """Newton iteration exhausted without meeting tolerance.

    Carries the best state reached and the solve statistics so callers can
    retain partial artifacts.
    """

    def __init__(self, message, best_state=None, stats=None):
        super().__init__(message)
        self.best_state = best_state
        self.stats = stats


class LinearSolveFailure(MyofemError):
    """Linear solve did not reach the required residual tolerance."""


class SingularMatrix(LinearSolveFailure):
    """Assembled system is singular (typically an unconstrained rigid mode)."""


class GridMismatch(MyofemError):
    """Two run artifacts do not share mesh/boundary/time grids."""
