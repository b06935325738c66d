"""Exception types shared across the package."""


class KaneHydroError(Exception):
    """Base class for all errors raised by this package."""


class QuadratureOverflow(KaneHydroError):
    """Requested moment scale exceeds the floating-point exponent cap.

    Signals unnormalized inputs; callers should work at A=0 and rescale.
    """


class NoConvergence(KaneHydroError):
    """Multiplier solve exceeded its iteration budget."""

    def __init__(self, iterations: int, residual: float, context: str = ""):
        self.iterations = iterations
        self.residual = residual
        msg = f"no convergence after {iterations} iterations (residual {residual:.3e})"
        if context:
            msg += f" [{context}]"
        super().__init__(msg)


class StatePositivityLost(KaneHydroError):
    """A band density would become non-positive under exact relaxation."""


class PositivityLost(KaneHydroError):
    """A cell density fell below the vacuum floor during a hydro update."""

    def __init__(self, cell: int, t: float, band: str):
        self.cell = cell
        self.t = t
        self.band = band
        super().__init__(f"density floor violated in cell {cell} (band {band}) at t={t:.6g}")


class SingularSystem(KaneHydroError):
    """Tridiagonal elimination hit a zero pivot (cannot happen for Dirichlet rows)."""


class ParseError(KaneHydroError):
    """Configuration document failed validation."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")
