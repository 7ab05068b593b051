"""Exception hierarchy shared across the package.

Every error that a decision procedure can surface to a caller (and hence
to the CLI) carries a stable machine-readable ``code`` so that scripted
consumers never have to parse messages.
"""

from __future__ import annotations


class SteerkitError(Exception):
    """Base class for all package errors."""

    code = "E_INTERNAL"


class ParseError(SteerkitError):
    """A scenario file could not be parsed into JSON matrices."""

    code = "E_PARSE"


class ValidationError(SteerkitError):
    """An object violates the invariants of its type."""

    code = "E_VALIDATION"


class DimensionMismatchError(ValidationError):
    """Operands have incompatible dimensions."""

    code = "E_DIMENSION"


class NotHermitianError(ValidationError):
    """Matrix deviates from Hermiticity beyond tolerance."""

    code = "E_NOT_HERMITIAN"

    def __init__(self, deviation: float, tol: float):
        self.deviation = deviation
        self.tol = tol
        super().__init__(
            f"matrix is not Hermitian: max |M - M^dag| = {deviation:.3e} > {tol:.1e}"
        )


class NotPsdError(ValidationError):
    """Matrix has an eigenvalue below the admissible floor."""

    code = "E_NOT_PSD"

    def __init__(self, min_eigenvalue: float, tol: float, context: str = "matrix"):
        self.min_eigenvalue = min_eigenvalue
        self.tol = tol
        super().__init__(
            f"{context} is not positive semidefinite: "
            f"min eigenvalue {min_eigenvalue:.3e} < -{tol:.1e}"
        )


class InvalidBlochVectorError(ValidationError):
    """Bloch vector has norm above one."""

    code = "E_BLOCH"


class NotMinimalError(SteerkitError):
    """Kraus operators are linearly dependent where minimality is required."""

    code = "E_NOT_MINIMAL"


class SignallingError(SteerkitError):
    """Marginals (or total channels) differ across settings."""

    code = "E_SIGNALLING"

    def __init__(self, deviation: float, tol: float, what: str = "assemblage"):
        self.deviation = deviation
        self.tol = tol
        super().__init__(
            f"signalling {what}: max marginal deviation {deviation:.3e} > {tol:.1e}"
        )


class SignallingAssemblageError(SignallingError):
    """State assemblage obtained from instruments signals between settings."""

    code = "E_SIGNALLING_ASSEMBLAGE"


class SignallingInstrumentsError(SignallingError):
    """Instrument set has setting-dependent total channels."""

    code = "E_SIGNALLING_INSTRUMENTS"

    def __init__(self, deviation: float, tol: float):
        super().__init__(deviation, tol, what="instrument set")


class ChannelMismatchError(SteerkitError):
    """Instrument totals do not match the dilated channel."""

    code = "E_CHANNEL_MISMATCH"


class StrategyCapExceededError(SteerkitError):
    """Deterministic-strategy count exceeds the configured cap."""

    code = "E_STRATEGY_CAP"

    def __init__(self, count: int, cap: int):
        self.count = count
        self.cap = cap
        super().__init__(
            f"{count} deterministic strategies exceed the cap of {cap}; refusing"
        )


class SolverNotConvergedError(SteerkitError):
    """Interior-point solve stopped before reaching the target residuals."""

    code = "E_SOLVER"

    def __init__(self, message: str, residuals: dict[str, float]):
        self.residuals = residuals
        super().__init__(f"{message} (residuals: {residuals})")
