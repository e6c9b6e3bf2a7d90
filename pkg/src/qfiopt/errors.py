"""Exception types shared across the package.

Validation errors signal bad inputs (CLI exit status 2); numerical errors
signal solver or convergence failures on valid inputs (exit status 1).
"""


class QfioptError(Exception):
    pass


class ValidationError(QfioptError):
    """Malformed or inconsistent input: dimensions, file schema, state axioms."""


class NumericalError(QfioptError):
    """A solver reported failure or a required numerical contract was not met."""


class UninformativeMeasurementError(ValidationError):
    """⟨i[M, H]⟩ vanishes, so the error-propagation variance is undefined."""


class InfeasibleError(NumericalError):
    """A conic program was reported (primal) infeasible."""
