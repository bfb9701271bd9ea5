"""Exception hierarchy. Every error carries a module-qualified ``code``."""


class LiectrlError(Exception):
    code = "liectrl.error"


class InvalidInput(LiectrlError, ValueError):
    code = "algebra.invalid_input"


class ValidationFailed(LiectrlError):
    code = "validation.failed"

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = dict(residuals or {})


class NotAnEigenvalue(LiectrlError, ValueError):
    code = "decomposition.not_an_eigenvalue"


class UnsupportedRealization(LiectrlError):
    code = "simulator.unsupported_realization"


class StepRejected(LiectrlError):
    code = "simulator.step_rejected"


class InsufficientSamples(LiectrlError):
    code = "reach.insufficient_samples"


class BudgetExhausted(LiectrlError):
    code = "reach.budget_exhausted"

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ParseError(LiectrlError, ValueError):
    code = "cli.parse_error"

    def __init__(self, message, path="$"):
        super().__init__(f"{path}: {message}")
        self.path = path
