"""Exception hierarchy and the CLI exit codes they map to."""

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_SOLVER = 3


class OffloadError(Exception):
    exit_code = EXIT_UNEXPECTED


class ValidationError(OffloadError, ValueError):
    """Invalid input: a type invariant or a file field does not hold."""
    exit_code = EXIT_VALIDATION


class AlignmentError(ValidationError):
    """Policy / distribution lengths disagree."""


class ScenarioFileError(ValidationError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field '{field}'")
        if line is not None:
            where.append(f"line {line}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class BudgetError(ValidationError):
    """Requested work exceeds a configured evaluation budget."""


class InsufficientSamplesError(ValidationError):
    pass


class FeasibilityError(OffloadError):
    """Stationary policy violates f_per - λ·E[XL] > 0."""
    exit_code = EXIT_SOLVER

    def __init__(self, message: str, policy=None, slack: float | None = None):
        super().__init__(message)
        self.policy = policy
        self.slack = slack
        # Set by fictitious play when it stops half way
        self.partial_report = None


class DegeneratePolicyError(OffloadError):
    """Nobody offloads, so the allocated rate is undefined."""
    exit_code = EXIT_SOLVER


class ConvergenceError(OffloadError):
    exit_code = EXIT_SOLVER
