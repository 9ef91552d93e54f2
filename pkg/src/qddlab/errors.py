"""Exception types shared by the solvers and the CLI."""


class ConvergenceError(RuntimeError):
    """An iterative solver ran out of iterations (CLI exit code 1)."""

    def __init__(self, message, residual=float("nan")):
        super().__init__("%s (last residual %.3e)" % (message, residual))
        self.residual = residual


class InvariantViolation(RuntimeError):
    """A monitored structural relation failed (CLI exit code 2).

    ``report`` is a list of dicts, one per failed check, with at least the
    keys ``check``, ``step`` and ``detail``.
    """

    def __init__(self, report, partial=None):
        self.report = list(report)
        self.partial = partial
        first = self.report[0] if self.report else {}
        super().__init__(
            "%s violated at step %s: %s"
            % (first.get("check"), first.get("step"), first.get("detail"))
        )
