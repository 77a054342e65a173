"""Exception types shared by the solvers and graph builders."""


class ConvergenceError(Exception):
    """An iterative solver ran out of iterations.

    Carries the last iterate and the residual (or gap) reached, so callers
    can inspect or restart instead of losing the work done so far.
    """

    def __init__(self, msg, iterate=None, residual=None, iterations=None):
        super().__init__(msg)
        self.iterate = iterate
        self.residual = residual
        self.iterations = iterations


class IndefiniteOperatorError(Exception):
    """An operator assumed symmetric positive definite turned out not to be."""


class EdgeListParseError(ValueError):
    """A text edge list could not be parsed; carries the offending line number."""

    def __init__(self, msg, line_no):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no
