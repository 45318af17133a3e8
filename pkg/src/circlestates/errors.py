"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid arguments (order mismatch, out-of-range index, bad config key)."""


class SingularJetError(ZeroDivisionError):
    """Reciprocal of a jet whose constant term vanishes."""

    def __init__(self, constant):
        self.constant = constant
        super().__init__(f"jet reciprocal with zero constant term ({constant!r})")


class DegenerateStateError(ArithmeticError):
    """Normalization or coherence denominator is nonpositive / vanishing."""


class TruncationError(RuntimeError):
    """Fock truncation too small for the requested accuracy."""

    def __init__(self, message, required_dim):
        self.required_dim = int(required_dim)
        super().__init__(f"{message} (increase dim to at least {self.required_dim})")


class ProtocolMismatchError(RuntimeError):
    """The simulated pulse sequence did not land on the target superposition."""


class DeltaLimitError(ValueError):
    """Propagator requested at t = 0, where it is a delta function."""


class BudgetExhaustedError(RuntimeError):
    """Adaptive quadrature / integration ran out of refinement budget."""


class StepSizeUnderflowError(RuntimeError):
    """Adaptive step halving went below the minimum step."""
