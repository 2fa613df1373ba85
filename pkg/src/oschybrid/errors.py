"""Exception hierarchy shared by the precoding pipeline."""


class PrecodingError(Exception):
    """Base class for numerical failures in the hybrid precoding pipeline."""


class CodebookExhausted(PrecodingError):
    pass


class SingularChannel(PrecodingError):
    pass


class RankDeficient(PrecodingError):
    pass


class SingularCombinerSystem(PrecodingError):
    pass


class ZeroPowerPrecoder(PrecodingError):
    pass


class SingularCovariance(PrecodingError):
    pass


class ConfigError(ValueError):
    """Raised when a SystemConfig violates its invariants."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class TrialError(PrecodingError):
    """Wraps a numerical failure with the context needed to replay it."""

    def __init__(self, seed: int, trial: int, cause: Exception):
        self.seed = seed
        self.trial = trial
        self.cause = cause
        super().__init__(f"seed={seed} trial={trial}: {type(cause).__name__}: {cause}")
