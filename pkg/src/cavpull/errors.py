"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A physical or numerical parameter is outside its admissible domain."""


class DegenerateOverlapError(ArithmeticError):
    """Cavity/emitter overlap too small to normalize against (underflow)."""


class ConfigError(ValueError):
    """Invalid run configuration. Carries every problem found, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" +
                         "\n".join(f"  - {p}" for p in self.problems))
