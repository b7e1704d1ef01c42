"""Exception types shared across the package."""


class NumericalError(RuntimeError):
    """A computation failed for numerical rather than usage reasons."""


class QuadratureError(NumericalError):
    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved error estimate {achieved:.3g})")
        self.achieved = achieved


class DegenerateVarianceError(NumericalError, ValueError):
    """A zero log-variance reached code that needs a proper density."""


class HorizonCapError(ValueError):
    pass
