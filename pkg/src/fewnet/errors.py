"""Exception types shared across the package."""


class DataFormatError(ValueError):
    """A CSV cell failed to parse; the message carries the offending row number."""


class ContinuityError(ValueError):
    """A monthly series has a gap or duplicate month; the message names it."""


class TrainingDivergenceError(RuntimeError):
    """Gradient descent produced a non-finite loss.

    Carries the restart index and epoch at which the loss left the reals.
    """

    def __init__(self, restart: int, epoch: int):
        self.restart = restart
        self.epoch = epoch
        super().__init__(
            f"training diverged: non-finite loss at restart {restart}, epoch {epoch}; "
            "lower the learning rate or rescale the inputs"
        )


class ConfigError(ValueError):
    """Experiment configuration is invalid; `problems` lists every violation."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n" + "\n".join(f"  - {p}" for p in self.problems))


class ExperimentError(RuntimeError):
    """A pipeline stage failed; `stage` names it for exit-code mapping."""

    def __init__(self, stage: str, cause: BaseException):
        self.stage = stage
        super().__init__(f"[{stage}] {cause}")
        self.__cause__ = cause
