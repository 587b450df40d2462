"""Exception hierarchy shared by every proxdiff module."""


class ProxDiffError(Exception):
    """Base class; the CLI maps any subclass to a nonzero exit code."""


class ParseError(ProxDiffError):
    pass


class DataError(ProxDiffError):
    pass


class DimError(ProxDiffError):
    pass


class CodecError(ProxDiffError):
    pass


class ConfigError(ProxDiffError):
    pass


class StepError(ProxDiffError):
    pass


class MetricError(ProxDiffError):
    pass


class Unsupported(ProxDiffError):
    pass


class CheckpointError(ProxDiffError):
    pass


class IoError(ProxDiffError):
    pass


class TrainingDiverged(ProxDiffError):
    """Raised when any training loss turns non-finite.

    ``epoch`` is the zero-based epoch in which divergence happened and
    ``last_losses`` the most recent finite per-epoch loss record (or None).
    """

    def __init__(self, epoch: int, last_losses: dict | None = None):
        self.epoch = epoch
        self.last_losses = last_losses
        super().__init__(f"non-finite loss in epoch {epoch}; last finite losses: {last_losses}")
