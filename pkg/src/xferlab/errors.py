"""Exception types shared across the package.

Every error raised on a contract violation derives from XferError so callers
(and the CLI) can catch library failures without swallowing programming bugs.
"""


class XferError(Exception):
    """Base class for all xferlab errors."""


class ShapeError(XferError):
    """Tensor/matrix dimensions do not satisfy an operation's contract."""


class ContractError(XferError):
    """An operation precondition was violated (e.g. non-scalar loss)."""


class NumericError(XferError):
    """Non-finite values where finite values are required."""


class MappingError(XferError):
    """Invalid token mapping: not bijective, id outside domain, or no capacity."""


class CorpusSpecError(XferError):
    """Invalid corpus/task generation spec (odd Dyck length, infeasible motif...)."""


class DataError(XferError):
    """Malformed dataset file or invalid dataset operation input."""


class CheckpointError(XferError):
    """Checkpoint format, corruption, or model-compatibility failure."""


class TrainingDivergedError(XferError):
    """Training aborted on non-finite loss or gradients."""


class MetricError(XferError):
    """Metric undefined for the given inputs (constant ranks, zero vectors...)."""


class DegeneracyError(XferError):
    """A similarity analysis lost all usable dimensions (rank collapse)."""
