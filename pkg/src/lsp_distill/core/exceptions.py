"""
Custom exceptions for lsp_distill.

Each class carries the process exit code the CLI reports for it.
"""


class LspDistillError(Exception):
    """Base exception for all lsp_distill errors."""
    exit_code = 1


class ShapeError(LspDistillError):
    """Raised when tensor shapes do not agree for an operation."""
    exit_code = 4


class ContractError(LspDistillError):
    """Raised when an operation is called outside its preconditions."""
    exit_code = 2


class AlignmentError(ContractError):
    """Raised when two per-node distributions are not aligned."""
    pass


class NumericError(LspDistillError):
    """Raised when a score, loss or gradient becomes non-finite."""
    exit_code = 4


class GraphError(LspDistillError):
    """Raised when an edge list references a node outside the graph."""
    exit_code = 3


class DataError(LspDistillError):
    """Base exception for dataset-related errors."""
    exit_code = 3


class DatasetParseError(DataError):
    """Raised when a dataset file cannot be parsed; message carries the location."""
    pass


class DatasetValidationError(DataError):
    """Raised when a parsed dataset violates its invariants."""
    pass


class CheckpointError(DataError):
    """Base exception for checkpoint errors."""
    pass


class CheckpointFormatError(CheckpointError):
    """Raised for bad magic, unknown version or truncated checkpoint files."""
    pass


class CheckpointIntegrityError(CheckpointError):
    """Raised when stored tensors disagree with the stored model spec."""
    pass


class ConfigError(LspDistillError):
    """Raised when configuration validation fails."""
    exit_code = 2


class UnsupportedTaskError(ConfigError):
    """Raised when a distiller is combined with a task it cannot handle."""
    pass


class ReplayMismatchError(LspDistillError):
    """Raised when a replayed run does not reproduce its recorded outputs."""
    pass
