"""Custom exception classes for the Sangam training engine."""
from typing import List, Optional


class SangamError(Exception):
    """Base class for exceptions in this package."""
    pass

class ConfigError(SangamError):
    """Exception raised for invalid experiment, network or training configuration."""
    pass

class ShapeError(SangamError):
    """Exception raised when tensor shapes do not agree."""
    def __init__(self, message, shapes=None):
        super().__init__(message)
        self.shapes = shapes # The offending shapes, in argument order

class DomainError(SangamError):
    """Exception raised when a primitive is evaluated outside its domain (e.g. log of a non-positive value)."""
    pass

class ContractError(SangamError):
    """Exception raised when a caller violates an operation's precondition."""
    pass

class BatchSizeError(ContractError):
    """Exception raised when batch normalization runs in train mode on fewer than two rows."""
    pass

class NumericalError(SangamError):
    """Exception raised when a primitive produces NaN or inf while debug checks are enabled."""
    pass

class DeterminismError(SangamError):
    """Exception raised when a function under gradient check returns different values for identical inputs."""
    pass

class DivergenceError(SangamError):
    """Exception raised when training produces a non-finite gradient or loss."""
    def __init__(self, message, step: Optional[int] = None):
        super().__init__(message)
        self.step = step

class DataError(SangamError):
    """Base class for dataset related errors."""
    pass

class DatasetParseError(DataError):
    """Exception raised for malformed dataset files."""
    def __init__(self, message, line: Optional[int] = None, field: Optional[str] = None):
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field is not None:
            location.append(f"field '{field}'")
        super().__init__(f"{message} ({', '.join(location)})" if location else message)
        self.line = line
        self.field = field

class DatasetValidationError(DataError):
    """Exception raised when dataset files disagree with their manifest."""
    pass

class EmptyDatasetError(DataError):
    """Exception raised when sampling from or splitting an empty dataset."""
    pass

class ArtifactMismatchError(SangamError):
    """Exception raised when a checkpoint or report artifact does not match what the caller expects."""
    pass

class VerificationError(SangamError):
    """Exception raised when the gradient verification suite has failing checks."""
    def __init__(self, message, failed_checks: Optional[List[str]] = None):
        super().__init__(message)
        self.failed_checks = failed_checks or []
