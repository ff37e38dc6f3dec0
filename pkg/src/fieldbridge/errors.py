"""Exception types raised across the package."""


class FieldBridgeError(Exception):
    """Base class for all package errors."""


class MeshBuildError(FieldBridgeError):
    """Invalid mesh input: bad index, duplicate or degenerate triangle."""


class MeshFileError(FieldBridgeError):
    """Malformed mesh or field file. Carries the offending line number."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FieldError(FieldBridgeError):
    """Field, mesh, or dof-layout mismatch."""


class UnderdeterminedError(FieldBridgeError):
    """Fewer support points than monomials for a fixed-radius fit."""


class InsufficientSourcesError(FieldBridgeError):
    """Adaptive radius exhausted the domain without reaching min_points."""


class SingularFitError(FieldBridgeError):
    """Rank-deficient local fit with no regularization."""


class UnsupportedDegreeError(FieldBridgeError):
    """No tabulated quadrature rule for the requested degree."""


class SolverError(FieldBridgeError):
    """Linear solver failed to converge within its iteration budget."""


class ConsistencyError(FieldBridgeError):
    """Internal geometric invariant violated (e.g. a quadrature point that
    fails to localize in its own parent element)."""


class PartitionError(FieldBridgeError):
    """Invalid partition request (rank count, unmapped classification id)."""


class ExchangeError(FieldBridgeError):
    """Routing plan and payload disagree."""


class ExtrinsicEvaluationError(FieldBridgeError):
    """A remote-evaluation callback failed. Carries the batch index."""

    def __init__(self, message, batch=None):
        super().__init__(message)
        self.batch = batch


class ConfigError(FieldBridgeError):
    """Invalid experiment configuration or generator spec."""
