"""Exception taxonomy shared across the toolkit.

The CLI maps these onto exit codes: configuration problems exit 1, data
problems exit 2, embedding-backend problems exit 3.
"""


class CodegenEvalError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(CodegenEvalError):
    """Bad parameters, unknown metric ids, unsupported languages."""


class DataError(CodegenEvalError):
    """Malformed input records, duplicate keys, dangling joins."""


class ShapeError(CodegenEvalError):
    """Misaligned vectors or incompatible matrix dimensions."""


class DegenerateInputError(CodegenEvalError):
    """Input on which the requested statistic or score is undefined."""


class BackendError(CodegenEvalError):
    """Embedding backend unreachable, missing, or serving bad payloads."""


class TransformError(CodegenEvalError):
    """A source-code perturbation could not be applied."""
