"""Exception types shared across the package."""


class CapacityError(ValueError):
    """A size limit was exceeded (qubit count, grid cardinality, ...)."""


class ShapeError(ValueError):
    """Operands have incompatible shapes or lengths."""


class ValidityError(ValueError):
    """An input violates a structural requirement (e.g. non-Hermitian)."""


class DomainError(ValueError):
    """A value lies outside the mathematical domain of an operation."""


class SizeError(ValueError):
    """A collection is too small for the requested operation."""


class CompatibilityError(ValueError):
    """Two components disagree on dimensions or application."""


class ConsistencyError(ValueError):
    """Results that must refer to the same data do not."""


class ParseError(ValueError):
    """Malformed text input.  Carries the 1-based line number when known."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class FormatError(ValueError):
    """A serialized file does not match the expected schema."""


class StateError(RuntimeError):
    """An object is not in the state the operation requires."""


class DivergenceError(RuntimeError):
    """An optimization produced a non-finite loss.  Carries the step index."""

    def __init__(self, step):
        super().__init__(f"non-finite loss at step {step}")
        self.step = step


class NumericalError(RuntimeError):
    """A numerical consistency check failed (e.g. imaginary residue)."""


class PipelineError(RuntimeError):
    """Dataset construction failed (too many skipped instances, ...)."""
