class DomainError(ValueError):
    """Input lies outside the domain an operation is defined on."""


class ParseError(ValueError):
    """Malformed annotation or detection text."""

    def __init__(self, message, line_number=None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class ConfigError(ValueError):
    """Invalid pipeline configuration."""
