"""Exception hierarchy shared by all qspeckle modules."""


class QSpeckleError(Exception):
    """Base class for every error raised by this package."""


class DimensionError(QSpeckleError, ValueError):
    pass


class SelectionError(QSpeckleError, ValueError):
    pass


class ValidationError(QSpeckleError, ValueError):
    """A model or configuration field is inconsistent.

    ``field`` names the offending field so that callers (the CLI in
    particular) can point at it.
    """

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(QSpeckleError, ValueError):
    pass


class DegenerateInputError(QSpeckleError, ValueError):
    pass


class InsufficientDataError(QSpeckleError, ValueError):
    pass


class TrainingError(QSpeckleError, ValueError):
    pass


class SchemaError(QSpeckleError, ValueError):
    pass


class ConfigError(QSpeckleError, ValueError):
    """A configuration file failed to parse or validate.

    ``line`` (1-based, may be ``None``) and ``field`` locate the problem.
    """

    def __init__(self, path, message, line=None, field=None):
        self.path = str(path)
        self.line = line
        self.field = field
        where = self.path if line is None else f"{self.path}:{line}"
        if field:
            where += f": [{field}]"
        super().__init__(f"{where}: {message}")
