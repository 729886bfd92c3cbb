"""Exception hierarchy.

Every error raised on purpose derives from :class:`VolvecastError`. The three
intermediate classes map onto the CLI exit codes (config 2, data 3, numeric 4).
"""


class VolvecastError(Exception):
    exit_code = 1


class ConfigError(VolvecastError):
    exit_code = 2


class DataError(VolvecastError):
    exit_code = 3


class NumericError(VolvecastError):
    exit_code = 4


class SchemaError(DataError):
    """Header lacks a required column."""

    def __init__(self, column, message=None):
        self.column = column
        super().__init__(message or f"missing required column {column!r}")


class IntegrityError(DataError):
    """Duplicate (well, date) rows or otherwise inconsistent records."""

    def __init__(self, message, offenders=()):
        self.offenders = list(offenders)
        super().__init__(message)


class ImputationError(DataError):
    def __init__(self, attribute):
        self.attribute = attribute
        super().__init__(f"attribute {attribute!r} has no present values; median undefined")


class FitError(DataError):
    def __init__(self, feature, message=None):
        self.feature = feature
        super().__init__(message or f"feature {feature!r} has zero variance on the training rows")


class AlignmentError(DataError):
    pass


class FeatureError(ConfigError):
    pass


class SplitError(DataError):
    pass


class ShapeError(ConfigError):
    pass


class PrerequisiteError(ConfigError):
    """A CLI command was run before the command producing its input."""

    def __init__(self, artifact, command):
        self.artifact = artifact
        self.command = command
        super().__init__(f"{artifact} not found; run `volvecast {command}` first")
