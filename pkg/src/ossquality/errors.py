"""Exception hierarchy shared by every module."""


class OssQualityError(Exception):
    """Base class for all errors raised by this package."""

    exit_code = 3


class InputError(OssQualityError):
    """Bad input data or configuration (CLI exit code 2)."""

    exit_code = 2


class SchemaError(InputError):
    pass


class DuplicateKeyError(InputError):
    def __init__(self, keys):
        self.keys = sorted(keys)
        super().__init__(f"duplicate project_id values: {', '.join(self.keys)}")


class InputReadError(InputError, OSError):
    """A stream could not be read or decoded."""


class ConfigError(InputError):
    pass


class CompatibilityError(InputError):
    def __init__(self, missing):
        self.missing = sorted(missing)
        super().__init__(f"input lacks features required by the model: {', '.join(self.missing)}")


class DomainError(OssQualityError, ValueError):
    """A formula was evaluated outside its domain."""

    exit_code = 2


class PreconditionError(OssQualityError, ValueError):
    exit_code = 2


class TrainingError(OssQualityError):
    pass


class StratificationError(TrainingError):
    pass


class PersistenceError(OssQualityError):
    exit_code = 2
