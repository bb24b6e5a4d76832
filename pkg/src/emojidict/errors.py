"""Exception types shared across the package.

``DataError`` subclasses signal bad inputs or model files (CLI exit code 2);
plain ``ValueError`` is left for programming errors.
"""


class DataError(ValueError):
    pass


class EmptyCorpus(DataError):
    pass


class InvalidWindowConfig(DataError):
    pass


class DegenerateStats(DataError):
    """Class-weighted loss needs at least one boundary-negative sample."""


class EmptyEvalSet(DataError):
    pass


class EmptySubpart(DataError):
    pass


class InvalidConfig(DataError):
    pass


class ModelNotLoaded(DataError):
    pass


class WrongWindowWidth(DataError):
    pass


class IdOutOfRange(DataError):
    pass


class InputTooShort(DataError):
    pass


class ShapeMismatch(DataError):
    pass


class WeightFileError(DataError):
    pass
