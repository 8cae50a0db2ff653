"""Exception types shared across the package."""


class PhosdynError(Exception):
    """Base class for package-specific failures."""


class FormatError(PhosdynError):
    """The file does not conform to the expected CSV structure."""


class DataError(PhosdynError):
    """The file parses but the data inside it is invalid."""


class FitError(PhosdynError):
    """A model fit cannot proceed or did not produce a usable result."""


class DegenerateVarianceError(PhosdynError):
    """Pearson correlation requested on a constant sequence."""
