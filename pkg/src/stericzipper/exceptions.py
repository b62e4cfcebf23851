"""Exception types shared across the package."""


class StericZipperError(Exception):
    """Base class for all package errors."""


class PDBParseError(StericZipperError, ValueError):
    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)


class StructureError(StericZipperError, ValueError):
    """Structure violates a chain/residue/atom invariant."""


class PDBFormatError(StericZipperError, ValueError):
    """Value cannot be represented in the fixed-column layout."""


class AtomNotFoundError(StericZipperError, LookupError):
    pass


class AmbiguousAtomError(StericZipperError, LookupError):
    pass


class LabelError(StericZipperError, ValueError):
    """Chain relabeling would produce duplicate chain ids."""


class FetchError(StericZipperError):
    def __init__(self, message: str, entry_id: str | None = None, status: int | None = None):
        self.entry_id = entry_id
        self.status = status
        super().__init__(message)


class SingularityError(StericZipperError, ArithmeticError):
    """Two interacting atoms are closer than the distance floor."""

    def __init__(self, i: int, j: int, distance: float):
        self.pair = (i, j)
        self.distance = distance
        super().__init__(f"atoms {i} and {j} are {distance:.3g} A apart (coincident)")


class ObjectiveError(StericZipperError, ValueError):
    """Objective is not finite at the starting point."""
