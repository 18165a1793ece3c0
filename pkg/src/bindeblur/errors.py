"""Exception types raised across the package."""


class BinDeblurError(Exception):
    """Base class for all package errors."""


class IncompleteBand(BinDeblurError):
    """A full-spectrum operation received a spectrum with missing indexes."""


class BandOutOfRange(BinDeblurError):
    """A band index lies outside the index ranges of the matrix dims."""


class ZeroDirection(BinDeblurError):
    """A line direction is (0, 0) modulo the grid size."""


class DependentBasis(BinDeblurError):
    """Lattice basis vectors are linearly dependent."""


class UnsupportedDims(BinDeblurError):
    """Matrix dims do not fall into a case the algorithms cover."""


class TooLarge(BinDeblurError):
    """Exhaustive enumeration was requested beyond its hard cap."""


class UnstableCoarseSolve(BinDeblurError):
    """The coarse line-sum solve for a prime-power axis did not converge."""


class ParseError(BinDeblurError):
    """Malformed input file; carries line/column diagnostics."""

    def __init__(self, message, line=None, column=None, path=None):
        self.line = line
        self.column = column
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
