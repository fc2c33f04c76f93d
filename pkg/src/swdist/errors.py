"""Exception hierarchy shared by all swdist modules."""


class SwdistError(Exception):
    """Base class for all errors raised by swdist."""


class FormatError(SwdistError):
    """A file is not a well-formed matrix file of the supported subset."""


class ShapeError(SwdistError):
    """Array dimensions are wrong or two operands disagree in dimension."""


class DataError(SwdistError):
    """Values are invalid: non-finite entries, out-of-range ratings, asymmetry."""


class ArityError(SwdistError):
    """Too few samples, or paired inputs of mismatched length."""


class CapacityError(SwdistError):
    """A split or subsample request exceeds the available sample count."""


class WriteError(SwdistError):
    """An output file could not be written."""


class DomainError(SwdistError):
    """A parameter leaves the mathematical domain of a formula."""


class BandwidthError(SwdistError):
    """A kernel bandwidth is degenerate (zero median pairwise distance)."""


class CoverageError(SwdistError):
    """A condition grid is incomplete: missing cells or missing clean baseline."""


class ConstantInputError(SwdistError):
    """Rank correlation is undefined because one input list is constant."""
