"""Exception hierarchy shared by all cplab modules."""


class CplabError(Exception):
    """Base class for every error raised by cplab."""


class AlignmentError(CplabError):
    """A cube does not sit on the cell grid of its domain."""


class DomainError(CplabError):
    """Two objects live on different grid domains, or a cube leaves its domain."""


class ParameterError(CplabError, ValueError):
    """A numeric parameter is outside its admissible range."""


class LatticeError(CplabError):
    """A cube expected to be dyadic is not."""


class FamilyError(CplabError):
    """A cube family violates its disjointness or separation contract."""


class GeometryError(CplabError):
    """A dilated cube escapes the domain where it is required to stay inside."""


class QuantizationError(CplabError):
    """A requested measure is not an integer number of cells."""


class ConfigError(CplabError):
    """An experiment configuration cannot be parsed or references unknown names."""


class NumericError(CplabError):
    """A computation produced a non-finite value."""

    def __init__(self, operation, message=""):
        self.operation = operation
        super().__init__(f"{operation}: {message}" if message else operation)


class ContainmentError(CplabError):
    """A cell set is not contained in the cube it is measured against."""
