"""Exception hierarchy shared by all modules."""


class VemLatticeError(Exception):
    """Base class for all package errors."""


class MeshError(VemLatticeError, ValueError):
    pass


class InvalidRingError(MeshError):
    pass


class MalformedElementError(MeshError):
    pass


class InfeasibleSpacingError(MeshError):
    pass


class DegenerateDiagramError(MeshError):
    pass


class DegeneratePairError(MeshError):
    pass


class MaterialError(VemLatticeError, ValueError):
    pass


class IncompressibleError(MaterialError):
    pass


class DegenerateElementError(VemLatticeError, ValueError):
    pass


class CalibrationRangeError(MaterialError):
    pass


class UnderConstrainedError(VemLatticeError, RuntimeError):
    pass


class SolverError(VemLatticeError, RuntimeError):
    pass


class BoundaryError(VemLatticeError, ValueError):
    pass


class ConfigError(VemLatticeError, ValueError):
    pass
