"""Exception hierarchy shared across the simulator."""


class SimulationError(Exception):
    """Base class for every error raised while building or running a simulation."""


class SingularNetworkError(SimulationError):
    """The nodal system has a node group with no path to a fixed voltage."""


class OscillationError(SimulationError):
    """The switching fixed-point loop did not settle within its iteration cap."""


class AddressError(SimulationError, IndexError):
    pass


class InvalidOperationError(SimulationError, ValueError):
    pass


class DestinationNotInitialized(SimulationError):
    """A clone destination was not in HRS before the clone pulse."""


class CalibrationError(SimulationError):
    pass


class ProgramError(SimulationError, ValueError):
    """A logic-in-memory program failed validation."""


class DiagonalCopyError(ProgramError):
    pass


class CyclicProgramError(ProgramError):
    pass
