"""Behavioral 1T1R RRAM crossbar simulator for in-memory mirroring (cloning)."""

from .crossbar import CellAddress, CrossbarState, DriveConfig, Orientation, from_bits, new_crossbar
from .device import Logic, MemristorParams, TransistorParams, sample_device, switching_decision
from .errors import (AddressError, CalibrationError, CyclicProgramError, DestinationNotInitialized,
                     DiagonalCopyError, InvalidOperationError, OscillationError, ProgramError,
                     SimulationError, SingularNetworkError)
from .metering import WaveformTrace, calibrate_pulse_width, integrate_energy, operation_energies
from .ops import DEFAULT_PULSE_WIDTH, MicroOp, OpKind, OpVoltages, compile, execute, read_electrical
from .scheduler import CopyStrategy, LimProgram, ScheduleReport, lower, parse_program, run
from .solver import Network, PulseResult, run_pulse, solve_dc

__version__ = "0.1.0"
