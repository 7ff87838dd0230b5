"""m x n 1T1R crossbar: topology, per-cell device state and per-pulse drives.

Vertical crossbars connect column lines to memristor electrodes and row lines
to transistor sources, with one gate line per column. Horizontal crossbars
swap both roles (row lines on electrodes, column lines on sources, one gate
line per row); a horizontal m x n array is the transpose of a vertical n x m
one.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .device import DeviceState, Logic, MemristorParams, TransistorParams
from .errors import AddressError, InvalidOperationError

MAX_DIM = 64
DEFAULT_LEAK = 1e-12
SCHEMA_VERSION = 1


class Orientation(str, enum.Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"

    def transposed(self) -> "Orientation":
        return Orientation.HORIZONTAL if self is Orientation.VERTICAL else Orientation.VERTICAL


class LineKind(str, enum.Enum):
    ROW = "row"
    COL = "col"


class Line(NamedTuple):
    kind: LineKind
    index: int


class CellAddress(NamedTuple):
    row: int
    col: int

    @property
    def T(self) -> "CellAddress":
        return CellAddress(self.col, self.row)


# A driven line carries its voltage; a floating line is None.
Drive = Optional[float]


@dataclass(frozen=True)
class DriveConfig:
    row_drives: tuple[Drive, ...]
    col_drives: tuple[Drive, ...]
    gate_voltages: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "row_drives", tuple(_as_drive(d) for d in self.row_drives))
        object.__setattr__(self, "col_drives", tuple(_as_drive(d) for d in self.col_drives))
        object.__setattr__(self, "gate_voltages", tuple(float(g) for g in self.gate_voltages))
        if any(g < 0 for g in self.gate_voltages):
            raise InvalidOperationError("gate voltages must be nonnegative")

    def transpose(self) -> "DriveConfig":
        return DriveConfig(self.col_drives, self.row_drives, self.gate_voltages)

    def validate(self, cb: "CrossbarState") -> None:
        if len(self.row_drives) != cb.rows or len(self.col_drives) != cb.cols:
            raise InvalidOperationError(
                f"drive has {len(self.row_drives)}x{len(self.col_drives)} lines, crossbar is {cb.rows}x{cb.cols}")
        if len(self.gate_voltages) != cb.gate_line_count:
            raise InvalidOperationError(
                f"expected {cb.gate_line_count} gate voltages, got {len(self.gate_voltages)}")
        any_open = any(g > cb.transistor.v_gate_th for g in self.gate_voltages)
        any_driven = any(d is not None for d in self.row_drives + self.col_drives)
        if any_open and not any_driven:
            raise InvalidOperationError("open gates with every line floating")

    @classmethod
    def idle(cls, cb: "CrossbarState") -> "DriveConfig":
        return cls((None,) * cb.rows, (None,) * cb.cols, (0.0,) * cb.gate_line_count)


def _as_drive(d) -> Drive:
    return None if d is None else float(d)


@dataclass
class CrossbarState:
    """Grid of 1T1R cells. Arrays are indexed ``[row, col]``; ``lrs`` is the logic state."""

    rows: int
    cols: int
    orientation: Orientation
    params: MemristorParams
    transistor: TransistorParams
    r_on: np.ndarray
    r_off: np.ndarray
    lrs: np.ndarray
    leak: float = DEFAULT_LEAK
    pulses: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        self.orientation = Orientation(self.orientation)
        shape = (self.rows, self.cols)
        self.r_on = np.array(self.r_on, dtype=float).reshape(shape)
        self.r_off = np.array(self.r_off, dtype=float).reshape(shape)
        self.lrs = np.array(self.lrs, dtype=bool).reshape(shape)
        if self.leak < 0:
            raise ValueError("leak conductance must be nonnegative")

    # topology

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def gate_line_count(self) -> int:
        return self.cols if self.orientation is Orientation.VERTICAL else self.rows

    def gate_index(self, addr: CellAddress) -> int:
        return addr.col if self.orientation is Orientation.VERTICAL else addr.row

    def check(self, addr: CellAddress) -> CellAddress:
        r, c = addr
        if not (0 <= r < self.rows and 0 <= c < self.cols):
            raise AddressError(f"cell {tuple(addr)} outside {self.rows}x{self.cols} crossbar")
        return CellAddress(int(r), int(c))

    def electrode_line(self, addr: CellAddress) -> Line:
        r, c = self.check(addr)
        if self.orientation is Orientation.VERTICAL:
            return Line(LineKind.COL, c)
        return Line(LineKind.ROW, r)

    def source_line(self, addr: CellAddress) -> Line:
        r, c = self.check(addr)
        if self.orientation is Orientation.VERTICAL:
            return Line(LineKind.ROW, r)
        return Line(LineKind.COL, c)

    # state access

    def cell(self, addr: CellAddress) -> DeviceState:
        r, c = self.check(addr)
        return DeviceState(Logic(int(self.lrs[r, c])), float(self.r_on[r, c]), float(self.r_off[r, c]))

    def read_state(self, addr: CellAddress) -> Logic:
        r, c = self.check(addr)
        return Logic(int(self.lrs[r, c]))

    def set_state(self, addr: CellAddress, logic) -> None:
        """Test-harness write that bypasses the electrical model."""
        r, c = self.check(addr)
        self.lrs[r, c] = bool(Logic(int(logic)))

    def resistances(self) -> np.ndarray:
        return np.where(self.lrs, self.r_on, self.r_off)

    def logic_grid(self) -> np.ndarray:
        return self.lrs.astype(np.uint8)

    def logic_strings(self) -> list[str]:
        return ["".join("1" if b else "0" for b in row) for row in self.lrs]

    # derived instances

    def copy(self) -> "CrossbarState":
        return replace(self, r_on=self.r_on.copy(), r_off=self.r_off.copy(), lrs=self.lrs.copy())

    def transpose(self) -> "CrossbarState":
        """Dual crossbar: swaps orientation and transposes the cell grid."""
        return CrossbarState(
            rows=self.cols, cols=self.rows, orientation=self.orientation.transposed(),
            params=self.params, transistor=self.transistor,
            r_on=self.r_on.T.copy(), r_off=self.r_off.T.copy(), lrs=self.lrs.T.copy(),
            leak=self.leak, pulses=self.pulses,
        )

    # serialization

    def to_dict(self) -> dict:
        return {
            "schema": SCHEMA_VERSION,
            "rows": self.rows,
            "cols": self.cols,
            "orientation": self.orientation.value,
            "logic": [["1" if b else "0" for b in row] for row in self.lrs],
            "r_on": self.r_on.tolist(),
            "r_off": self.r_off.tolist(),
            "leak": self.leak,
            "params": self.params.__dict__.copy(),
            "transistor": self.transistor.__dict__.copy(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict) -> "CrossbarState":
        if data.get("schema") != SCHEMA_VERSION:
            raise ValueError(f"unsupported crossbar schema {data.get('schema')!r}")
        logic = [[_parse_bit(v) for v in row] for row in data["logic"]]
        return cls(
            rows=int(data["rows"]), cols=int(data["cols"]),
            orientation=Orientation(data["orientation"]),
            params=MemristorParams(**data["params"]),
            transistor=TransistorParams(**data["transistor"]),
            r_on=data["r_on"], r_off=data["r_off"], lrs=logic,
            leak=float(data.get("leak", DEFAULT_LEAK)),
        )

    @classmethod
    def loads(cls, text: str) -> "CrossbarState":
        return cls.from_dict(json.loads(text))


def _parse_bit(v) -> bool:
    if v not in ("0", "1"):
        raise ValueError(f"cell logic must be '0' or '1', got {v!r}")
    return v == "1"


def new_crossbar(m: int, n: int, orientation: Orientation | str = Orientation.VERTICAL,
                 params: MemristorParams | None = None, transistor: TransistorParams | None = None,
                 seed: int | None = 0, leak: float = DEFAULT_LEAK) -> CrossbarState:
    """All-HRS crossbar with per-cell resistances drawn uniformly from ``seed``."""
    if m < 1 or n < 1:
        raise ValueError(f"crossbar dimensions must be positive, got {m}x{n}")
    if m > MAX_DIM or n > MAX_DIM:
        raise ValueError(f"crossbar dimensions are limited to {MAX_DIM}x{MAX_DIM}")
    params = params or MemristorParams()
    transistor = transistor or TransistorParams()
    rng = np.random.default_rng(seed)
    r_on = rng.uniform(params.r_on_min, params.r_on_max, size=(m, n))
    r_off = rng.uniform(params.r_off_min, params.r_off_max, size=(m, n))
    return CrossbarState(m, n, Orientation(orientation), params, transistor,
                         r_on, r_off, np.zeros((m, n), dtype=bool), leak=leak)


def from_bits(bits: Sequence[str], orientation: Orientation | str = Orientation.VERTICAL,
              params: MemristorParams | None = None, transistor: TransistorParams | None = None,
              seed: int | None = 0) -> CrossbarState:
    """Crossbar preloaded from row strings such as ``["10", "00"]``."""
    rows = [list(s) for s in bits]
    cb = new_crossbar(len(rows), len(rows[0]), orientation, params, transistor, seed)
    cb.lrs[:] = np.array([[_parse_bit(v) for v in row] for row in rows], dtype=bool)
    return cb
