"""Crossbar micro-operations and their voltage schemes.

Drives are written for the vertical crossbar; a horizontal crossbar is handled
by compiling the transposed operation on the dual vertical array and
transposing the resulting drive. On a horizontal crossbar a word is therefore
a column: ``CLONE_WORD s d`` copies column ``s`` into column ``d``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Iterable, Literal

import numpy as np

from .crossbar import CellAddress, CrossbarState, DriveConfig, Orientation
from .device import Logic
from .errors import AddressError, DestinationNotInitialized, InvalidOperationError, ProgramError
from .solver import PulseResult, run_pulse

DEFAULT_PULSE_WIDTH = 40e-9


class OpKind(str, enum.Enum):
    SET = "SET"
    RESET = "RESET"
    READ = "READ"
    CLONE_BIT_ROW = "CLONE_BIT_ROW"
    CLONE_BIT_COL = "CLONE_BIT_COL"
    CLONE_WORD = "CLONE_WORD"

    @property
    def is_clone(self) -> bool:
        return self in (OpKind.CLONE_BIT_ROW, OpKind.CLONE_BIT_COL, OpKind.CLONE_WORD)

    @property
    def arity(self) -> int:
        return {OpKind.CLONE_BIT_ROW: 3, OpKind.CLONE_BIT_COL: 3, OpKind.CLONE_WORD: 2}.get(self, 2)

    @property
    def label(self) -> str:
        return "Mov" if self.is_clone else self.value.capitalize()


@dataclass(frozen=True)
class MicroOp:
    """One crossbar primitive.

    Operand layout by kind:
      SET/RESET/READ  (row, col)
      CLONE_BIT_ROW   (row, src_col, dst_col)
      CLONE_BIT_COL   (col, src_row, dst_row)
      CLONE_WORD      (src, dst) word lines
    """

    kind: OpKind
    args: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", OpKind(self.kind))
        object.__setattr__(self, "args", tuple(int(a) for a in self.args))
        if len(self.args) != self.kind.arity:
            raise InvalidOperationError(f"{self.kind.value} takes {self.kind.arity} operands, got {len(self.args)}")
        if any(a < 0 for a in self.args):
            raise AddressError(f"negative operand in {self}")
        if self.kind.is_clone and self.args[-2] == self.args[-1]:
            raise InvalidOperationError(f"{self.kind.value}: source and destination coincide")

    @classmethod
    def set(cls, row: int, col: int) -> "MicroOp":
        return cls(OpKind.SET, (row, col))

    @classmethod
    def reset(cls, row: int, col: int) -> "MicroOp":
        return cls(OpKind.RESET, (row, col))

    @classmethod
    def read(cls, row: int, col: int) -> "MicroOp":
        return cls(OpKind.READ, (row, col))

    @classmethod
    def clone_bit_row(cls, row: int, src_col: int, dst_col: int) -> "MicroOp":
        return cls(OpKind.CLONE_BIT_ROW, (row, src_col, dst_col))

    @classmethod
    def clone_bit_col(cls, col: int, src_row: int, dst_row: int) -> "MicroOp":
        return cls(OpKind.CLONE_BIT_COL, (col, src_row, dst_row))

    @classmethod
    def clone_word(cls, src: int, dst: int) -> "MicroOp":
        return cls(OpKind.CLONE_WORD, (src, dst))

    def transposed(self) -> "MicroOp":
        """The same operation on the transposed (dual orientation) crossbar."""
        if self.kind is OpKind.CLONE_BIT_ROW:
            return MicroOp(OpKind.CLONE_BIT_COL, self.args)
        if self.kind is OpKind.CLONE_BIT_COL:
            return MicroOp(OpKind.CLONE_BIT_ROW, self.args)
        if self.kind is OpKind.CLONE_WORD:
            return self
        r, c = self.args
        return MicroOp(self.kind, (c, r))

    def __str__(self) -> str:
        return " ".join([self.kind.value, *map(str, self.args)])


@dataclass(frozen=True)
class OpVoltages:
    """Drive amplitudes.

    ``col_clone_idle_rows`` selects how idle rows are driven during a
    vertical column-wise bit clone: ``"float"`` (default) or ``"half"`` to bias
    them at ``v_half``. Half-biasing loads the shared floating column through
    every open cell in it, and two LRS bystanders are enough to keep a '1' from
    cloning.

    ``v_word_idle`` biases the idle rows of a word clone. Each floating column
    then settles at a conductance-weighted mean of the source row, the
    destination row and the idle rows; with the idle bias equal to the SET
    threshold, the destination crosses it exactly when the source is LRS, for
    any number of LRS bystanders. Set it to ``v_half`` for the textbook scheme.
    """

    v_set_drive: float = 1.5
    v_reset_drive: float = 2.25
    v_read: float = 0.5
    v_clone: float = 1.5
    v_gate: float = 2.5
    v_half: float | None = None
    v_word_idle: float = 1.0
    col_clone_idle_rows: Literal["float", "half"] = "float"

    def __post_init__(self) -> None:
        if self.v_half is None:
            object.__setattr__(self, "v_half", self.v_clone / 2)
        if self.col_clone_idle_rows not in ("float", "half"):
            raise ValueError(f"col_clone_idle_rows must be 'float' or 'half', got {self.col_clone_idle_rows!r}")
        for name in ("v_set_drive", "v_reset_drive", "v_read", "v_clone", "v_gate", "v_half", "v_word_idle"):
            if not 0 <= getattr(self, name) < 10:
                raise ValueError(f"{name} outside [0, 10) V")

    def problems(self, v_set: float) -> list[str]:
        """Violated operating-window conditions for a device with SET threshold ``v_set``."""
        out = []
        if not v_set <= self.v_clone < self.v_reset_drive:
            out.append("clone voltage must lie in [v_set, v_reset_drive)")
        if not self.v_half < v_set:
            out.append("half-select bias must stay below the SET threshold")
        if abs(self.v_word_idle - v_set) > 1e-9:
            out.append("word-clone idle bias differs from the SET threshold; results depend on bystanders")
        if not self.v_read < v_set:
            out.append("read voltage must stay below the SET threshold")
        return out


def _check_range(op: MicroOp, m: int, n: int) -> None:
    k = op.kind
    if k in (OpKind.SET, OpKind.RESET, OpKind.READ):
        bounds = (m, n)
    elif k is OpKind.CLONE_BIT_ROW:
        bounds = (m, n, n)
    elif k is OpKind.CLONE_BIT_COL:
        bounds = (n, m, m)
    else:
        bounds = (m, m)
    for a, lim in zip(op.args, bounds):
        if a >= lim:
            raise AddressError(f"{op} out of bounds for a {m}x{n} vertical frame")


def _compile_vertical(op: MicroOp, m: int, n: int, volts: OpVoltages) -> DriveConfig:
    _check_range(op, m, n)
    rows: list = [None] * m
    cols: list = [None] * n
    gates = [0.0] * n
    k = op.kind
    if k is OpKind.CLONE_BIT_ROW:
        r, s, d = op.args
        gates[s] = gates[d] = volts.v_gate
        cols[s], cols[d] = 0.0, volts.v_clone
        rows = [volts.v_half] * m
        rows[r] = None
    elif k is OpKind.CLONE_BIT_COL:
        c, s, d = op.args
        gates[c] = volts.v_gate
        rows = [volts.v_half if volts.col_clone_idle_rows == "half" else None] * m
        rows[s], rows[d] = volts.v_clone, 0.0
    elif k is OpKind.CLONE_WORD:
        s, d = op.args
        gates = [volts.v_gate] * n
        rows = [volts.v_word_idle] * m
        rows[s], rows[d] = volts.v_clone, 0.0
    else:
        r, c = op.args
        gates[c] = volts.v_gate
        if k is OpKind.SET:
            cols[c], rows[r] = volts.v_set_drive, 0.0
        elif k is OpKind.RESET:
            # electrode grounded, source raised: the memristor sees -v_reset_drive
            cols[c], rows[r] = 0.0, volts.v_reset_drive
        else:
            cols[c], rows[r] = volts.v_read, 0.0
    return DriveConfig(tuple(rows), tuple(cols), tuple(gates))


def compile(op: MicroOp, cb: CrossbarState, volts: OpVoltages | None = None) -> DriveConfig:
    volts = volts or OpVoltages()
    if cb.orientation is Orientation.VERTICAL:
        return _compile_vertical(op, cb.rows, cb.cols, volts)
    return _compile_vertical(op.transposed(), cb.cols, cb.rows, volts).transpose()


def clone_pairs(op: MicroOp, cb: CrossbarState) -> list[tuple[CellAddress, CellAddress]]:
    """(source, destination) cells of a clone, in crossbar coordinates."""
    k = op.kind
    if k is OpKind.CLONE_BIT_ROW:
        r, s, d = op.args
        pairs = [(CellAddress(r, s), CellAddress(r, d))]
    elif k is OpKind.CLONE_BIT_COL:
        c, s, d = op.args
        pairs = [(CellAddress(s, c), CellAddress(d, c))]
    elif k is OpKind.CLONE_WORD:
        s, d = op.args
        if cb.orientation is Orientation.VERTICAL:
            pairs = [(CellAddress(s, j), CellAddress(d, j)) for j in range(cb.cols)]
        else:
            pairs = [(CellAddress(i, s), CellAddress(i, d)) for i in range(cb.rows)]
    else:
        return []
    for src, dst in pairs:
        cb.check(src)
        cb.check(dst)
    return pairs


def participants(op: MicroOp, cb: CrossbarState) -> tuple[CellAddress, ...]:
    if op.kind.is_clone:
        return tuple(a for pair in clone_pairs(op, cb) for a in pair)
    return (cb.check(CellAddress(*op.args)),)


def participant_mask(cells: Iterable[CellAddress], shape: tuple[int, int]) -> np.ndarray:
    mask = np.zeros(shape, dtype=bool)
    for r, c in cells:
        mask[r, c] = True
    return mask


def execute(op: MicroOp, cb: CrossbarState, volts: OpVoltages | None = None,
            pulse_width: float = DEFAULT_PULSE_WIDTH, label: str | None = None) -> PulseResult:
    """Run ``op`` as one pulse on ``cb`` (mutated in place)."""
    volts = volts or OpVoltages()
    drive = compile(op, cb, volts)
    for _, dst in clone_pairs(op, cb):
        if cb.read_state(dst) != Logic.HRS:
            raise DestinationNotInitialized(f"{op}: destination {tuple(dst)} is not in HRS")
    result = run_pulse(cb, drive, pulse_width, label=label or op.kind.label)
    result.participants = participants(op, cb)
    return result


@dataclass
class ReadResult:
    bit: Logic
    current: float
    threshold: float
    pulse: PulseResult


def read_threshold(cb: CrossbarState, volts: OpVoltages) -> float:
    """Sense threshold: the read current of a resistor at the geometric mean of the nominal states."""
    return volts.v_read / math.sqrt(cb.params.r_on_mid * cb.params.r_off_mid)


def read_electrical(addr: CellAddress, cb: CrossbarState, volts: OpVoltages | None = None,
                    pulse_width: float = DEFAULT_PULSE_WIDTH, label: str | None = None) -> ReadResult:
    volts = volts or OpVoltages()
    addr = cb.check(CellAddress(*addr))
    pr = execute(MicroOp.read(*addr), cb, volts, pulse_width, label=label)
    current = float(max(abs(iv.current[addr]) for iv in pr.intervals))
    thr = read_threshold(cb, volts)
    return ReadResult(Logic.LRS if current > thr else Logic.HRS, current, thr, pr)


# script format: one op per line, '#' comments


def parse_script(text: str) -> list[MicroOp]:
    ops = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        head, *rest = line.split()
        try:
            kind = OpKind(head.upper())
        except ValueError:
            raise ProgramError(f"line {lineno}: unknown operation {head!r}") from None
        try:
            args = tuple(int(x) for x in rest)
        except ValueError:
            raise ProgramError(f"line {lineno}: operands must be integers") from None
        try:
            ops.append(MicroOp(kind, args))
        except (InvalidOperationError, AddressError) as exc:
            raise ProgramError(f"line {lineno}: {exc}") from None
    return ops


def format_script(ops: Iterable[MicroOp]) -> str:
    return "".join(f"{op}\n" for op in ops)
