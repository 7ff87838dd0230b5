"""Logic-in-memory programs with cross-cell data dependencies.

Copies are resolved either by in-memory cloning (one pulse, plus a RESET pulse
when the destination holds a '1') or by the conventional read followed by a
write-back (two cycles). Logic operations are priced as abstract one-cycle
units; only the copy paths are simulated electrically.

Program text::

    INIT 0 0 1               # preload cell (0, 0) with '1' (free, not a statement)
    COPY 0 0 -> 0 2
    LOGIC OR (0 2, 1 2) -> 2 2
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Union

from .crossbar import CellAddress, CrossbarState
from .device import Logic
from .errors import CyclicProgramError, DiagonalCopyError, ProgramError
from .metering import integrate_energy
from .ops import DEFAULT_PULSE_WIDTH, MicroOp, OpKind, OpVoltages, execute, read_electrical


class CopyStrategy(str, enum.Enum):
    IMM = "imm"
    READ_WRITE_BACK = "read_write_back"
    # two back-to-back complement operations; abstract cost only
    DOUBLE_COMPLEMENT = "double_complement"


LOGIC_FUNCS = {
    "OR": lambda xs: int(any(xs)),
    "AND": lambda xs: int(all(xs)),
    "NOR": lambda xs: int(not any(xs)),
    "NAND": lambda xs: int(not all(xs)),
    "XOR": lambda xs: sum(xs) % 2,
    "NOT": lambda xs: int(not xs[0]),
}


@dataclass(frozen=True)
class Copy:
    src: CellAddress
    dst: CellAddress

    def __str__(self) -> str:
        return f"COPY {self.src.row} {self.src.col} -> {self.dst.row} {self.dst.col}"


@dataclass(frozen=True)
class LogicOp:
    op: str
    inputs: tuple[CellAddress, ...]
    output: CellAddress

    def __str__(self) -> str:
        args = ", ".join(f"{a.row} {a.col}" for a in self.inputs)
        return f"LOGIC {self.op} ({args}) -> {self.output.row} {self.output.col}"

    def evaluate(self, values: list[int]) -> int:
        return LOGIC_FUNCS[self.op](values)


Statement = Union[Copy, LogicOp]


@dataclass
class LimProgram:
    statements: list[Statement] = field(default_factory=list)
    init: dict[CellAddress, int] = field(default_factory=dict)

    def to_text(self) -> str:
        lines = [f"INIT {a.row} {a.col} {v}" for a, v in sorted(self.init.items())]
        lines += [str(s) for s in self.statements]
        return "".join(line + "\n" for line in lines)


@dataclass(frozen=True)
class CostModel:
    logic_energy: float = 20.17e-12
    complement_energy: float = 20.17e-12
    logic_cycles: int = 1


_CELL = r"(\d+)\s+(\d+)"
_COPY_RE = re.compile(rf"^COPY\s+{_CELL}\s*->\s*{_CELL}$", re.I)
_LOGIC_RE = re.compile(rf"^LOGIC\s+([A-Za-z]+)\s*\(([^)]*)\)\s*->\s*{_CELL}$", re.I)
_INIT_RE = re.compile(rf"^INIT\s+{_CELL}\s+([01])$", re.I)


def parse_program(text: str) -> LimProgram:
    prog = LimProgram()
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if m := _COPY_RE.match(line):
            r0, c0, r1, c1 = map(int, m.groups())
            prog.statements.append(Copy(CellAddress(r0, c0), CellAddress(r1, c1)))
        elif m := _LOGIC_RE.match(line):
            op = m.group(1).upper()
            if op not in LOGIC_FUNCS:
                raise ProgramError(f"line {lineno}: unknown logic operation {op!r}")
            inputs = []
            for part in m.group(2).split(","):
                cell = part.split()
                if len(cell) != 2 or not all(x.isdigit() for x in cell):
                    raise ProgramError(f"line {lineno}: malformed input cell {part.strip()!r}")
                inputs.append(CellAddress(int(cell[0]), int(cell[1])))
            if op == "NOT" and len(inputs) != 1:
                raise ProgramError(f"line {lineno}: NOT takes one input")
            prog.statements.append(LogicOp(op, tuple(inputs), CellAddress(int(m.group(3)), int(m.group(4)))))
        elif m := _INIT_RE.match(line):
            r, c, v = map(int, m.groups())
            prog.init[CellAddress(r, c)] = v
        else:
            raise ProgramError(f"line {lineno}: cannot parse {line!r}")
    return prog


def validate(prog: LimProgram, cb: CrossbarState) -> None:
    for addr in prog.init:
        cb.check(addr)
    for i, st in enumerate(prog.statements):
        if isinstance(st, Copy):
            cb.check(st.src)
            cb.check(st.dst)
            if st.src == st.dst:
                raise CyclicProgramError(f"statement {i}: copy onto itself")
            if st.src.row != st.dst.row and st.src.col != st.dst.col:
                raise DiagonalCopyError(f"statement {i}: {st} is neither row- nor column-aligned")
        else:
            for a in st.inputs:
                cb.check(a)
            cb.check(st.output)
            if st.output in st.inputs:
                raise CyclicProgramError(f"statement {i}: output {tuple(st.output)} is also an input")


def dependencies(prog: LimProgram) -> dict[int, set[int]]:
    """Read-after-write edges: statement -> statements whose outputs it reads."""
    last_writer: dict[CellAddress, int] = {}
    deps: dict[int, set[int]] = {}
    for i, st in enumerate(prog.statements):
        reads = (st.src,) if isinstance(st, Copy) else st.inputs
        deps[i] = {last_writer[a] for a in reads if a in last_writer}
        last_writer[st.dst if isinstance(st, Copy) else st.output] = i
    return deps


@dataclass(frozen=True)
class Step:
    """One cycle of a lowered program.

    ``kind`` is ``micro`` (electrically simulated op), ``writeback`` (the
    data-dependent write half of a read+write-back copy), ``logic`` or
    ``complement`` (abstract cost units).
    """

    stmt: int
    kind: str
    op: MicroOp | None = None
    target: CellAddress | None = None
    is_reset_precycle: bool = False


def _clone_for(copy: Copy) -> MicroOp:
    if copy.src.row == copy.dst.row:
        return MicroOp.clone_bit_row(copy.src.row, copy.src.col, copy.dst.col)
    return MicroOp.clone_bit_col(copy.src.col, copy.src.row, copy.dst.row)


def lower(prog: LimProgram, strategy: CopyStrategy | str, cb: CrossbarState) -> list[Step]:
    """Cycle-level lowering; RESET pre-cycles follow the logic states the program implies."""
    strategy = CopyStrategy(strategy)
    validate(prog, cb)
    state = {CellAddress(r, c): int(cb.lrs[r, c]) for r in range(cb.rows) for c in range(cb.cols)}
    state.update(prog.init)
    steps: list[Step] = []
    for i, st in enumerate(prog.statements):
        if isinstance(st, LogicOp):
            steps.append(Step(i, "logic", target=st.output))
            state[st.output] = st.evaluate([state[a] for a in st.inputs])
            continue
        if strategy is CopyStrategy.IMM:
            if state[st.dst]:
                steps.append(Step(i, "micro", MicroOp.reset(*st.dst), st.dst, is_reset_precycle=True))
            steps.append(Step(i, "micro", _clone_for(st), st.dst))
        elif strategy is CopyStrategy.READ_WRITE_BACK:
            steps.append(Step(i, "micro", MicroOp.read(*st.src), st.src))
            steps.append(Step(i, "writeback", target=st.dst))
        else:
            steps.append(Step(i, "complement", target=st.dst))
            steps.append(Step(i, "complement", target=st.dst))
        state[st.dst] = state[st.src]
    return steps


@dataclass
class StatementCost:
    index: int
    statement: str
    cycles: int = 0
    energy: float = 0.0
    micro_ops: list[str] = field(default_factory=list)
    reset_cycles: int = 0

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "statement": self.statement,
            "cycles": self.cycles,
            "energy_J": self.energy,
            "micro_ops": self.micro_ops,
            "reset_cycles": self.reset_cycles,
        }


@dataclass
class ScheduleReport:
    strategy: CopyStrategy
    total_cycles: int
    total_energy: float
    per_statement: list[StatementCost]
    final_state: list[str]
    pulse_width: float

    def to_dict(self) -> dict:
        return {
            "strategy": self.strategy.value,
            "cycles": self.total_cycles,
            "energy_J": self.total_energy,
            "pulse_width_s": self.pulse_width,
            "per_statement": [s.to_dict() for s in self.per_statement],
            "final_state": self.final_state,
        }

    @property
    def copy_energy(self) -> float:
        return sum(s.energy for s in self.per_statement if s.statement.startswith("COPY"))


def run(prog: LimProgram, strategy: CopyStrategy | str, cb: CrossbarState,
        volts: OpVoltages | None = None, pulse_width: float = DEFAULT_PULSE_WIDTH,
        costs: CostModel | None = None, on_pulse=None) -> ScheduleReport:
    """Execute ``prog`` on ``cb`` (mutated). ``on_pulse(pulse_result)`` observes every simulated pulse."""
    strategy = CopyStrategy(strategy)
    volts = volts or OpVoltages()
    costs = costs or CostModel()
    steps = lower(prog, strategy, cb)
    for addr, v in prog.init.items():
        cb.set_state(addr, v)

    per = [StatementCost(i, str(st)) for i, st in enumerate(prog.statements)]
    last_read: dict[int, Logic] = {}

    def simulate(op: MicroOp, entry: StatementCost) -> None:
        if op.kind is OpKind.READ:
            rr = read_electrical(op.args, cb, volts, pulse_width)
            last_read[entry.index] = rr.bit
            pr = rr.pulse
        else:
            pr = execute(op, cb, volts, pulse_width)
        entry.energy += integrate_energy(pr).pulse_total
        entry.micro_ops.append(str(op))
        if on_pulse is not None:
            on_pulse(pr)

    for step in steps:
        entry = per[step.stmt]
        entry.cycles += 1
        if step.kind == "micro":
            simulate(step.op, entry)
            entry.reset_cycles += int(step.is_reset_precycle)
        elif step.kind == "writeback":
            want, have = last_read[step.stmt], cb.read_state(step.target)
            if want == have:
                entry.micro_ops.append("NOP")
            elif want == Logic.LRS:
                simulate(MicroOp.set(*step.target), entry)
            else:
                simulate(MicroOp.reset(*step.target), entry)
        elif step.kind == "logic":
            st = prog.statements[step.stmt]
            cb.set_state(st.output, st.evaluate([int(cb.read_state(a)) for a in st.inputs]))
            entry.energy += costs.logic_energy
            entry.micro_ops.append(f"LOGIC {st.op}")
            entry.cycles += costs.logic_cycles - 1
        else:
            entry.energy += costs.complement_energy
            entry.micro_ops.append("COMPLEMENT")
            if entry.micro_ops.count("COMPLEMENT") == 2:
                st = prog.statements[step.stmt]
                cb.set_state(st.dst, cb.read_state(st.src))

    return ScheduleReport(
        strategy=strategy,
        total_cycles=sum(s.cycles for s in per),
        total_energy=sum(s.energy for s in per),
        per_statement=per,
        final_state=cb.logic_strings(),
        pulse_width=pulse_width,
    )
