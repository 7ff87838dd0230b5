import pytest

from immsim.crossbar import CellAddress as A, new_crossbar
from immsim.errors import AddressError, CyclicProgramError, DiagonalCopyError, ProgramError
from immsim.metering import calibrate_pulse_width, operation_energies
from immsim.scheduler import (Copy, CopyStrategy, LimProgram, LogicOp, dependencies, lower, parse_program,
                              run)

DEPENDENT_OR = """
INIT 0 0 1
INIT 1 1 1
COPY 0 0 -> 0 2
COPY 1 1 -> 1 2
LOGIC OR (0 2, 1 2) -> 2 2
"""


def cycles(text, strategy, m=3, n=3):
    return run(parse_program(text), strategy, new_crossbar(m, n, seed=1))


@pytest.mark.parametrize("strategy,expected", [
    (CopyStrategy.IMM, 1), (CopyStrategy.READ_WRITE_BACK, 2), (CopyStrategy.DOUBLE_COMPLEMENT, 2)])
def test_single_fresh_copy(strategy, expected):
    rep = cycles("INIT 0 0 1\nCOPY 0 0 -> 0 1", strategy)
    assert rep.total_cycles == expected
    assert rep.final_state[0].startswith("11")


def test_copy_onto_used_destination_needs_reset():
    text = "INIT 0 0 1\nINIT 0 1 1\nCOPY 0 0 -> 0 1"
    imm = cycles(text, CopyStrategy.IMM)
    assert imm.total_cycles == 2
    assert imm.per_statement[0].micro_ops == ["RESET 0 1", "CLONE_BIT_ROW 0 0 1"]
    assert imm.per_statement[0].reset_cycles == 1
    assert cycles(text, CopyStrategy.READ_WRITE_BACK).total_cycles == 2


def test_reset_precycle_tracks_program_writes():
    steps = lower(parse_program("INIT 0 0 1\nCOPY 0 0 -> 0 1\nCOPY 1 0 -> 1 1\nCOPY 1 1 -> 0 1"),
                  CopyStrategy.IMM, new_crossbar(2, 2))
    assert [s.is_reset_precycle for s in steps] == [False, False, True, False]


def test_empty_program():
    rep = cycles("# nothing\n", CopyStrategy.IMM)
    assert (rep.total_cycles, rep.total_energy, rep.per_statement) == (0, 0.0, [])


def test_dependent_logic_program():
    imm = cycles(DEPENDENT_OR, CopyStrategy.IMM)
    rwb = cycles(DEPENDENT_OR, CopyStrategy.READ_WRITE_BACK)
    dc = cycles(DEPENDENT_OR, CopyStrategy.DOUBLE_COMPLEMENT)
    assert (imm.total_cycles, rwb.total_cycles, dc.total_cycles) == (3, 5, 5)
    assert imm.final_state == rwb.final_state == dc.final_state == ["101", "011", "001"]


def test_copy_only_ratio_is_half():
    text = "INIT 0 0 1\n" + "".join(f"COPY 0 0 -> 0 {j}\n" for j in range(1, 6)) + \
           "".join(f"COPY 0 0 -> {i} 0\n" for i in range(1, 4))
    imm = cycles(text, CopyStrategy.IMM, 4, 6).total_cycles
    rwb = cycles(text, CopyStrategy.READ_WRITE_BACK, 4, 6).total_cycles
    assert (imm, rwb) == (8, 16)


def test_totals_equal_breakdown():
    rep = cycles(DEPENDENT_OR, CopyStrategy.READ_WRITE_BACK)
    assert rep.total_cycles == sum(s.cycles for s in rep.per_statement)
    assert rep.total_energy == pytest.approx(sum(s.energy for s in rep.per_statement))
    d = rep.to_dict()
    assert set(d) >= {"strategy", "cycles", "energy_J", "per_statement"}
    assert d["strategy"] == "read_write_back"


def test_writeback_of_zero_over_one_resets():
    rep = cycles("INIT 0 1 1\nCOPY 0 0 -> 0 1", CopyStrategy.READ_WRITE_BACK)
    assert rep.per_statement[0].micro_ops == ["READ 0 0", "RESET 0 1"]
    assert rep.final_state[0] == "000"
    nop = cycles("COPY 0 0 -> 0 1", CopyStrategy.READ_WRITE_BACK)
    assert nop.per_statement[0].micro_ops == ["READ 0 0", "NOP"] and nop.total_cycles == 2


@pytest.fixture(scope="module")
def calibrated():
    w = calibrate_pulse_width()
    return w, operation_energies(w)


def test_baseline_copy_of_one_costs_more(calibrated):
    w, e = calibrated
    cb = new_crossbar(1, 2, params=new_crossbar(1, 1).params.nominal())
    prog = parse_program("INIT 0 0 1\nCOPY 0 0 -> 0 1")
    rwb = run(prog, CopyStrategy.READ_WRITE_BACK, cb.copy(), pulse_width=w)
    imm = run(prog, CopyStrategy.IMM, cb.copy(), pulse_width=w)
    assert imm.copy_energy == pytest.approx(e["bit1"], rel=1e-9)
    assert rwb.copy_energy > imm.copy_energy


def test_baseline_copy_of_zero_is_cheaper(calibrated):
    # writing '0' onto a fresh cell is skipped, so the baseline pays only a read of an HRS cell
    w, e = calibrated
    cb = new_crossbar(1, 2, params=new_crossbar(1, 1).params.nominal())
    prog = parse_program("COPY 0 0 -> 0 1")
    rwb = run(prog, CopyStrategy.READ_WRITE_BACK, cb.copy(), pulse_width=w)
    imm = run(prog, CopyStrategy.IMM, cb.copy(), pulse_width=w)
    assert rwb.copy_energy == pytest.approx(e["read0"], rel=1e-9)
    assert rwb.copy_energy < imm.copy_energy


def test_logic_ops_are_abstract():
    rep = cycles("INIT 0 0 1\nLOGIC NAND (0 0, 0 1) -> 1 1\nLOGIC XOR (0 0, 1 1, 2 2) -> 2 0", CopyStrategy.IMM)
    assert rep.final_state == ["100", "010", "000"]
    assert rep.total_energy == pytest.approx(2 * 20.17e-12)
    assert rep.total_cycles == 2


@pytest.mark.parametrize("text,exc", [
    ("COPY 0 0 -> 1 1", DiagonalCopyError),
    ("COPY 0 0 -> 0 0", CyclicProgramError),
    ("LOGIC OR (0 0, 1 1) -> 1 1", CyclicProgramError),
    ("COPY 0 0 -> 0 9", AddressError),
    ("INIT 5 5 1", AddressError),
])
def test_invalid_programs(text, exc):
    with pytest.raises(exc):
        lower(parse_program(text), CopyStrategy.IMM, new_crossbar(3, 3))


@pytest.mark.parametrize("text", ["MOVE 0 0 -> 0 1", "LOGIC FOO (0 0) -> 0 1", "LOGIC NOT (0 0, 0 1) -> 0 2",
                                  "LOGIC OR (0 x) -> 0 1", "INIT 0 0 2"])
def test_parse_errors(text):
    with pytest.raises(ProgramError, match="line 1"):
        parse_program(text)


def test_dependencies_and_round_trip():
    prog = parse_program(DEPENDENT_OR)
    assert dependencies(prog) == {0: set(), 1: set(), 2: {0, 1}}
    assert parse_program(prog.to_text()).statements == prog.statements
    assert parse_program(prog.to_text()).init == prog.init


def test_program_objects():
    prog = LimProgram([Copy(A(0, 0), A(0, 1)), LogicOp("AND", (A(0, 0), A(0, 1)), A(1, 1))])
    assert str(prog.statements[1]) == "LOGIC AND (0 0, 0 1) -> 1 1"
    assert prog.statements[1].evaluate([1, 1]) == 1


def test_pulse_observer_sees_every_simulated_pulse():
    seen = []
    cb = new_crossbar(3, 3)
    rep = run(parse_program(DEPENDENT_OR), CopyStrategy.IMM, cb, on_pulse=seen.append)
    assert len(seen) == 2 == cb.pulses
    assert len(seen) == sum(len(s.micro_ops) for s in rep.per_statement if s.statement.startswith("COPY"))
