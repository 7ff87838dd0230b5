"""Randomized property trials over crossbars, clones and programs.

Every trial is driven by one integer seed derived from ``(base_seed, index)``
so a reported failure can be replayed alone with :func:`run_trial`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .crossbar import CellAddress, CrossbarState, Orientation, new_crossbar
from .metering import integrate_energy
from .ops import MicroOp, OpKind, OpVoltages, clone_pairs, execute, participant_mask
from .scheduler import LOGIC_FUNCS, Copy, CopyStrategy, LimProgram, LogicOp, run as run_program

CLONE_KINDS = (OpKind.CLONE_BIT_ROW, OpKind.CLONE_BIT_COL, OpKind.CLONE_WORD)
HALF_SELECT_TOL = 1e-6


def trial_seed(base_seed: int, index: int) -> int:
    return int(np.random.SeedSequence([base_seed, index]).generate_state(1)[0])


@dataclass
class TrialOutcome:
    seed: int
    ok: bool
    reason: str = ""
    info: dict = field(default_factory=dict)


def random_crossbar(rng: np.random.Generator, max_dim: int, min_rows: int = 1, min_cols: int = 1,
                    orientation: Orientation | None = None, p_lrs: float = 0.5) -> CrossbarState:
    m = int(rng.integers(min_rows, max_dim + 1))
    n = int(rng.integers(min_cols, max_dim + 1))
    if orientation is None:
        orientation = Orientation.VERTICAL if rng.random() < 0.5 else Orientation.HORIZONTAL
    cb = new_crossbar(m, n, orientation, seed=int(rng.integers(2**32)))
    cb.lrs[:] = rng.random((m, n)) < p_lrs
    return cb


def _two_distinct(rng: np.random.Generator, hi: int) -> tuple[int, int]:
    s, d = rng.choice(hi, size=2, replace=False)
    return int(s), int(d)


def random_clone(rng: np.random.Generator, kind: OpKind, max_dim: int = 16) -> tuple[CrossbarState, MicroOp]:
    """Random crossbar with background data plus a random clone of ``kind`` onto HRS destinations."""
    orientation = Orientation.VERTICAL if rng.random() < 0.5 else Orientation.HORIZONTAL
    word_rows = orientation is Orientation.VERTICAL
    need_rows = kind is OpKind.CLONE_BIT_COL or (kind is OpKind.CLONE_WORD and word_rows)
    need_cols = kind is OpKind.CLONE_BIT_ROW or (kind is OpKind.CLONE_WORD and not word_rows)
    cb = random_crossbar(rng, max_dim, 2 if need_rows else 1, 2 if need_cols else 1, orientation)
    m, n = cb.shape
    if kind is OpKind.CLONE_BIT_ROW:
        s, d = _two_distinct(rng, n)
        op = MicroOp.clone_bit_row(int(rng.integers(m)), s, d)
    elif kind is OpKind.CLONE_BIT_COL:
        s, d = _two_distinct(rng, m)
        op = MicroOp.clone_bit_col(int(rng.integers(n)), s, d)
    else:
        s, d = _two_distinct(rng, m if word_rows else n)
        op = MicroOp.clone_word(s, d)
    for _, dst in clone_pairs(op, cb):
        cb.set_state(dst, 0)
    return cb, op


def clone_trial(seed: int, kind: OpKind, max_dim: int = 16, volts: OpVoltages | None = None) -> dict:
    """One clone of ``kind``; returns the truth-table, half-select and retention observations."""
    volts = volts or OpVoltages()
    rng = np.random.default_rng(seed)
    cb, op = random_clone(rng, kind, max_dim)
    before = cb.lrs.copy()
    pairs = clone_pairs(op, cb)
    pr = execute(op, cb, volts)
    after = cb.lrs

    mask = participant_mask([a for p in pairs for a in p], cb.shape)
    truth_errors = []
    for src, dst in pairs:
        if after[dst] != before[src]:
            truth_errors.append(f"dst {tuple(dst)}={int(after[dst])} expected {int(before[src])}")
        if after[src] != before[src]:
            truth_errors.append(f"src {tuple(src)} changed")
    if np.any(after[~mask] != before[~mask]):
        truth_errors.append(f"{int(np.sum(after[~mask] != before[~mask]))} bystander(s) changed")

    bound = volts.v_clone / 2 + HALF_SELECT_TOL
    worst_bystander = pr.max_abs_voltage(~mask)
    src_mask = participant_mask([s for s, _ in pairs], cb.shape)
    worst_src = pr.max_abs_voltage(src_mask)
    return {
        "op": str(op),
        "shape": cb.shape,
        "orientation": cb.orientation.value,
        "truth_errors": truth_errors,
        "worst_bystander_v": worst_bystander,
        "half_select_ok": worst_bystander <= bound,
        "worst_source_v": worst_src,
        "source_retained": worst_src < cb.params.v_reset,
        "iterations": len(pr.intervals),
        "pulses": cb.pulses,
    }


def word_parallelism_trial(seed: int, width: int | None = None, rows: int | None = None,
                           volts: OpVoltages | None = None) -> dict:
    """CloneWord on a random array versus per-column clones on isolated copies of each column.

    The isolated references bias idle rows exactly as the word drive does, so
    agreement tests column independence under that drive.
    """
    volts = volts or OpVoltages()
    rng = np.random.default_rng(seed)
    n = width if width is not None else int(rng.integers(2, 65))
    m = rows if rows is not None else int(rng.integers(2, 5))
    cb = new_crossbar(m, n, Orientation.VERTICAL, seed=int(rng.integers(2**32)))
    cb.lrs[:] = rng.random((m, n)) < 0.5
    s, d = _two_distinct(rng, m)
    cb.lrs[d, :] = False

    ref_volts = replace(volts, col_clone_idle_rows="half", v_half=volts.v_word_idle)
    expected = cb.lrs.copy()
    bit_energy = 0.0
    for j in range(n):
        col = CrossbarState(m, 1, Orientation.VERTICAL, cb.params, cb.transistor,
                            cb.r_on[:, j:j + 1].copy(), cb.r_off[:, j:j + 1].copy(),
                            cb.lrs[:, j:j + 1].copy(), leak=cb.leak)
        bit_energy += integrate_energy(execute(MicroOp.clone_bit_col(0, s, d), col, ref_volts)).pulse_total
        expected[:, j] = col.lrs[:, 0]

    pulses_before = cb.pulses
    pr = execute(MicroOp.clone_word(s, d), cb, volts)
    word_energy = integrate_energy(pr).pulse_total
    return {
        "width": n,
        "rows": m,
        "pulses": cb.pulses - pulses_before,
        "matches_bitwise": bool(np.array_equal(cb.lrs, expected)),
        "word_energy": word_energy,
        "bit_energy_sum": bit_energy,
        "energy_rel_err": abs(word_energy - bit_energy) / bit_energy if bit_energy else 0.0,
    }


def random_program(rng: np.random.Generator, m: int, n: int, max_statements: int = 32) -> LimProgram:
    """Random aligned copies and logic ops; at least two cells are required."""
    prog = LimProgram()
    k = int(rng.integers(1, max_statements + 1))
    ops = sorted(LOGIC_FUNCS)

    def cell() -> CellAddress:
        return CellAddress(int(rng.integers(m)), int(rng.integers(n)))

    while len(prog.statements) < k:
        if rng.random() < 0.6:
            src = cell()
            along_row = n > 1 and (m == 1 or rng.random() < 0.5)
            if along_row:
                dst = CellAddress(src.row, int(rng.choice([c for c in range(n) if c != src.col])))
            else:
                dst = CellAddress(int(rng.choice([r for r in range(m) if r != src.row])), src.col)
            prog.statements.append(Copy(src, dst))
        else:
            op = ops[int(rng.integers(len(ops)))]
            arity = 1 if op == "NOT" else int(rng.integers(2, 4))
            out = cell()
            pool = [CellAddress(r, c) for r in range(m) for c in range(n) if (r, c) != out]
            picks = rng.choice(len(pool), size=min(arity, len(pool)), replace=False)
            prog.statements.append(LogicOp(op, tuple(pool[int(i)] for i in picks), out))
    return prog


def strategy_equivalence_trial(seed: int, max_dim: int = 16, volts: OpVoltages | None = None) -> dict:
    rng = np.random.default_rng(seed)
    while True:
        cb = random_crossbar(rng, max_dim)
        if cb.rows * cb.cols >= 2:
            break
    prog = random_program(rng, cb.rows, cb.cols)
    a, b = cb.copy(), cb.copy()
    imm = run_program(prog, CopyStrategy.IMM, a, volts)
    rwb = run_program(prog, CopyStrategy.READ_WRITE_BACK, b, volts)
    abstract = cb.copy()
    for st in prog.statements:
        if isinstance(st, Copy):
            abstract.set_state(st.dst, abstract.read_state(st.src))
        else:
            abstract.set_state(st.output, st.evaluate([int(abstract.read_state(x)) for x in st.inputs]))
    return {
        "shape": cb.shape,
        "statements": len(prog.statements),
        "program": prog.to_text(),
        "equal": bool(np.array_equal(a.lrs, b.lrs)),
        "matches_reference": bool(np.array_equal(a.lrs, abstract.lrs)),
        "imm_cycles": imm.total_cycles,
        "rwb_cycles": rwb.total_cycles,
    }


# named properties for the CLI


def _kind_for(index: int) -> OpKind:
    return CLONE_KINDS[index % len(CLONE_KINDS)]


def _truth(seed: int, index: int, volts: OpVoltages | None) -> TrialOutcome:
    r = clone_trial(seed, _kind_for(index), volts=volts)
    return TrialOutcome(seed, not r["truth_errors"], "; ".join(r["truth_errors"]), r)


def _half(seed: int, index: int, volts: OpVoltages | None) -> TrialOutcome:
    r = clone_trial(seed, _kind_for(index), volts=volts)
    return TrialOutcome(seed, r["half_select_ok"], f"bystander saw {r['worst_bystander_v']:.6f} V", r)


def _word(seed: int, index: int, volts: OpVoltages | None) -> TrialOutcome:
    r = word_parallelism_trial(seed, volts=volts)
    ok = r["pulses"] == 1 and r["matches_bitwise"] and r["energy_rel_err"] <= 0.01
    return TrialOutcome(seed, ok, f"pulses={r['pulses']} match={r['matches_bitwise']} "
                                  f"energy_err={r['energy_rel_err']:.2e}", r)


def _equiv(seed: int, index: int, volts: OpVoltages | None) -> TrialOutcome:
    r = strategy_equivalence_trial(seed, volts=volts)
    ok = r["equal"] and r["imm_cycles"] <= r["rwb_cycles"]
    return TrialOutcome(seed, ok, f"equal={r['equal']} cycles imm={r['imm_cycles']} rwb={r['rwb_cycles']}", r)


PROPERTIES: dict[str, Callable[[int, int, OpVoltages | None], TrialOutcome]] = {
    "clone-truth-table": _truth,
    "half-select": _half,
    "word-parallelism": _word,
    "strategy-equivalence": _equiv,
}


@dataclass
class SweepSummary:
    name: str
    trials: int
    base_seed: int
    failures: list[tuple[int, TrialOutcome]]

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "property": self.name,
            "trials": self.trials,
            "seed": self.base_seed,
            "failures": [{"trial": i, "seed": o.seed, "reason": o.reason} for i, o in self.failures],
        }


def run_trial(name: str, base_seed: int, index: int, volts: OpVoltages | None = None) -> TrialOutcome:
    return PROPERTIES[name](trial_seed(base_seed, index), index, volts)


def run_sweep(name: str, trials: int, base_seed: int = 0, volts: OpVoltages | None = None) -> SweepSummary:
    if name not in PROPERTIES:
        raise KeyError(f"unknown property {name!r}; choose from {', '.join(PROPERTIES)}")
    failures = []
    for i in range(trials):
        out = run_trial(name, base_seed, i, volts)
        if not out.ok:
            failures.append((i, out))
    return SweepSummary(name, trials, base_seed, failures)
