"""Acceptance criteria, each at its stated tolerance. One verdict line per criterion."""

import os
import time

import numpy as np
import pytest

from immsim import cli
from immsim.crossbar import new_crossbar
from immsim.device import TransistorParams
from immsim.metering import calibrate_pulse_width, operation_energies
from immsim.ops import MicroOp, OpKind, execute
from immsim.scenario import bundled_names, resolve
from immsim.scheduler import CopyStrategy, Copy, LimProgram, parse_program, run
from immsim.crossbar import CellAddress
from immsim.sweeps import CLONE_KINDS, clone_trial, trial_seed, word_parallelism_trial, strategy_equivalence_trial

CLONE_TRIALS = 1000


def test_series_divider_fidelity(verdict):
    r_a, r_b, v_c = 4e3, 67.5e3, 1.5
    expected = r_a / (r_a + r_b) * v_c
    cb = new_crossbar(1, 2, transistor=TransistorParams(r_fet_on=0.0))
    cb.r_on[0, 0], cb.r_off[0, 1] = r_a, r_b
    cb.lrs[0, 0] = True
    t0 = time.perf_counter()
    pr = execute(MicroOp.clone_bit_row(0, 0, 1), cb)
    elapsed = time.perf_counter() - t0
    v_node = pr.intervals[0].node_voltages[0]
    rel = abs(v_node - expected) / expected
    verdict(1, "series divider", rel <= 1e-6 and round(v_node, 5) == 0.08392,
            f"V={v_node:.10f} V, rel err {rel:.1e}, {elapsed * 1e3:.1f} ms")


@pytest.fixture(scope="module")
def clone_sweep():
    t0 = time.perf_counter()
    results = {k: [clone_trial(trial_seed(2024, i), k) for i in range(CLONE_TRIALS)] for k in CLONE_KINDS}
    return results, time.perf_counter() - t0


def test_clone_truth_table(verdict, clone_sweep):
    results, elapsed = clone_sweep
    fails = {k.value: sum(bool(r["truth_errors"]) for r in rs) for k, rs in results.items()}
    detail = ", ".join(f"{k}: {v}/{CLONE_TRIALS} failed" for k, v in fails.items())
    verdict(2, "clone truth table", sum(fails.values()) == 0 and elapsed < 30, f"{detail}; {elapsed:.1f} s")


def test_half_select_safety(verdict, clone_sweep):
    results, _ = clone_sweep
    bound = 0.75 + 1e-6
    worst = max(r["worst_bystander_v"] for rs in results.values() for r in rs)
    violations = sum(r["worst_bystander_v"] > bound for rs in results.values() for r in rs)
    verdict(3, "half-select safety", violations == 0, f"worst bystander {worst:.6f} V, {violations} violations")


def test_word_clone_constant_time(verdict):
    bad = []
    worst_err = 0.0
    for width in (2, 4, 8, 16, 32, 64):
        for i in range(5):
            r = word_parallelism_trial(trial_seed(width, i), width=width, rows=2)
            worst_err = max(worst_err, r["energy_rel_err"])
            if r["pulses"] != 1 or not r["matches_bitwise"] or r["energy_rel_err"] > 0.01:
                bad.append((width, i, r["pulses"], r["matches_bitwise"], r["energy_rel_err"]))
    verdict(4, "word clone O(1)", not bad, f"{len(bad)} bad cases, worst energy err {worst_err:.2e}")


def test_energy_structure(verdict):
    w = calibrate_pulse_width()
    e = operation_energies(w)
    ratio = e["bit1"] / e["bit0"]
    checks = {
        "ordering": e["bit0"] * 5 <= e["bit1"] < e["reset"] < e["set"],
        "bit ratio": 5 <= ratio <= 30,
        "word11": abs(e["word11"] / e["bit1"] - 2) <= 0.1,
        "word00": abs(e["word00"] / (2 * e["bit0"]) - 1) <= 0.05,
        "width": 10e-9 < w < 200e-9,
    }
    failed = [k for k, ok in checks.items() if not ok]
    verdict(5, "energy structure", not failed,
            f"w*={w * 1e9:.2f} ns, bit1/bit0={ratio:.2f}, word11/bit1={e['word11'] / e['bit1']:.3f}, "
            f"word00/2bit0={e['word00'] / (2 * e['bit0']):.3f}" + (f"; failed {failed}" if failed else ""))


def _cycles(prog, m, n):
    out = []
    for strategy in (CopyStrategy.IMM, CopyStrategy.READ_WRITE_BACK):
        out.append(run(prog, strategy, new_crossbar(m, n, seed=3)).total_cycles)
    return out


def test_latency_claim(verdict):
    ratios = []
    rng = np.random.default_rng(6)
    for _ in range(20):
        m, n = int(rng.integers(2, 9)), int(rng.integers(2, 9))
        k = int(rng.integers(1, min(m, n)))
        # copies from column 0 into fresh cells to its right
        prog = LimProgram([Copy(CellAddress(int(r), 0), CellAddress(int(r), j + 1))
                           for r in rng.choice(m, size=k, replace=False) for j in range(n - 1)])
        imm, rwb = _cycles(prog, m, n)
        ratios.append(imm / rwb)
    copy8 = parse_program(resolve("copy8", ".lim")[0])
    i8, r8 = _cycles(copy8, 4, 4)
    fig = parse_program(resolve("fig1c_dependency", ".lim")[0])
    fi, fr = _cycles(fig, 3, 3)
    ok = all(r == 0.5 for r in ratios) and i8 / r8 == 0.5 and (fi, fr) == (3, 5)
    verdict(6, "latency", ok, f"copy-only ratios {sorted(set(ratios))}, 8-copy {i8}/{r8}, dependency {fi} vs {fr}")


def test_strategy_equivalence(verdict):
    t0 = time.perf_counter()
    results = [strategy_equivalence_trial(trial_seed(77, i)) for i in range(500)]
    elapsed = time.perf_counter() - t0
    mismatches = sum(not r["equal"] for r in results)
    verdict(7, "strategy equivalence", mismatches == 0 and elapsed < 60,
            f"{mismatches}/500 mismatches; {elapsed:.1f} s")


def test_determinism(verdict, tmp_path):
    differing = []
    for name in bundled_names():
        outs = []
        for rep in range(2):
            d = tmp_path / f"{name}-{rep}"
            assert cli.main(["run", name, "--out-dir", str(d)]) == 0
            outs.append({f: (d / f).read_bytes() for f in sorted(os.listdir(d))})
        if outs[0] != outs[1] or not outs[0]:
            differing.append(name)
    verdict(8, "determinism", not differing, f"{len(bundled_names())} scenarios" +
            (f"; differing {differing}" if differing else ""))
