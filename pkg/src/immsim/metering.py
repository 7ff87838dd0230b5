"""Energy integration, waveform capture and pulse-width calibration."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.optimize import minimize_scalar

from .crossbar import CellAddress, from_bits
from .device import MemristorParams, TransistorParams
from .errors import CalibrationError
from .ops import MicroOp, OpVoltages, execute
from .solver import PulseResult

# Reported energies for Set, Bit(1) clone, Bit(0) clone.
REPORTED_ENERGIES_PJ = {"set": 20.17, "bit1": 9.52, "bit0": 0.71}


@dataclass
class EnergyRecord:
    per_device: dict[CellAddress, float]
    pulse_total: float
    op_kind: str
    pulse_width: float

    def to_dict(self) -> dict:
        return {
            "op": self.op_kind,
            "pulse_width_s": self.pulse_width,
            "energy_J": self.pulse_total,
            "per_device_J": {f"{r},{c}": e for (r, c), e in sorted(self.per_device.items())},
        }


def device_energy_map(pr: PulseResult, pulse_width: float | None = None) -> np.ndarray:
    """Energy (J) dissipated in each cell's memristor plus access transistor."""
    w = pr.pulse_width if pulse_width is None else pulse_width
    total = np.zeros(pr.shape)
    for iv in pr.intervals:
        power = np.abs(iv.v_mem * iv.current) + np.abs(iv.v_fet * iv.current)
        total += power * iv.duration * w
    return total


def integrate_energy(pr: PulseResult, pulse_width: float | None = None) -> EnergyRecord:
    """Piecewise-constant energy integral over the pulse, limited to the participating cells."""
    w = pr.pulse_width if pulse_width is None else pulse_width
    emap = device_energy_map(pr, w)
    cells = pr.participants
    if cells is None:
        cells = tuple(CellAddress(r, c) for r in range(pr.shape[0]) for c in range(pr.shape[1]))
    per_device = {CellAddress(*a): float(emap[a]) for a in cells}
    return EnergyRecord(per_device, math.fsum(per_device.values()), pr.label, w)


# reference operation energies


def nominal_params(params: MemristorParams | None = None) -> MemristorParams:
    return (params or MemristorParams()).nominal()


def operation_energies(pulse_width: float, params: MemristorParams | None = None,
                       transistor: TransistorParams | None = None,
                       volts: OpVoltages | None = None) -> dict[str, float]:
    """Simulated energies (J) of the basic operations on nominal devices.

    Keys: set, reset, read0, read1, bit0, bit1, word00, word01, word10, word11.
    Bit clones are row-wise on a 1x2 array; word clones run on a 2x2 array.
    """
    params = nominal_params(params)
    volts = volts or OpVoltages()

    def run(bits, op):
        cb = from_bits(bits, params=params, transistor=transistor)
        return integrate_energy(execute(op, cb, volts, pulse_width)).pulse_total

    out = {
        "set": run(["0"], MicroOp.set(0, 0)),
        "reset": run(["1"], MicroOp.reset(0, 0)),
        "read0": run(["0"], MicroOp.read(0, 0)),
        "read1": run(["1"], MicroOp.read(0, 0)),
        "bit0": run(["00"], MicroOp.clone_bit_row(0, 0, 1)),
        "bit1": run(["10"], MicroOp.clone_bit_row(0, 0, 1)),
    }
    for word in ("00", "01", "10", "11"):
        out[f"word{word}"] = run([word, "00"], MicroOp.clone_word(0, 1))
    return out


def calibrate_pulse_width(targets_pj: dict[str, float] | None = None,
                          params: MemristorParams | None = None,
                          transistor: TransistorParams | None = None,
                          volts: OpVoltages | None = None,
                          bounds: tuple[float, float] = (1e-9, 1e-6)) -> float:
    """Pulse width minimizing the squared log-error against reported energies.

    ``targets_pj`` maps a key of :func:`operation_energies` to picojoules;
    defaults to the Set/Bit(1)/Bit(0) trio.
    """
    targets = dict(REPORTED_ENERGIES_PJ if targets_pj is None else targets_pj)
    if not targets:
        raise CalibrationError("no calibration targets")

    def loss(log_w: float) -> float:
        sim = operation_energies(math.exp(log_w), params, transistor, volts)
        return sum((math.log(sim[k]) - math.log(t * 1e-12)) ** 2 for k, t in targets.items())

    lo, hi = math.log(bounds[0]), math.log(bounds[1])
    res = minimize_scalar(loss, bounds=(lo, hi), method="bounded", options={"xatol": 1e-10})
    edge = 1e-3 * (hi - lo)
    if not res.success or res.x - lo < edge or hi - res.x < edge:
        raise CalibrationError(f"no interior minimum in ({bounds[0]:g} s, {bounds[1]:g} s)")
    return float(math.exp(res.x))


# waveforms


@dataclass
class WaveformTrace:
    """Time-ordered samples across a pulse sequence.

    Each pulse contributes one sample per settled interval plus a closing
    sample at the pulse end where every line is released (all signals zero).
    Consecutive pulses are separated by ``gap`` seconds.
    """

    rows: int
    cols: int
    gap: float = 10e-9
    times: list[float] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    pulse_index: list[int] = field(default_factory=list)
    samples: list[np.ndarray] = field(default_factory=list)
    _t: float = 0.0
    _pulses: int = 0

    def __post_init__(self) -> None:
        if self.gap <= 0:
            raise ValueError("inter-pulse gap must be positive so sample times stay strictly increasing")

    @property
    def signal_names(self) -> list[str]:
        lines = [f"V_r{i}" for i in range(self.rows)] + [f"V_c{j}" for j in range(self.cols)]
        devices = [f"I_d{i}_{j}" for i in range(self.rows) for j in range(self.cols)]
        return lines + devices

    def append(self, pr: PulseResult, label: str | None = None) -> None:
        if pr.shape != (self.rows, self.cols):
            raise ValueError("pulse shape does not match trace")
        label = label or pr.label or "pulse"
        t = self._t
        m, n = pr.shape
        for iv, dur in zip(pr.intervals, pr.durations()):
            vec = np.concatenate([iv.node_voltages[:m + n], iv.current.ravel()])
            self._add(t, label, vec)
            t += dur
        self._add(t, label, np.zeros(m + n + m * n))
        self._t = t + self.gap
        self._pulses += 1

    def _add(self, t: float, label: str, vec: np.ndarray) -> None:
        self.times.append(t)
        self.labels.append(label)
        self.pulse_index.append(self._pulses)
        self.samples.append(vec)

    def cycles(self) -> list[str]:
        """Labels of the contiguous labeled segments, in order."""
        out: list[str] = []
        for lab in self.labels:
            if not out or out[-1] != lab:
                out.append(lab)
        return out

    def to_csv(self) -> str:
        if not self.times:
            raise ValueError("empty waveform trace")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["time_s", "cycle", "pulse"] + self.signal_names)
        for t, lab, p, vec in zip(self.times, self.labels, self.pulse_index, self.samples):
            w.writerow([f"{t:.6e}", lab, p] + [f"{x:.9e}" for x in vec])
        return buf.getvalue()


def export_waveform(trace: WaveformTrace, path: str | Path) -> Path:
    path = Path(path)
    text = trace.to_csv()
    with open(path, "w", newline="") as f:
        f.write(text)
    return path
