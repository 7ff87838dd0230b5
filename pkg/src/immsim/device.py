"""Behavioral models for the 1T1R cell: a piecewise-linear threshold-switching
memristor in series with a gate-keyed access transistor.

Sign convention: the voltage handed to the switching rule is the signed drop
from the memristor's electrode terminal to its transistor-side (internal)
terminal. Positive drops above ``v_set`` SET an HRS device; negative drops
below ``-v_reset`` RESET an LRS device.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np


class Logic(enum.IntEnum):
    HRS = 0
    LRS = 1


class Transition(enum.IntEnum):
    TO_HRS = -1
    TO_LRS = 1


@dataclass(frozen=True)
class MemristorParams:
    """Resistance ranges and switching thresholds of the memristor.

    ``t_switch`` is the fraction of a pulse after which an over-threshold
    device has switched, so that energies scale linearly with pulse width.
    """

    r_on_min: float = 3.5e3
    r_on_max: float = 4.5e3
    r_off_min: float = 65e3
    r_off_max: float = 70e3
    v_set: float = 1.0
    v_reset: float = 2.0
    t_switch: float = 0.25

    def __post_init__(self) -> None:
        if not 0 < self.r_on_min <= self.r_on_max:
            raise ValueError(f"invalid LRS range [{self.r_on_min}, {self.r_on_max}]")
        if not self.r_off_min <= self.r_off_max:
            raise ValueError(f"invalid HRS range [{self.r_off_min}, {self.r_off_max}]")
        if not self.r_on_max < self.r_off_min:
            raise ValueError("LRS and HRS resistance ranges overlap")
        if not 0 < self.v_set < self.v_reset:
            raise ValueError("thresholds must satisfy 0 < v_set < v_reset")
        if not 0 < self.t_switch < 1:
            raise ValueError("t_switch is a pulse fraction in (0, 1)")

    @property
    def r_on_mid(self) -> float:
        return 0.5 * (self.r_on_min + self.r_on_max)

    @property
    def r_off_mid(self) -> float:
        return 0.5 * (self.r_off_min + self.r_off_max)

    def nominal(self) -> "MemristorParams":
        """Copy with both resistance ranges collapsed onto their midpoints."""
        return MemristorParams(
            r_on_min=self.r_on_mid,
            r_on_max=self.r_on_mid,
            r_off_min=self.r_off_mid,
            r_off_max=self.r_off_mid,
            v_set=self.v_set,
            v_reset=self.v_reset,
            t_switch=self.t_switch,
        )


@dataclass(frozen=True)
class TransistorParams:
    v_gate_th: float = 2.0
    r_fet_on: float = 100.0
    r_fet_off: float = 1e9

    def __post_init__(self) -> None:
        if self.r_fet_on < 0 or self.r_fet_off <= 0:
            raise ValueError("transistor resistances must be nonnegative (on) and positive (off)")
        if self.r_fet_on >= self.r_fet_off:
            raise ValueError("r_fet_on must be below r_fet_off")

    def resistance(self, v_gate: float) -> float:
        return self.r_fet_on if v_gate > self.v_gate_th else self.r_fet_off

    def is_on(self, v_gate):
        return np.asarray(v_gate) > self.v_gate_th


@dataclass(frozen=True)
class DeviceState:
    logic: Logic
    r_on: float
    r_off: float

    def resistance(self) -> float:
        return self.r_on if self.logic == Logic.LRS else self.r_off

    def with_logic(self, logic: Logic) -> "DeviceState":
        return DeviceState(Logic(logic), self.r_on, self.r_off)


def sample_device(params: MemristorParams, rng_seed: int | np.random.SeedSequence) -> DeviceState:
    """Draw one HRS device with R_on and R_off uniform over their ranges."""
    rng = np.random.default_rng(rng_seed)
    r_on = float(rng.uniform(params.r_on_min, params.r_on_max))
    r_off = float(rng.uniform(params.r_off_min, params.r_off_max))
    return DeviceState(Logic.HRS, r_on, r_off)


def switching_decision(state: DeviceState, v_electrode_minus_internal: float,
                       params: MemristorParams) -> Transition | None:
    v = v_electrode_minus_internal
    if math.isnan(v):
        raise ValueError("device voltage is NaN")
    if state.logic == Logic.HRS and v >= params.v_set:
        return Transition.TO_LRS
    if state.logic == Logic.LRS and v <= -params.v_reset:
        return Transition.TO_HRS
    return None


def switching_decisions(lrs: np.ndarray, v: np.ndarray, params: MemristorParams) -> np.ndarray:
    """Array form of :func:`switching_decision`; returns int8 codes (+1 SET, -1 RESET, 0 none)."""
    lrs = np.asarray(lrs, dtype=bool)
    v = np.asarray(v, dtype=float)
    out = np.zeros(v.shape, dtype=np.int8)
    out[(~lrs) & (v >= params.v_set)] = Transition.TO_LRS
    out[lrs & (v <= -params.v_reset)] = Transition.TO_HRS
    return out
