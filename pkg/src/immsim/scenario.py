"""Scenario files: a versioned YAML description of one reproducible experiment."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

import yaml

from .crossbar import CrossbarState, Orientation, new_crossbar
from .device import MemristorParams, TransistorParams
from .errors import ProgramError
from .metering import (REPORTED_ENERGIES_PJ, WaveformTrace, calibrate_pulse_width, integrate_energy,
                       operation_energies)
from .ops import DEFAULT_PULSE_WIDTH, OpKind, OpVoltages, execute, parse_script, read_electrical
from .scheduler import CopyStrategy, CostModel, parse_program, run as run_program

SCHEMA_VERSION = 1
PROGRAM_KINDS = ("micro", "lim", "energy_table")
_TOP_KEYS = {"schema", "name", "description", "crossbar", "device", "transistor", "voltages",
             "pulse", "program", "outputs", "costs"}


class ScenarioError(Exception):
    """The scenario file is unreadable or violates the schema."""


@dataclass
class ScenarioConfig:
    name: str
    rows: int
    cols: int
    orientation: Orientation
    seed: int
    initial: list[str] | None
    params: MemristorParams
    transistor: TransistorParams
    volts: OpVoltages
    pulse_width: float | str  # seconds, or "calibrated"
    gap: float
    program_kind: str
    program_text: str
    strategy: CopyStrategy
    costs: CostModel
    waveform_csv: str | None = None
    report_json: str | None = None
    description: str = ""
    source: Path | None = field(default=None, repr=False)


def bundled_dir():
    return resources.files("immsim") / "scenarios"


def bundled_names() -> list[str]:
    return sorted(p.name[:-5] for p in bundled_dir().iterdir() if p.name.endswith(".yaml"))


def resolve(ref: str, suffix: str) -> tuple[str, Path | None]:
    """Read ``ref`` as a path, falling back to a bundled resource of that name."""
    p = Path(ref)
    if p.is_file():
        return p.read_text(), p
    res = bundled_dir() / (ref if ref.endswith(suffix) else ref + suffix)
    if res.is_file():
        return res.read_text(), None
    raise FileNotFoundError(f"no such file or bundled {suffix} resource: {ref}")


def _section(data: dict, key: str) -> dict:
    val = data.get(key) or {}
    if not isinstance(val, dict):
        raise ScenarioError(f"'{key}' must be a mapping")
    return val


def _build(cls, overrides: dict, what: str):
    try:
        return cls(**overrides)
    except TypeError as exc:
        raise ScenarioError(f"{what}: {exc}") from None
    except ValueError as exc:
        raise ScenarioError(f"{what}: {exc}") from None


def parse_scenario(text: str, source: Path | None = None) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"invalid YAML: {exc}") from None
    if not isinstance(data, dict):
        raise ScenarioError("scenario must be a mapping")
    if data.get("schema") != SCHEMA_VERSION:
        raise ScenarioError(f"unsupported schema {data.get('schema')!r}; expected {SCHEMA_VERSION}")
    unknown = set(data) - _TOP_KEYS
    if unknown:
        raise ScenarioError(f"unknown keys: {', '.join(sorted(unknown))}")

    xb = _section(data, "crossbar")
    try:
        rows, cols = int(xb["rows"]), int(xb["cols"])
        orientation = Orientation(xb.get("orientation", "vertical"))
        seed = int(xb.get("seed", 0))
    except (KeyError, ValueError, TypeError) as exc:
        raise ScenarioError(f"crossbar: {exc}") from None
    initial = xb.get("initial")
    if initial is not None:
        if (not isinstance(initial, list) or len(initial) != rows
                or any(not isinstance(s, str) or len(s) != cols or set(s) - {"0", "1"} for s in initial)):
            raise ScenarioError(f"crossbar.initial must be {rows} strings of {cols} bits")

    params = _build(MemristorParams, _section(data, "device"), "device")
    transistor = _build(TransistorParams, _section(data, "transistor"), "transistor")
    volts = _build(OpVoltages, _section(data, "voltages"), "voltages")
    costs = _build(CostModel, _section(data, "costs"), "costs")

    pulse = _section(data, "pulse")
    width = pulse.get("width_ns", DEFAULT_PULSE_WIDTH * 1e9)
    if width == "calibrated":
        pulse_width: float | str = "calibrated"
    else:
        try:
            pulse_width = float(width) * 1e-9
        except (TypeError, ValueError):
            raise ScenarioError(f"pulse.width_ns must be a number or 'calibrated', got {width!r}") from None
        if pulse_width <= 0:
            raise ScenarioError("pulse.width_ns must be positive")
    try:
        gap = float(pulse.get("gap_ns", 10.0)) * 1e-9
    except (TypeError, ValueError):
        raise ScenarioError("pulse.gap_ns must be a number") from None
    if gap <= 0:
        raise ScenarioError("pulse.gap_ns must be positive")

    prog = _section(data, "program")
    kind = prog.get("kind", "micro")
    if kind not in PROGRAM_KINDS:
        raise ScenarioError(f"program.kind must be one of {PROGRAM_KINDS}")
    if "source" in prog and "file" in prog:
        raise ScenarioError("program takes either 'source' or 'file', not both")
    if "file" in prog:
        base = source.parent if source else None
        ref = str(base / prog["file"]) if base and (base / prog["file"]).is_file() else prog["file"]
        program_text, _ = resolve(ref, ".lim" if kind == "lim" else ".ops")
    else:
        program_text = prog.get("source", "")
    if kind != "energy_table" and not program_text.strip():
        raise ScenarioError("program has no statements")
    try:
        strategy = CopyStrategy(prog.get("strategy", "imm"))
    except ValueError:
        raise ScenarioError(f"unknown copy strategy {prog.get('strategy')!r}") from None

    outputs = _section(data, "outputs")
    unknown = set(outputs) - {"waveform_csv", "report_json"}
    if unknown:
        raise ScenarioError(f"unknown outputs: {', '.join(sorted(unknown))}")
    if kind == "energy_table" and outputs.get("waveform_csv"):
        raise ScenarioError("energy_table scenarios produce no waveform")

    cfg = ScenarioConfig(
        name=str(data.get("name", source.stem if source else "scenario")),
        rows=rows, cols=cols, orientation=orientation, seed=seed, initial=initial,
        params=params, transistor=transistor, volts=volts,
        pulse_width=pulse_width, gap=gap,
        program_kind=kind, program_text=program_text, strategy=strategy, costs=costs,
        waveform_csv=outputs.get("waveform_csv"), report_json=outputs.get("report_json"),
        description=str(data.get("description", "")), source=source,
    )
    # surface program syntax errors at parse time
    try:
        if kind == "micro":
            parse_script(program_text)
        elif kind == "lim":
            parse_program(program_text)
    except ProgramError as exc:
        raise ScenarioError(f"program: {exc}") from None
    try:
        new_crossbar(rows, cols, orientation, params, transistor, seed)
    except ValueError as exc:
        raise ScenarioError(f"crossbar: {exc}") from None
    return cfg


def load_scenario(ref: str) -> ScenarioConfig:
    text, path = resolve(ref, ".yaml")
    return parse_scenario(text, path)


def build_crossbar(cfg: ScenarioConfig) -> CrossbarState:
    cb = new_crossbar(cfg.rows, cfg.cols, cfg.orientation, cfg.params, cfg.transistor, cfg.seed)
    if cfg.initial:
        for r, row in enumerate(cfg.initial):
            for c, bit in enumerate(row):
                cb.lrs[r, c] = bit == "1"
    return cb


def effective_pulse_width(cfg: ScenarioConfig) -> float:
    if cfg.pulse_width == "calibrated":
        return calibrate_pulse_width(params=cfg.params, transistor=cfg.transistor, volts=cfg.volts)
    return float(cfg.pulse_width)


def _pulse_entry(index: int, op: str, pr, extra: dict | None = None) -> dict:
    rec = integrate_energy(pr)
    entry: dict[str, Any] = {
        "index": index,
        "op": op,
        "cycle": pr.label,
        "energy_J": rec.pulse_total,
        "intervals": len(pr.intervals),
        "switching_events": [
            {"cell": [e.addr.row, e.addr.col], "transition": e.transition.name, "interval": e.interval}
            for e in pr.switching_events
        ],
    }
    if extra:
        entry.update(extra)
    return entry


def run_scenario(cfg: ScenarioConfig, pulse_width: float | None = None) -> dict[str, str]:
    """Execute ``cfg``; returns the declared outputs as ``{kind: text}`` without touching disk."""
    width = pulse_width if pulse_width is not None else effective_pulse_width(cfg)
    header = {
        "schema": SCHEMA_VERSION,
        "scenario": cfg.name,
        "crossbar": {"rows": cfg.rows, "cols": cfg.cols, "orientation": cfg.orientation.value,
                     "seed": cfg.seed},
        "pulse_width_s": width,
    }
    trace = WaveformTrace(cfg.rows, cfg.cols, gap=cfg.gap)

    if cfg.program_kind == "energy_table":
        energies = operation_energies(width, cfg.params, cfg.transistor, cfg.volts)
        report = {**header,
                  "energies_J": energies,
                  "reported_pJ": {**REPORTED_ENERGIES_PJ, "reset": 15.54, "read": 3.1, "word_avg": 11.28},
                  "ratios": {"bit1_over_bit0": energies["bit1"] / energies["bit0"],
                             "word11_over_bit1": energies["word11"] / energies["bit1"],
                             "word00_over_bit0": energies["word00"] / energies["bit0"]}}
        trace_cb = None
    elif cfg.program_kind == "micro":
        cb = build_crossbar(cfg)
        pulses = []
        for i, op in enumerate(parse_script(cfg.program_text)):
            if op.kind is OpKind.READ:
                rr = read_electrical(op.args, cb, cfg.volts, width)
                pr = rr.pulse
                extra = {"read": {"cell": list(op.args), "bit": int(rr.bit), "current_A": rr.current}}
            else:
                pr = execute(op, cb, cfg.volts, width)
                extra = None
            trace.append(pr)
            pulses.append(_pulse_entry(i, str(op), pr, extra))
        report = {**header, "pulses": pulses,
                  "total_energy_J": sum(p["energy_J"] for p in pulses),
                  "final_state": cb.logic_strings()}
        trace_cb = cb
    else:
        cb = build_crossbar(cfg)
        prog = parse_program(cfg.program_text)
        sched = run_program(prog, cfg.strategy, cb, cfg.volts, width, cfg.costs, on_pulse=trace.append)
        report = {**header, **sched.to_dict()}
        trace_cb = cb

    out = {}
    if cfg.report_json:
        out["report_json"] = json.dumps(report, indent=2) + "\n"
    if cfg.waveform_csv:
        if trace_cb is None or not trace.times:
            raise ScenarioError("waveform_csv requested but the program produced no pulses")
        out["waveform_csv"] = trace.to_csv()
    return out
