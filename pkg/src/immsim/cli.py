"""Command-line entry point.

Exit codes: 0 success, 1 property failures (sweep), 2 parse error,
3 simulation error, 4 I/O error. Diagnostics go to stderr; data goes to
stdout or the declared output files.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

from . import scenario as sc
from .crossbar import Orientation, new_crossbar
from .errors import ProgramError, SimulationError
from .metering import calibrate_pulse_width
from .ops import DEFAULT_PULSE_WIDTH, OpVoltages
from .scheduler import CopyStrategy, parse_program, run as run_program
from .sweeps import PROPERTIES, run_sweep

EXIT_OK, EXIT_FAIL, EXIT_PARSE, EXIT_SIM, EXIT_IO = 0, 1, 2, 3, 4


class _ParseFailure(Exception):
    pass


def _fail(category: str, exc: BaseException, code: int) -> int:
    print(f"error[{category}]: {exc}", file=sys.stderr)
    return code


def _write_outputs(files: dict[Path, str]) -> None:
    """Write every file or none: stage into temporaries, then rename."""
    staged = []
    try:
        for path, text in files.items():
            path.parent.mkdir(parents=True, exist_ok=True)
            fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
            with os.fdopen(fd, "w", newline="") as f:
                f.write(text)
            staged.append((tmp, path))
        for tmp, path in staged:
            os.replace(tmp, path)
    finally:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)


def _pulse_width(args, params=None, transistor=None, volts=None) -> float | None:
    if getattr(args, "calibrate", False):
        return calibrate_pulse_width(params=params, transistor=transistor, volts=volts)
    if getattr(args, "pulse_width", None) is not None:
        if args.pulse_width <= 0:
            raise _ParseFailure("--pulse-width must be positive")
        return args.pulse_width * 1e-9
    return None


def cmd_run(args) -> int:
    try:
        cfg = sc.load_scenario(args.scenario)
    except sc.ScenarioError as exc:
        return _fail("parse", exc, EXIT_PARSE)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    try:
        width = _pulse_width(args, cfg.params, cfg.transistor, cfg.volts)
        outputs = sc.run_scenario(cfg, width)
    except _ParseFailure as exc:
        return _fail("parse", exc, EXIT_PARSE)
    except sc.ScenarioError as exc:
        return _fail("parse", exc, EXIT_PARSE)
    except (SimulationError, ValueError) as exc:
        return _fail("simulation", exc, EXIT_SIM)

    out_dir = Path(args.out_dir)
    names = {"report_json": cfg.report_json, "waveform_csv": cfg.waveform_csv}
    files = {out_dir / names[k]: text for k, text in outputs.items()}
    try:
        _write_outputs(files)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    for path in files:
        print(path)
    return EXIT_OK


def cmd_compare(args) -> int:
    try:
        text, _ = sc.resolve(args.program, ".lim")
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)
    try:
        prog = parse_program(text)
        width = _pulse_width(args)
        if width is None:
            width = DEFAULT_PULSE_WIDTH
        cbs = [new_crossbar(args.m, args.n, Orientation(args.orientation), seed=args.seed) for _ in range(2)]
    except (ProgramError, _ParseFailure, ValueError) as exc:
        return _fail("parse", exc, EXIT_PARSE)
    try:
        imm = run_program(prog, CopyStrategy.IMM, cbs[0], pulse_width=width)
        rwb = run_program(prog, CopyStrategy.READ_WRITE_BACK, cbs[1], pulse_width=width)
    except ProgramError as exc:
        return _fail("parse", exc, EXIT_PARSE)
    except SimulationError as exc:
        return _fail("simulation", exc, EXIT_SIM)

    result = {
        "program": args.program,
        "crossbar": {"rows": args.m, "cols": args.n, "orientation": args.orientation, "seed": args.seed},
        "pulse_width_s": width,
        "imm": imm.to_dict(),
        "read_write_back": rwb.to_dict(),
        "cycle_ratio": rwb.total_cycles / imm.total_cycles if imm.total_cycles else None,
        "energy_ratio": rwb.total_energy / imm.total_energy if imm.total_energy else None,
        "reset_cycles": sum(s.reset_cycles for s in imm.per_statement),
        "final_states_equal": imm.final_state == rwb.final_state,
    }
    if args.table:
        print(f"{'strategy':<16}{'cycles':>8}{'energy_pJ':>12}")
        for rep in (imm, rwb):
            print(f"{rep.strategy.value:<16}{rep.total_cycles:>8}{rep.total_energy * 1e12:>12.3f}")
        print(f"cycle ratio {result['cycle_ratio']:.4f}  reset cycles {result['reset_cycles']}")
    else:
        print(json.dumps(result, indent=2))
    return EXIT_OK


def cmd_sweep(args) -> int:
    try:
        overrides = {}
        if args.v_half is not None:
            overrides["v_half"] = args.v_half
        if args.col_clone_idle is not None:
            overrides["col_clone_idle_rows"] = args.col_clone_idle
        volts = OpVoltages(**overrides)
    except ValueError as exc:
        return _fail("parse", exc, EXIT_PARSE)
    try:
        summary = run_sweep(args.property, args.trials, args.seed, volts)
    except SimulationError as exc:
        return _fail("simulation", exc, EXIT_SIM)
    report = summary.to_dict()
    report["passed"] = summary.passed
    print(json.dumps(report, indent=2))
    for i, out in summary.failures:
        print(f"FAIL {args.property} trial={i} seed={out.seed}: {out.reason}", file=sys.stderr)
    return EXIT_OK if summary.passed else EXIT_FAIL


def cmd_list(args) -> int:
    for name in sc.bundled_names():
        print(name)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    width = argparse.ArgumentParser(add_help=False)
    g = width.add_mutually_exclusive_group()
    g.add_argument("--pulse-width", type=float, metavar="NS", help="pulse width in nanoseconds")
    g.add_argument("--calibrate", action="store_true", help="calibrate the pulse width against reported energies")

    p = argparse.ArgumentParser(prog="immsim", description="1T1R RRAM crossbar cloning simulator")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", parents=[width], help="run a scenario file or bundled scenario")
    r.add_argument("scenario")
    r.add_argument("--out-dir", default=".", help="directory for the scenario's declared outputs")
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("compare", parents=[width], help="IMM vs read+write-back on a LiM program")
    c.add_argument("program")
    c.add_argument("--m", type=int, default=3)
    c.add_argument("--n", type=int, default=3)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--orientation", choices=[o.value for o in Orientation], default="vertical")
    c.add_argument("--table", action="store_true", help="print a text table instead of JSON")
    c.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep", help="run a randomized property")
    s.add_argument("property", choices=sorted(PROPERTIES))
    s.add_argument("--trials", type=int, default=1000)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--v-half", type=float, help="override the half-select bias (V)")
    s.add_argument("--col-clone-idle", choices=["float", "half"])
    s.set_defaults(func=cmd_sweep)

    ls = sub.add_parser("list", help="list bundled scenarios")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
