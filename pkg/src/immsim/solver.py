"""Nodal analysis of the crossbar resistive network and the per-pulse
switching fixed-point loop.

Known-voltage nodes are eliminated as boundary conditions, so the remaining
system ``G_uu v_u = -G_uk v_k`` is symmetric positive definite whenever every
group of unknown nodes reaches a fixed voltage or a leak to ground. Zero-ohm
branches are merged into their neighbour before assembly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import connected_components
from scipy.sparse.linalg import spsolve

from .crossbar import CellAddress, CrossbarState, DriveConfig, Orientation
from .device import Transition, switching_decisions
from .errors import OscillationError, SimulationError, SingularNetworkError

GROUND = -1


@dataclass
class Network:
    """Linear resistive network.

    Branch endpoints index ``range(n_nodes)``; ``GROUND`` is an implicit 0 V
    node. ``fixed`` maps node -> imposed voltage, ``leak`` is a per-node
    conductance to ground and ``shorts`` lists zero-ohm node pairs.
    """

    n_nodes: int
    branch_a: np.ndarray
    branch_b: np.ndarray
    conductance: np.ndarray
    fixed: dict[int, float] = field(default_factory=dict)
    leak: np.ndarray | None = None
    shorts: Sequence[tuple[int, int]] = ()

    def __post_init__(self) -> None:
        self.branch_a = np.asarray(self.branch_a, dtype=np.int64)
        self.branch_b = np.asarray(self.branch_b, dtype=np.int64)
        self.conductance = np.asarray(self.conductance, dtype=float)
        if self.leak is None:
            self.leak = np.zeros(self.n_nodes)
        self.leak = np.asarray(self.leak, dtype=float)
        if not (self.branch_a.shape == self.branch_b.shape == self.conductance.shape):
            raise ValueError("branch arrays differ in length")
        if self.conductance.size and not (np.all(self.conductance > 0) and np.all(np.isfinite(self.conductance))):
            raise ValueError("branch conductances must be positive and finite; use shorts for 0 ohm")
        if np.any(self.leak < 0):
            raise ValueError("leak conductances must be nonnegative")

    def branch_currents(self, v: np.ndarray) -> np.ndarray:
        """Current along each branch from ``branch_a`` to ``branch_b``."""
        return self.conductance * (_at(v, self.branch_a) - _at(v, self.branch_b))


def _at(v: np.ndarray, idx: np.ndarray) -> np.ndarray:
    return np.where(idx == GROUND, 0.0, v[np.maximum(idx, 0)])


def _merge_shorts(net: Network) -> np.ndarray:
    parent = np.arange(net.n_nodes)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for a, b in net.shorts:
        if a == GROUND or b == GROUND:
            raise ValueError("shorts to ground are not supported; fix the node at 0 V instead")
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    return np.array([find(i) for i in range(net.n_nodes)], dtype=np.int64)


def solve_dc(net: Network) -> np.ndarray:
    """Node voltages of ``net`` (length ``n_nodes``)."""
    rep = _merge_shorts(net) if len(net.shorts) else np.arange(net.n_nodes)

    known = np.zeros(net.n_nodes, dtype=bool)
    v_known = np.zeros(net.n_nodes)
    for node, volts in net.fixed.items():
        r = rep[node]
        if known[r] and not np.isclose(v_known[r], volts, rtol=0, atol=1e-12):
            raise SimulationError(f"node {node} is shorted between sources at {v_known[r]} V and {volts} V")
        known[r] = True
        v_known[r] = volts

    a = np.where(net.branch_a == GROUND, GROUND, rep[np.maximum(net.branch_a, 0)])
    b = np.where(net.branch_b == GROUND, GROUND, rep[np.maximum(net.branch_b, 0)])
    g = net.conductance
    keep = a != b
    a, b, g = a[keep], b[keep], g[keep]

    leak = np.bincount(rep, weights=net.leak, minlength=net.n_nodes)
    is_rep = rep == np.arange(net.n_nodes)
    unknown = np.flatnonzero(is_rep & ~known)
    v = np.zeros(net.n_nodes)
    v[known] = v_known[known]
    if unknown.size == 0:
        return v[rep]

    uidx = np.full(net.n_nodes + 1, -1, dtype=np.int64)  # last slot maps GROUND
    uidx[unknown] = np.arange(unknown.size)
    ua, ub = uidx[a], uidx[b]
    nu = unknown.size

    rows, cols, vals = [], [], []
    rhs = np.zeros(nu)
    for p, q in ((ua, ub), (ub, ua)):
        m = p >= 0
        rows.append(p[m])
        cols.append(p[m])
        vals.append(g[m])
        both = m & (q >= 0)
        rows.append(p[both])
        cols.append(q[both])
        vals.append(-g[both])
    # boundary elimination: a branch from unknown p to known node k injects g * v_k
    for p, other in ((ua, b), (ub, a)):
        m = (p >= 0) & (uidx[other] < 0)
        vk = np.where(other[m] == GROUND, 0.0, v[np.maximum(other[m], 0)])
        np.add.at(rhs, p[m], g[m] * vk)
    anchored = (leak[unknown] > 0).copy()
    for p, other in ((ua, b), (ub, a)):
        m = (p >= 0) & (uidx[other] < 0)
        anchored[p[m]] = True
    rows.append(np.arange(nu))
    cols.append(np.arange(nu))
    vals.append(leak[unknown])

    G = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(nu, nu))
    n_comp, labels = connected_components(G, directed=False)
    comp_anchored = np.zeros(n_comp, dtype=bool)
    np.logical_or.at(comp_anchored, labels, anchored)
    if not comp_anchored.all():
        floating = unknown[~comp_anchored[labels]]
        raise SingularNetworkError(f"{floating.size} node(s) have no path to a fixed voltage or leak")

    # symmetric Jacobi scaling keeps the 1e-12 S leaks and 1e-2 S switches in range
    d = 1.0 / np.sqrt(G.diagonal())
    Gs = sp.diags(d) @ G @ sp.diags(d)
    x = d * spsolve(Gs.tocsc(), d * rhs)
    # one refinement step
    r = rhs - G @ x
    x = x + d * spsolve(Gs.tocsc(), d * r)
    v[unknown] = x
    return v[rep]


def kcl_residual(net: Network, v: np.ndarray) -> tuple[float, float]:
    """(max |KCL imbalance| over non-fixed nodes, max |current injected by a fixed node|).

    Branches across a short are excluded since their current is undefined.
    """
    rep = _merge_shorts(net) if len(net.shorts) else np.arange(net.n_nodes)
    i = net.branch_currents(v)
    net_out = np.zeros(net.n_nodes + 1)
    np.add.at(net_out, net.branch_a, i)
    np.add.at(net_out, net.branch_b, -i)
    net_out = net_out[:-1] + net.leak * v
    grouped = np.bincount(rep, weights=net_out, minlength=net.n_nodes)
    fixed_reps = {int(rep[k]) for k in net.fixed}
    free = [k for k in range(net.n_nodes) if rep[k] == k and k not in fixed_reps]
    resid = float(np.max(np.abs(grouped[free]))) if free else 0.0
    injected = float(np.max(np.abs(grouped[sorted(fixed_reps)]))) if fixed_reps else 0.0
    return resid, injected


# crossbar assembly


@dataclass
class CrossbarNetwork:
    """Network for one crossbar + drive plus the per-cell node bookkeeping."""

    net: Network
    electrode: np.ndarray  # node index of each cell's electrode line, shape (m, n)
    internal: np.ndarray
    source: np.ndarray
    g_mem: np.ndarray
    fet_on: np.ndarray

    def device_quantities(self, v: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-cell (memristor voltage, transistor voltage, series current).

        The memristor voltage is electrode minus internal node; the current
        flows electrode -> internal -> source.
        """
        v_mem = v[self.electrode] - v[self.internal]
        v_fet = v[self.internal] - v[self.source]
        return v_mem, v_fet, v_mem * self.g_mem


def node_layout(m: int, n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Row-line nodes, column-line nodes and internal nodes (m x n)."""
    return np.arange(m), m + np.arange(n), m + n + np.arange(m * n).reshape(m, n)


def build_network(cb: CrossbarState, drive: DriveConfig) -> CrossbarNetwork:
    drive.validate(cb)
    m, n = cb.shape
    row_nodes, col_nodes, internal = node_layout(m, n)
    rr, cc = np.meshgrid(np.arange(m), np.arange(n), indexing="ij")
    if cb.orientation is Orientation.VERTICAL:
        electrode, source = col_nodes[cc], row_nodes[rr]
        gate = np.asarray(drive.gate_voltages)[cc]
    else:
        electrode, source = row_nodes[rr], col_nodes[cc]
        gate = np.asarray(drive.gate_voltages)[rr]

    g_mem = 1.0 / cb.resistances()
    fet_on = cb.transistor.is_on(gate)
    r_fet = np.where(fet_on, cb.transistor.r_fet_on, cb.transistor.r_fet_off)
    shorted = r_fet == 0

    a = [electrode.ravel(), internal[~shorted]]
    b = [internal.ravel(), source[~shorted]]
    g = [g_mem.ravel(), 1.0 / r_fet[~shorted]]
    shorts = list(zip(internal[shorted].tolist(), source[shorted].tolist()))

    n_nodes = m + n + m * n
    fixed: dict[int, float] = {}
    leak = np.zeros(n_nodes)
    for nodes, drives in ((row_nodes, drive.row_drives), (col_nodes, drive.col_drives)):
        for node, d in zip(nodes, drives):
            if d is None:
                leak[node] = cb.leak
            else:
                fixed[int(node)] = d
    net = Network(n_nodes, np.concatenate(a), np.concatenate(b), np.concatenate(g),
                  fixed=fixed, leak=leak, shorts=shorts)
    return CrossbarNetwork(net, electrode, internal, source, g_mem, fet_on)


@dataclass
class Interval:
    duration: float  # fraction of the pulse width
    node_voltages: np.ndarray
    v_mem: np.ndarray
    v_fet: np.ndarray
    current: np.ndarray

    def line_voltages(self, m: int, n: int) -> tuple[np.ndarray, np.ndarray]:
        return self.node_voltages[:m], self.node_voltages[m:m + n]


@dataclass
class SwitchingEvent:
    addr: CellAddress
    transition: Transition
    interval: int


@dataclass
class PulseResult:
    intervals: list[Interval]
    switching_events: list[SwitchingEvent]
    final_states: np.ndarray
    pulse_width: float
    drive: DriveConfig
    shape: tuple[int, int]
    participants: tuple[CellAddress, ...] | None = None
    label: str = ""

    def durations(self) -> np.ndarray:
        return np.array([iv.duration for iv in self.intervals]) * self.pulse_width

    def max_abs_voltage(self, mask: np.ndarray | None = None) -> float:
        """Largest |memristor voltage| over every interval, optionally restricted to ``mask``."""
        best = 0.0
        for iv in self.intervals:
            vals = np.abs(iv.v_mem if mask is None else iv.v_mem[mask])
            if vals.size:
                best = max(best, float(vals.max()))
        return best


def interval_fractions(n_intervals: int, t_switch: float) -> list[float]:
    if n_intervals == 1:
        return [1.0]
    rest = (1.0 - t_switch) / (n_intervals - 1)
    return [t_switch] + [rest] * (n_intervals - 1)


def run_pulse(cb: CrossbarState, drive: DriveConfig, pulse_width: float, label: str = "") -> PulseResult:
    """Apply one pulse and settle abrupt switching to a fixed point; mutates ``cb``."""
    if pulse_width <= 0:
        raise ValueError("pulse width must be positive")
    m, n = cb.shape
    cap = m * n
    switched = np.zeros((m, n), dtype=np.int8)
    snapshots: list[tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]] = []
    events: list[SwitchingEvent] = []

    while True:
        cn = build_network(cb, drive)
        v = solve_dc(cn.net)
        v_mem, v_fet, cur = cn.device_quantities(v)
        snapshots.append((v, v_mem, v_fet, cur))
        decision = switching_decisions(cb.lrs, v_mem, cb.params)
        reverse = (decision != 0) & (switched != 0) & (decision != switched)
        if reverse.any():
            r, c = np.argwhere(reverse)[0]
            raise OscillationError(f"cell ({r}, {c}) switched back within one pulse")
        decision[switched != 0] = 0
        if not decision.any():
            break
        if len(snapshots) > cap:
            raise OscillationError(f"switching did not settle within {cap} iterations")
        wave = len(snapshots) - 1
        for r, c in np.argwhere(decision != 0):
            events.append(SwitchingEvent(CellAddress(int(r), int(c)), Transition(int(decision[r, c])), wave))
        cb.lrs[decision > 0] = True
        cb.lrs[decision < 0] = False
        switched[decision != 0] = decision[decision != 0]

    fractions = interval_fractions(len(snapshots), cb.params.t_switch)
    intervals = [Interval(f, *snap) for f, snap in zip(fractions, snapshots)]
    cb.pulses += 1
    return PulseResult(intervals, events, cb.lrs.copy(), pulse_width, drive, (m, n), label=label)
