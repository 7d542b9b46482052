"""Quasi-static DC solver over fabric circuit graphs.

Because the network has no reactive elements, a transient is just the
sequence of DC operating points of the switch-state intervals; within
an interval every sample is identical.  run_transient exploits that and
solves each distinct control state once.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..devices import Bistable, DiodeModel, IdealResistor, SwitchModel, element_stamp
from ..errors import AssemblyError, NonConvergenceError
from ..fabric import CircuitGraph, GND
from . import kernel

DEFAULT_MAX_ITER = 100
READ_SCALE_TOL = 1e-12      # junction residual, amps; pad drives <= 1 V
PROGRAM_SCALE_TOL = 1e-9


@dataclass(frozen=True)
class MnaSystem:
    n_nodes: int
    n_sources: int
    lin_a: np.ndarray
    lin_b: np.ndarray
    lin_g: np.ndarray
    lin_i0: np.ndarray
    dio_a: np.ndarray
    dio_b: np.ndarray
    dio_vf: np.ndarray
    dio_gon: np.ndarray
    dio_goff: np.ndarray
    src_p: np.ndarray
    src_n: np.ndarray
    src_v: np.ndarray
    inj_node: np.ndarray
    inj_amps: np.ndarray

    def dense(self, diode_states=None):
        """Dense (G, rhs) for one diode on/off vector (default all off)."""
        from ._core_py import _stamp_linear
        n = self.n_nodes + self.n_sources
        G = np.zeros((n, n))
        b = np.zeros(n)
        if len(self.inj_node):
            np.add.at(b[:self.n_nodes], self.inj_node, self.inj_amps)
        _stamp_linear(G, b, self.lin_a, self.lin_b, self.lin_g, self.lin_i0)
        if len(self.dio_a):
            states = (np.zeros(len(self.dio_a), dtype=bool)
                      if diode_states is None else np.asarray(diode_states, dtype=bool))
            g_d = np.where(states, self.dio_gon, self.dio_goff)
            i0_d = np.where(states, (self.dio_goff - self.dio_gon) * self.dio_vf, 0.0)
            _stamp_linear(G, b, self.dio_a, self.dio_b, g_d, i0_d)
        for k in range(self.n_sources):
            row = self.n_nodes + k
            for node, sign in ((self.src_p[k], 1.0), (self.src_n[k], -1.0)):
                if node >= 0:
                    G[node, row] += sign
                    G[row, node] += sign
            b[row] = self.src_v[k]
        return G, b


def assemble(graph: CircuitGraph) -> MnaSystem:
    """Flatten a circuit graph into kernel arrays, checking well-posedness."""
    if not graph.nodes:
        raise AssemblyError("graph has no nodes")
    if not graph.sources:
        raise AssemblyError("graph has no voltage source, nothing pins the rails")

    lin_a, lin_b, lin_g, lin_i0 = [], [], [], []
    dio_a, dio_b, dio_vf, dio_gon, dio_goff = [], [], [], [], []
    for br in graph.branches:
        el = br.element
        if isinstance(el, DiodeModel):
            dio_a.append(br.a)
            dio_b.append(br.b)
            dio_vf.append(el.v_forward)
            dio_gon.append(el.g_on)
            dio_goff.append(el.g_off)
            continue
        if isinstance(el, SwitchModel):
            g = el.conductance(br.gate_vgs if br.gate_vgs is not None else 0.0)
        elif isinstance(el, (IdealResistor, Bistable)):
            g = 1.0 / el.present_resistance
        else:
            raise AssemblyError(f"branch {br.name}: unsupported element {type(el).__name__}")
        lin_a.append(br.a)
        lin_b.append(br.b)
        lin_g.append(g)
        lin_i0.append(0.0)

    # every node needs a conductive path to the reference rail, or the
    # matrix is singular
    adjacency: dict[int, set[int]] = {}
    def link(a, b):
        adjacency.setdefault(a, set()).add(b)
        adjacency.setdefault(b, set()).add(a)
    for br in graph.branches:
        link(br.a, br.b)
    for src in graph.sources:
        link(src.pos, src.neg)
    seen = {GND}
    frontier = [GND]
    while frontier:
        node = frontier.pop()
        for other in adjacency.get(node, ()):
            if other not in seen:
                seen.add(other)
                frontier.append(other)
    for idx, name in enumerate(graph.nodes):
        if idx not in seen:
            raise AssemblyError(f"node '{name}' has no conductive path to the reference rail")

    i32 = lambda xs: np.asarray(xs, dtype=np.intc)
    f64 = lambda xs: np.asarray(xs, dtype=np.float64)
    return MnaSystem(
        n_nodes=len(graph.nodes),
        n_sources=len(graph.sources),
        lin_a=i32(lin_a), lin_b=i32(lin_b), lin_g=f64(lin_g), lin_i0=f64(lin_i0),
        dio_a=i32(dio_a), dio_b=i32(dio_b), dio_vf=f64(dio_vf),
        dio_gon=f64(dio_gon), dio_goff=f64(dio_goff),
        src_p=i32([s.pos for s in graph.sources]),
        src_n=i32([s.neg for s in graph.sources]),
        src_v=f64([s.volts for s in graph.sources]),
        inj_node=i32([n for n, _ in graph.injections]),
        inj_amps=f64([a for _, a in graph.injections]),
    )


class Solution:
    """Solved operating point with element-level accessors."""

    def __init__(self, graph: CircuitGraph, x: np.ndarray, iterations: int,
                 kcl_residual: float, diode_states: np.ndarray):
        self.graph = graph
        self.x = x
        self.n_nodes = len(graph.nodes)
        self.iterations = iterations
        self.kcl_residual = kcl_residual
        self.diode_states = diode_states
        self.branch_currents = self._element_currents()

    def voltage(self, name: str) -> float:
        if name == "gnd":
            return 0.0
        return float(self.x[self.graph.node_index[name]])

    def _node_v(self, idx: int) -> float:
        return 0.0 if idx == GND else float(self.x[idx])

    @property
    def node_voltages(self) -> dict[str, float]:
        return {name: float(self.x[i]) for i, name in enumerate(self.graph.nodes)}

    def source_current(self, name: str) -> float:
        """Current the source pushes into the network at its + terminal."""
        k = self.graph.source_index(name)
        return -float(self.x[self.n_nodes + k])

    def _element_currents(self) -> np.ndarray:
        out = np.empty(len(self.graph.branches))
        for k, br in enumerate(self.graph.branches):
            v = self._node_v(br.a) - self._node_v(br.b)
            stamp = element_stamp(br.element, v, gate_drive=br.gate_vgs)
            out[k] = stamp.conductance * v + stamp.current_offset
        return out

    def branch_current(self, name: str) -> float:
        return float(self.branch_currents[self.graph.branch_named(name)])

    def branch_voltage(self, name: str) -> float:
        br = self.graph.branches[self.graph.branch_named(name)]
        return self._node_v(br.a) - self._node_v(br.b)

    @property
    def max_branch_current(self) -> float:
        return float(np.max(np.abs(self.branch_currents)))


def pick_tolerance(graph: CircuitGraph) -> float:
    drive = max((abs(s.volts) for s in graph.sources), default=0.0)
    return READ_SCALE_TOL if drive <= 1.0 else PROGRAM_SCALE_TOL


def solve_dc(graph: CircuitGraph, tol: float | None = None,
             max_iter: int = DEFAULT_MAX_ITER) -> Solution:
    sys = assemble(graph)
    if tol is None:
        tol = pick_tolerance(graph)
    x, states, prev_states, iters, residual, ok = kernel.solve_system(
        sys.n_nodes, sys.n_sources,
        sys.lin_a, sys.lin_b, sys.lin_g, sys.lin_i0,
        sys.dio_a, sys.dio_b, sys.dio_vf, sys.dio_gon, sys.dio_goff,
        sys.src_p, sys.src_n, sys.src_v,
        sys.inj_node, sys.inj_amps,
        tol, max_iter,
    )
    if not ok:
        raise NonConvergenceError(
            f"no operating point after {iters} iterations "
            f"(residual {residual:.3e}, tol {tol:.1e})",
            last_states=states, previous_states=prev_states,
        )
    return Solution(graph, x, iters, residual, states)


@dataclass(frozen=True)
class TransientSample:
    t_ns: float
    solution: Solution


class TransientTrace:
    """Per-interval operating points expanded onto a time grid.

    Samples fall on the regular step grid plus every switch-event
    boundary; identical control states share one Solution object.
    """

    def __init__(self, timeline, interval_solutions, step_ns: float):
        self.timeline = timeline
        self.interval_solutions = interval_solutions  # list[(Interval, Solution)]
        self.step_ns = step_ns
        times = set()
        t = 0.0
        while t < self.duration_ns:
            times.add(round(t, 9))
            t += step_ns
        times.add(round(self.duration_ns, 9))
        for iv, _ in interval_solutions:
            times.add(round(iv.t_start_ns, 9))
        self.samples = tuple(
            TransientSample(t, self.solution_at(t)) for t in sorted(times)
        )

    @property
    def duration_ns(self) -> float:
        return self.timeline.duration_ns

    def solution_at(self, t_ns: float) -> Solution:
        last = self.interval_solutions[-1]
        for iv, sol in self.interval_solutions:
            if iv.t_start_ns <= t_ns < iv.t_end_ns:
                return sol
        return last[1]


def run_transient(array, timeline, step_ns: float = 1.0, graph_builder=None,
                  tol: float | None = None) -> TransientTrace:
    """Solve one operating point per distinct control state of a timeline.

    `graph_builder(array, state) -> CircuitGraph` defaults to the fabric
    netlist.  Device state does not evolve here; programming effects are
    applied between operations by the controller.
    """
    from ..fabric import netlist_for_operation
    if step_ns < 1.0:
        raise ValueError(f"step must be at least 1 ns, got {step_ns}")
    build = graph_builder or netlist_for_operation
    cache: dict = {}
    out = []
    for iv in timeline.intervals:
        key = iv.state
        if key not in cache:
            try:
                cache[key] = solve_dc(build(array, key), tol=tol)
            except NonConvergenceError as exc:
                raise NonConvergenceError(
                    f"{exc.args[0]} (interval starting at {iv.t_start_ns} ns)",
                    last_states=exc.last_states,
                    previous_states=exc.previous_states,
                ) from exc
        out.append((iv, cache[key]))
    return TransientTrace(timeline, out, step_ns)


def active_kernel() -> str:
    return kernel.active_kernel()
