"""Invested/reserved/potential/wasted accounting and potential-magic search."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import Bounds, minimize

from .compiler import Circuit, JSequence, circuit_to_pattern, invested_magic
from .magic import MagicValue, TUNIT, magic_value, meas_magic, meas_magic_general, sre
from .patterns import Graph, MeasurementCommand, Pattern, build_graph_state, run_pattern
from .states import PureState, U2, project_measure
from .util import InputError, ResourceLimitError, json_dumps, parallel_map, spawn_rng

__all__ = [
    "MAX_SEARCH_MEASURED",
    "MAX_SEARCH_REMAINING",
    "ResourceReport",
    "PotentialResult",
    "ledger",
    "measurement_layers",
    "potential_search",
    "compare_arbitrary_vs_standard",
    "report_to_csv",
    "report_to_json",
]

MAX_SEARCH_MEASURED = 6
MAX_SEARCH_REMAINING = 6

_DEAD_BRANCH = -1.0e6  # objective value for forced branches of probability ~0


@dataclass(frozen=True)
class ResourceReport:
    """Step-by-step magic ledger of one pattern execution.

    ``steps`` holds ``(label, invested_increment, invested_accumulated,
    reserved)`` rows: row 0 is the initial resource state, then one row per
    adaptive measurement layer and one per non-Clifford correction.  Pauli
    corrections never add a row.
    """

    steps: tuple
    potential: MagicValue
    wasted: MagicValue
    msi_bound: MagicValue

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        acc = [row[2].bits for row in self.steps]
        if any(b - a > 1e-12 for a, b in zip(acc[1:], acc)):
            raise InputError("invested_accumulated must be non-decreasing")
        if self.wasted.bits < 0:
            raise InputError(f"wasted magic is clamped at 0, got {self.wasted.bits!r} bits")

    @property
    def invested(self) -> MagicValue:
        return self.steps[-1][2]

    @property
    def reserved_final(self) -> MagicValue:
        return self.steps[-1][3]


@dataclass(frozen=True)
class PotentialResult:
    """Outcome of a potential-magic maximization.

    ``argmax`` holds one ``(qubit, theta, phi)`` triple per measured qubit
    and ``local_frame`` one ``(qubit, a, b, c)`` Euler triple (Rz-Rx-Rz)
    per unmeasured qubit — together they reproduce ``value`` exactly.
    ``optimizer_trace`` is the best objective value (T units) of each
    restart; ``converged`` is False when the best restart hit its
    iteration cap.
    """

    value: MagicValue
    argmax: tuple
    optimizer_trace: tuple
    converged: bool
    local_frame: tuple = ()

    def __post_init__(self):
        if self.optimizer_trace and self.value.t_units < max(self.optimizer_trace) - 1e-9:
            raise InputError("potential value must dominate every restart's best")


def measurement_layers(p: Pattern) -> list:
    """Group the M-commands of ``p`` into adaptive layers.

    Measurements accumulate into one layer until a command's sign domain
    consumes an outcome produced inside the open layer, or a correction
    command intervenes; either closes the layer.  Returns a list of lists
    of ``MeasurementCommand``.
    """
    layers: list = []
    open_cmds: list = []
    open_qubits: set = set()
    for cmd in p.commands:
        if isinstance(cmd, MeasurementCommand):
            if cmd.s_domain & open_qubits:
                layers.append(open_cmds)
                open_cmds, open_qubits = [], set()
            open_cmds.append(cmd)
            open_qubits.add(cmd.qubit)
        elif open_cmds:
            layers.append(open_cmds)
            open_cmds, open_qubits = [], set()
    if open_cmds:
        layers.append(open_cmds)
    return layers


def _measurement_charge(cmd: MeasurementCommand) -> MagicValue:
    if cmd.kind == "planar":
        return meas_magic(cmd.theta)
    return meas_magic_general(cmd.theta, cmd.phi)


def _check_route(p: Pattern, route) -> list | None:
    """Resolve the ``route`` argument of :func:`ledger`.

    A ``JSequence`` is compiled and its measurement angles must match the
    pattern's one-for-one; an explicit sequence of per-measurement charges
    (MagicValue, or plain bits) overrides the angle-derived charges.
    Returns the per-measurement charge list, or None for the default.
    """
    if route is None:
        return None
    meas = p.measurements
    if isinstance(route, JSequence):
        compiled = circuit_to_pattern(route).measurements
        if len(compiled) != len(meas):
            raise InputError(
                f"route/pattern mismatch: route compiles to {len(compiled)} measurements, "
                f"pattern has {len(meas)}"
            )
        for rc, pc in zip(compiled, meas):
            if pc.kind != "planar" or abs(abs(rc.theta) - abs(pc.theta)) > 1e-9:
                raise InputError(
                    f"route/pattern mismatch at {pc.label}: route angle {rc.theta!r} "
                    f"vs pattern angle {pc.theta!r}"
                )
        return None  # angles agree, so the default charges are the route's
    charges = []
    for item in route:
        if isinstance(item, MagicValue):
            charges.append(item)
        else:
            charges.append(magic_value(2.0, float(item)))
    if len(charges) != len(meas):
        raise InputError(
            f"route/pattern mismatch: {len(charges)} explicit charges "
            f"for {len(meas)} measurements"
        )
    return charges


def ledger(
    p: Pattern,
    route=None,
    input: PureState | None = None,
    potential: MagicValue | str | None = None,
    seed: int = 0,
) -> ResourceReport:
    """Invested/reserved/potential/wasted report for the all-zeros branch.

    Invested increments charge each measurement's angle (planar via
    ``meas_magic``, general via ``meas_magic_general``) and each T
    correction at the pi/4 rate; X/Z corrections are free.  Reserved values
    come from the executed run's traces.  ``potential`` defaults to the
    final reserved magic (the analytic ceiling for the built-in protocols);
    pass a MagicValue for a supplied ceiling or ``"search"`` to maximize
    over measurement angles on the declared graph.  ``route`` optionally
    cross-checks a compiled J-sequence or overrides the per-measurement
    charges (see :func:`_check_route`).
    """
    explicit = _check_route(p, route)
    meas = p.measurements
    run = run_pattern(p, input=input, policy="forced", outcomes=[0] * len(meas), trace=True)

    if p.initial_state is not None:
        initial = p.initial_state
    else:
        initial = build_graph_state(p.graph, input)

    charges = {}
    for i, cmd in enumerate(meas):
        charges[id(cmd)] = explicit[i] if explicit is not None else _measurement_charge(cmd)

    steps = [("init", magic_value(2.0, 0.0), magic_value(2.0, 0.0), sre(initial))]
    acc_bits: list = []
    layers = measurement_layers(p)
    layer_iter = iter(layers)
    current = next(layer_iter, None)
    taken = 0
    m_index = 0
    c_index = 0
    for cmd in p.commands:
        if isinstance(cmd, MeasurementCommand):
            m_index += 1
            taken += 1
            if current is not None and taken == len(current):
                inc_bits = math.fsum(charges[id(c)].bits for c in current)
                acc_bits.append(inc_bits)
                label = "+".join(c.label for c in current)
                steps.append(
                    (
                        label,
                        magic_value(2.0, inc_bits),
                        magic_value(2.0, math.fsum(acc_bits)),
                        run.reserved_trace[m_index - 1],
                    )
                )
                current = next(layer_iter, None)
                taken = 0
        else:
            if cmd.op == "T":
                inc = meas_magic(math.pi / 4.0)
                acc_bits.append(inc.bits)
                steps.append(
                    (
                        f"T{cmd.qubit}",
                        inc,
                        magic_value(2.0, math.fsum(acc_bits)),
                        run.correction_trace[c_index],
                    )
                )
            c_index += 1

    final_reserved = steps[-1][3]
    if potential is None:
        pot = final_reserved
    elif isinstance(potential, MagicValue):
        pot = potential
    elif potential == "search":
        measured = [c.qubit for c in meas]
        pot = potential_search(p.graph, measured, input=input, opts={"seed": seed}).value
    else:
        raise InputError(f"potential must be a MagicValue, 'search', or None, got {potential!r}")

    invested_final = steps[-1][2]
    wasted = magic_value(2.0, max(0.0, invested_final.bits - pot.bits))
    msi = magic_value(2.0, len(p.output) * TUNIT)
    return ResourceReport(steps=tuple(steps), potential=pot, wasted=wasted, msi_bound=msi)


# Potential-magic search -------------------------------------------------------


def _euler_unitary(a: float, b: float, c: float) -> np.ndarray:
    """Rz(a) Rx(b) Rz(c) — every single-qubit rotation up to phase."""
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    rz = lambda t: np.array([[1.0, 0.0], [0.0, np.exp(1j * t)]])  # noqa: E731
    return rz(a) @ (h @ rz(b) @ h) @ rz(c)


def _search_objective(g: Graph, measured: tuple, input: PureState | None):
    """Joint objective: measurement angles plus a free local rotation on
    each unmeasured qubit (the gauge a pattern's correction layer provides).

    The parameter vector packs ``(theta, phi)`` per measured qubit followed
    by ``(a, b, c)`` Euler angles per remaining qubit, in ascending qubit
    order.
    """
    base = build_graph_state(g, input)
    remaining = tuple(q for q in range(1, g.n + 1) if q not in set(measured))
    k = len(measured)

    def objective(x) -> float:
        state = base
        alive = list(range(1, g.n + 1))
        for i, q in enumerate(measured):
            basis = (float(x[2 * i]), float(x[2 * i + 1]))
            try:
                _, _, state = project_measure(state, alive.index(q) + 1, basis, ("forced", 0))
            except InputError:
                return _DEAD_BRANCH
            alive.remove(q)
        amps = state.amps.reshape((2,) * len(remaining))
        for j in range(len(remaining)):
            u = _euler_unitary(*(float(v) for v in x[2 * k + 3 * j : 2 * k + 3 * j + 3]))
            amps = np.moveaxis(np.tensordot(u, amps, axes=([1], [j])), 0, j)
        return sre(PureState(len(remaining), amps.reshape(-1)), 2.0).bits

    return objective, remaining


def potential_search(
    g: Graph,
    measured,
    input: PureState | None = None,
    opts: dict | None = None,
    threads: int | str | None = 1,
) -> PotentialResult:
    """Maximize the 2-Renyi magic a graph can hold under measurements on
    ``measured`` plus free local rotations on the unmeasured qubits.

    Each measured qubit gets a general basis ``(theta, phi)`` with theta in
    [0, pi/2] and phi in [0, 2pi); the objective evaluates the outcome-0
    branch, which loses no generality because the angle domain maps branch 1
    onto branch 0 via ``(theta, phi) -> (pi/2 - theta, phi + pi)``.  The
    local rotations are maximized jointly: they model the correction layer
    a pattern may apply to the leftover qubits (Cliffords there never
    change the magic, so only genuinely non-Clifford processing widens the
    orbit).  Random grid seeding (``grid_seeds`` points) is followed by
    ``restarts`` simplex refinements; with an ``input`` state the value is
    the increment over the input's own magic.  Deterministic for a fixed
    ``seed`` at any thread count.
    """
    o = {"grid_seeds": 2048, "restarts": 8, "tol": 1e-8, "seed": 0}
    o.update(opts or {})
    qubits = tuple(sorted({int(q) for q in measured}))
    if len(qubits) != len(tuple(measured)):
        raise InputError(f"measured qubits contain duplicates: {sorted(measured)}")
    if not qubits:
        raise InputError("measured qubit set is empty")
    for q in qubits:
        if not 1 <= q <= g.n:
            raise InputError(f"measured qubit {q} outside [1, {g.n}]")
    remaining = g.n - len(qubits)
    if len(qubits) > MAX_SEARCH_MEASURED:
        raise ResourceLimitError(
            f"potential search limited to {MAX_SEARCH_MEASURED} measured qubits, got {len(qubits)}"
        )
    if remaining > MAX_SEARCH_REMAINING:
        raise ResourceLimitError(
            f"potential search limited to {MAX_SEARCH_REMAINING} remaining qubits, got {remaining}"
        )
    if remaining < 1:
        raise InputError("potential search needs at least one unmeasured qubit")
    grid_seeds = int(o["grid_seeds"])
    restarts = int(o["restarts"])
    tol = float(o["tol"])
    if grid_seeds < 1 or restarts < 1 or tol <= 0:
        raise InputError(f"bad search options {o!r}")

    objective, unmeasured = _search_objective(g, qubits, input)
    offset_bits = sre(input, 2.0).bits if input is not None else 0.0

    k = len(qubits)
    dim = 2 * k + 3 * len(unmeasured)
    rng = spawn_rng(int(o["seed"]), "potential-grid", g.n, k)
    lo = np.zeros(dim)
    hi = np.array([math.pi / 2.0, 2.0 * math.pi] * k + [2.0 * math.pi] * (3 * len(unmeasured)))
    grid = rng.uniform(lo, hi, size=(grid_seeds, dim))
    grid_vals = parallel_map(objective, list(grid), threads=threads)
    order = sorted(range(grid_seeds), key=lambda i: -grid_vals[i])
    seeds = [grid[i] for i in order[: min(restarts, grid_seeds)]]

    def refine(x0):
        res = minimize(
            lambda x: -objective(x),
            x0,
            method="Nelder-Mead",
            bounds=Bounds(lo, hi),
            options={"xatol": tol, "fatol": tol, "maxiter": 400 * dim},
        )
        return -float(res.fun), tuple(float(v) for v in res.x), bool(res.success)

    results = parallel_map(refine, seeds, threads=threads)
    best_bits, best_x, best_ok = max(results, key=lambda r: r[0])
    value_bits = objective(best_x)  # re-evaluate so value == objective(argmax) exactly
    argmax = tuple((q, best_x[2 * i], best_x[2 * i + 1]) for i, q in enumerate(qubits))
    frame = tuple(
        (q, best_x[2 * k + 3 * j], best_x[2 * k + 3 * j + 1], best_x[2 * k + 3 * j + 2])
        for j, q in enumerate(unmeasured)
    )
    trace = tuple((bits - offset_bits) / TUNIT for bits, _, _ in results)
    return PotentialResult(
        value=magic_value(2.0, value_bits - offset_bits),
        argmax=argmax,
        optimizer_trace=trace,
        converged=best_ok,
        local_frame=frame,
    )


# Arbitrary- vs standard-route comparison ---------------------------------------


def _prep_unitary(theta: float, phi: float) -> np.ndarray:
    """Single-qubit unitary mapping |+> onto cos(theta)|0> + e^{i phi} sin(theta)|1>.

    A z-rotation by ``chi = arccos(b_x)`` followed by an x-rotation by
    ``xi = atan2(b_z, b_y)`` walks |+>'s Bloch vector onto the target's.
    """
    bx = math.sin(2 * theta) * math.cos(phi)
    by = math.sin(2 * theta) * math.sin(phi)
    bz = math.cos(2 * theta)
    chi = math.acos(max(-1.0, min(1.0, bx)))
    xi = math.atan2(bz, by) if (abs(by) > 1e-15 or abs(bz) > 1e-15) else 0.0
    rz = np.array([[1.0, 0.0], [0.0, np.exp(1j * chi)]])
    h = np.array([[1.0, 1.0], [1.0, -1.0]]) / math.sqrt(2.0)
    rx = h @ np.array([[1.0, 0.0], [0.0, np.exp(1j * xi)]]) @ h
    return rx @ rz


def compare_arbitrary_vs_standard(targets=None, rng: np.random.Generator | None = None, count: int = 8) -> list:
    """Magic cost of preparing each target by one general measurement versus
    a compiled gate route from |+>.

    Rows are ``(theta, phi, arbitrary, standard, difference)``: the
    arbitrary route charges exactly the target state's own magic, the
    standard route charges the compiled J angles of the preparing unitary.
    Without explicit ``targets``, ``count`` random ones are drawn from
    ``rng``.
    """
    if targets is None:
        if rng is None:
            raise InputError("random targets need an rng")
        targets = [
            (float(rng.uniform(0.0, math.pi / 2.0)), float(rng.uniform(0.0, 2.0 * math.pi)))
            for _ in range(count)
        ]
    rows = []
    for theta, phi in targets:
        theta = float(theta)
        phi = float(phi)
        arbitrary = meas_magic_general(theta, phi)
        u = _prep_unitary(theta, phi)
        standard = invested_magic(Circuit(1, (U2(1, u),))).total
        diff = magic_value(2.0, standard.bits - arbitrary.bits)
        rows.append((theta, phi, arbitrary, standard, diff))
    return rows


# Serialization ------------------------------------------------------------------


def report_to_csv(report: ResourceReport) -> str:
    """CSV serialization, columns ``step,invested_t,reserved_t``."""
    lines = ["step,invested_t,reserved_t"]
    for i, (_, _, acc, reserved) in enumerate(report.steps):
        lines.append(f"{i},{acc.t_units!r},{reserved.t_units!r}")
    return "\n".join(lines) + "\n"


def report_to_json(report: ResourceReport) -> str:
    """Deterministic JSON with per-step labels and both unit systems."""
    d = {
        "steps": [
            {
                "label": label,
                "invested_increment_bits": inc.bits,
                "invested_accumulated_bits": acc.bits,
                "invested_accumulated_t": acc.t_units,
                "reserved_bits": res.bits,
                "reserved_t": res.t_units,
            }
            for label, inc, acc, res in report.steps
        ],
        "potential_t": report.potential.t_units,
        "wasted_t": report.wasted.t_units,
        "msi_bound_t": report.msi_bound.t_units,
    }
    return json_dumps(d)
