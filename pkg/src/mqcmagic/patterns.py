"""Graph states and adaptive single-qubit measurement patterns.

A pattern is an ordered program of measurements and conditional local
corrections executed on a graph state (or on explicitly supplied initial
amplitudes when a construction lives in a fixed local frame of its
graph).  Planar measurement angles acquire a sign ``(-1)**parity`` over
the outcomes named in ``s_domain``; corrections fire when the parity of
the outcomes in ``condition`` is odd, and unconditionally when the
condition is empty.  Running a pattern records the magic of the
remaining (unmeasured) state after every command, which is what the
resource ledger consumes.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass

import numpy as np

from .magic import MagicValue, PauliString, pauli_expectation, sre
from .states import (
    CZ,
    PureState,
    T,
    X,
    Z,
    apply_gate,
    cluster_state,
    fidelity,
    init_state,
    planar_basis,
    project_measure,
)
from .util import InputError, ResourceLimitError, parallel_map

#: Branch enumeration is exhaustive over ``2**m`` outcome vectors.
MAX_BRANCH_MEASUREMENTS = 12

#: Default middle angle of :func:`builtin` ``t_state_1d``: the planar
#: angle whose measurement, between the 0 and pi/4 steps on a 4-qubit
#: cluster, leaves a single qubit carrying one full T unit of magic.
THETA_M = math.atan(math.sqrt(2.0))


# Domain types ---------------------------------------------------------------


@dataclass(frozen=True)
class Graph:
    """Open graph on vertices ``1..n`` with CZ edges.

    ``open_inputs`` lists the vertices that receive an externally
    supplied input state (in that order) instead of ``|+>`` when the
    graph state is built.
    """

    n: int
    edges: frozenset = frozenset()
    open_inputs: tuple = ()

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise InputError(f"vertex count must be a positive integer, got {self.n!r}")
        norm = set()
        for e in self.edges:
            a, b = (int(v) for v in e)
            if a == b:
                raise InputError(f"self-loop on vertex {a}")
            if not (1 <= a <= self.n and 1 <= b <= self.n):
                raise InputError(f"edge ({a}, {b}) references vertices outside [1, {self.n}]")
            norm.add((min(a, b), max(a, b)))
        object.__setattr__(self, "edges", frozenset(norm))
        oi = tuple(int(v) for v in self.open_inputs)
        if len(set(oi)) != len(oi):
            raise InputError("open_inputs contains duplicates")
        for v in oi:
            if not (1 <= v <= self.n):
                raise InputError(f"open input {v} outside [1, {self.n}]")
        object.__setattr__(self, "open_inputs", oi)

    def neighbors(self, v: int) -> tuple:
        """Vertices adjacent to ``v``, ascending."""
        out = set()
        for a, b in self.edges:
            if a == v:
                out.add(b)
            elif b == v:
                out.add(a)
        return tuple(sorted(out))


@dataclass(frozen=True)
class MeasurementCommand:
    """Single-qubit measurement step.

    ``kind`` is ``"planar"`` (one angle ``theta``, basis
    ``(|0> +/- e^{i theta}|1>)/sqrt(2)``, sign of ``theta`` flipped when
    the outcome parity over ``s_domain`` is odd) or ``"general"`` (polar
    pair ``theta, phi`` as in :func:`mqcmagic.states.basis_kets`, no
    outcome dependence).
    """

    qubit: int
    kind: str
    theta: float
    phi: float | None = None
    s_domain: frozenset = frozenset()
    label: str = ""

    def __post_init__(self):
        if not isinstance(self.qubit, int) or isinstance(self.qubit, bool) or self.qubit < 1:
            raise InputError(f"measured qubit must be a positive integer, got {self.qubit!r}")
        if self.kind not in ("planar", "general"):
            raise InputError(f"measurement kind must be 'planar' or 'general', got {self.kind!r}")
        theta = float(self.theta)
        if not math.isfinite(theta):
            raise InputError(f"measurement angle theta={self.theta!r} is not finite")
        object.__setattr__(self, "theta", theta)
        dom = frozenset(int(q) for q in self.s_domain)
        object.__setattr__(self, "s_domain", dom)
        if self.kind == "general":
            if self.phi is None:
                raise InputError("general measurement needs both angles (theta, phi)")
            phi = float(self.phi)
            if not math.isfinite(phi):
                raise InputError(f"measurement angle phi={self.phi!r} is not finite")
            object.__setattr__(self, "phi", phi)
            if dom:
                raise InputError("outcome-dependent sign flips apply to planar angles only")
        elif self.phi is not None:
            raise InputError("planar measurement takes a single angle")
        if not self.label:
            object.__setattr__(self, "label", f"M{self.qubit}")


@dataclass(frozen=True)
class CorrectionCommand:
    """Conditional local correction: X, Z, or the T gate diag(1, e^{i pi/4}).

    Applied when the outcome parity over ``condition`` is odd;
    unconditional when ``condition`` is empty.
    """

    qubit: int
    op: str
    condition: frozenset = frozenset()

    def __post_init__(self):
        if not isinstance(self.qubit, int) or isinstance(self.qubit, bool) or self.qubit < 1:
            raise InputError(f"corrected qubit must be a positive integer, got {self.qubit!r}")
        if self.op not in ("X", "Z", "T"):
            raise InputError(f"correction op must be 'X', 'Z', or 'T', got {self.op!r}")
        object.__setattr__(self, "condition", frozenset(int(q) for q in self.condition))


@dataclass(frozen=True)
class Pattern:
    """Validated measurement program over a graph.

    ``commands`` mixes measurements and corrections in execution order;
    ``output`` lists the unmeasured qubits, in the order the final state
    exposes them.  ``initial_state`` (optional) replaces the built graph
    state with explicit amplitudes; the graph then documents the CZ
    layout the amplitudes were derived in.
    """

    graph: Graph
    commands: tuple
    output: tuple
    initial_state: PureState | None = None

    def __post_init__(self):
        object.__setattr__(self, "commands", tuple(self.commands))
        object.__setattr__(self, "output", tuple(int(q) for q in self.output))
        n = self.graph.n
        measured = set()
        for cmd in self.commands:
            if isinstance(cmd, MeasurementCommand):
                if cmd.qubit > n:
                    raise InputError(f"measured qubit {cmd.qubit} outside [1, {n}]")
                if cmd.qubit in measured:
                    raise InputError(f"qubit {cmd.qubit} measured twice")
                bad = cmd.s_domain - measured
                if bad:
                    raise InputError(
                        f"s_domain of {cmd.label} references {sorted(bad)}, not measured earlier"
                    )
                measured.add(cmd.qubit)
            elif isinstance(cmd, CorrectionCommand):
                if cmd.qubit > n:
                    raise InputError(f"corrected qubit {cmd.qubit} outside [1, {n}]")
                if cmd.qubit in measured:
                    raise InputError(f"correction targets qubit {cmd.qubit} after it was measured")
                bad = cmd.condition - measured
                if bad:
                    raise InputError(
                        f"correction condition references {sorted(bad)}, not measured earlier"
                    )
            else:
                raise InputError(f"commands must be measurement or correction commands, got {cmd!r}")
        if len(set(self.output)) != len(self.output):
            raise InputError("output contains duplicates")
        if set(self.output) != set(range(1, n + 1)) - measured:
            raise InputError(
                f"output {sorted(self.output)} must be exactly the unmeasured qubits "
                f"{sorted(set(range(1, n + 1)) - measured)}"
            )
        if self.initial_state is not None:
            if not isinstance(self.initial_state, PureState):
                raise InputError("initial_state must be a PureState")
            if self.initial_state.n != n:
                raise InputError(
                    f"initial_state has {self.initial_state.n} qubits, graph has {n}"
                )
            if self.graph.open_inputs:
                raise InputError("explicit initial_state leaves no room for open inputs")

    @property
    def measurements(self) -> tuple:
        return tuple(c for c in self.commands if isinstance(c, MeasurementCommand))

    @property
    def corrections(self) -> tuple:
        return tuple(c for c in self.commands if isinstance(c, CorrectionCommand))


@dataclass(frozen=True)
class PatternRun:
    """One executed branch of a pattern.

    ``reserved_trace`` holds the 2-Renyi magic of the remaining state
    after each measurement (empty when tracing was disabled);
    ``correction_trace`` likewise after each correction command.
    ``fid0`` is filled by :func:`enumerate_branches` with the fidelity
    of ``final_state`` to the all-zeros branch.
    """

    outcomes: tuple
    final_state: PureState
    reserved_trace: tuple
    branch_prob: float
    correction_trace: tuple = ()
    fid0: float | None = None

    def __post_init__(self):
        if not (0.0 < self.branch_prob <= 1.0 + 1e-9):
            raise InputError(f"branch probability {self.branch_prob!r} outside (0, 1]")
        if self.reserved_trace and len(self.reserved_trace) != len(self.outcomes):
            raise InputError(
                f"reserved_trace has {len(self.reserved_trace)} entries "
                f"for {len(self.outcomes)} measurements"
            )


# Graph-state construction ---------------------------------------------------


def build_graph_state(g: Graph, input: PureState | None = None) -> PureState:
    """CZ over every edge, applied to ``|+>`` on non-input vertices.

    When ``input`` is given it occupies ``g.open_inputs`` (in order);
    all other vertices start in ``|+>``.  Without an input every vertex
    starts in ``|+>``, so the result is the graph state of ``g``.
    """
    n = g.n
    if input is None:
        state = init_state(n, "plus-all")
    else:
        k = len(g.open_inputs)
        if input.n != k:
            raise InputError(
                f"input has {input.n} qubits, graph declares {k} open inputs"
            )
        rest = init_state(n - k, "plus-all") if n > k else None
        amps = input.amps if rest is None else np.kron(input.amps, rest.amps)
        t = amps.reshape((2,) * n)
        t = np.moveaxis(t, list(range(k)), [v - 1 for v in g.open_inputs])
        state = PureState(n, np.ascontiguousarray(t).reshape(-1))
    for a, b in sorted(g.edges):
        state = apply_gate(state, CZ(a, b))
    return state


def stabilizer_expectations(g: Graph, state: PureState) -> np.ndarray:
    """Expectation of every generator ``X_j prod_{i~j} Z_i`` in ``state``."""
    if state.n != g.n:
        raise InputError(f"state has {state.n} qubits, graph has {g.n}")
    n = g.n
    vals = np.empty(n)
    for j in range(1, n + 1):
        z_mask = 0
        for i in g.neighbors(j):
            z_mask |= 1 << (n - i)
        vals[j - 1] = pauli_expectation(state, PauliString(n, 1 << (n - j), z_mask))
    return vals


# Execution ------------------------------------------------------------------

_CORRECTION_GATES = {"X": X, "Z": Z, "T": T}


def _parity(ids, got: dict) -> int:
    acc = 0
    for q in ids:
        acc ^= got[q]
    return acc


def run_pattern(
    pattern: Pattern,
    input: PureState | None = None,
    policy: str = "sample",
    rng: np.random.Generator | None = None,
    outcomes=None,
    trace: bool = True,
) -> PatternRun:
    """Execute one branch of ``pattern``.

    ``policy`` selects the outcomes: ``"sample"`` draws each from the
    Born rule using ``rng``; ``"forced"`` and ``"branch"`` take the bit
    vector ``outcomes`` (one bit per measurement command, in order) and
    fail on branches of probability below 1e-12.  With ``trace`` the
    2-Renyi magic of the remaining state is recorded after every
    command; disable it for patterns whose intermediate states exceed
    the dense Pauli-spectrum limit.
    """
    meas = pattern.measurements
    m = len(meas)
    if policy == "sample":
        if rng is None:
            raise InputError("policy 'sample' requires an rng")
    elif policy in ("forced", "branch"):
        if outcomes is None:
            raise InputError(f"policy {policy!r} requires an outcome bit vector")
        bits = tuple(int(b) for b in outcomes)
        if len(bits) != m or any(b not in (0, 1) for b in bits):
            raise InputError(
                f"outcome vector must hold one bit per measurement ({m}), got {outcomes!r}"
            )
    else:
        raise InputError(f"unknown policy {policy!r}; use 'sample', 'forced', or 'branch'")

    if pattern.initial_state is not None:
        if input is not None:
            raise InputError("pattern carries explicit initial amplitudes and takes no input")
        state = pattern.initial_state
    else:
        state = build_graph_state(pattern.graph, input)

    alive = list(range(1, pattern.graph.n + 1))
    got: dict = {}
    out_bits: list = []
    reserved: list = []
    corr_trace: list = []
    prob = 1.0
    for cmd in pattern.commands:
        if isinstance(cmd, MeasurementCommand):
            if cmd.kind == "planar":
                beta = -cmd.theta if _parity(cmd.s_domain, got) else cmd.theta
                basis = planar_basis(beta)
            else:
                basis = (cmd.theta, cmd.phi)
            k = len(out_bits)
            mode = ("sample", rng) if policy == "sample" else ("forced", bits[k])
            outcome, p, state = project_measure(state, alive.index(cmd.qubit) + 1, basis, mode)
            alive.remove(cmd.qubit)
            got[cmd.qubit] = outcome
            out_bits.append(outcome)
            prob *= p
            if trace:
                reserved.append(sre(state, 2.0))
        else:
            if not cmd.condition or _parity(cmd.condition, got):
                gate = _CORRECTION_GATES[cmd.op](alive.index(cmd.qubit) + 1)
                state = apply_gate(state, gate)
            if trace:
                corr_trace.append(sre(state, 2.0))

    if tuple(alive) != pattern.output:
        perm = [alive.index(q) for q in pattern.output]
        t = state.amps.reshape((2,) * state.n).transpose(perm)
        state = PureState(state.n, np.ascontiguousarray(t).reshape(-1))
    return PatternRun(tuple(out_bits), state, tuple(reserved), min(prob, 1.0), tuple(corr_trace))


def enumerate_branches(
    pattern: Pattern,
    input: PureState | None = None,
    threads: int = 1,
    trace: bool = True,
) -> list:
    """All ``2**m`` outcome branches, first measurement = most significant bit.

    Checks that branch probabilities sum to 1 and reports each branch's
    final-state fidelity to the all-zeros branch in ``fid0``.
    """
    m = len(pattern.measurements)
    if m > MAX_BRANCH_MEASUREMENTS:
        raise ResourceLimitError(
            f"branch enumeration limited to {MAX_BRANCH_MEASUREMENTS} measurements, got {m}"
        )
    vecs = [tuple((b >> (m - 1 - i)) & 1 for i in range(m)) for b in range(1 << m)]
    runs = parallel_map(
        lambda bits: run_pattern(pattern, input, policy="branch", outcomes=bits, trace=trace),
        vecs,
        threads,
    )
    total = sum(r.branch_prob for r in runs)
    if abs(total - 1.0) > 1e-9:
        raise RuntimeError(f"branch probabilities sum to {total!r}, expected 1 within 1e-9")
    ref = runs[0].final_state
    return [dataclasses.replace(r, fid0=fidelity(r.final_state, ref)) for r in runs]


# Serialization --------------------------------------------------------------


def pattern_to_dict(p: Pattern) -> dict:
    """JSON-ready dict; see :func:`pattern_from_dict` for the schema."""
    cmds = []
    for cmd in p.commands:
        if isinstance(cmd, MeasurementCommand):
            cmds.append(
                {
                    "type": "M",
                    "qubit": cmd.qubit,
                    "kind": cmd.kind,
                    "theta": cmd.theta,
                    "phi": 0.0 if cmd.phi is None else cmd.phi,
                    "s_domain": sorted(cmd.s_domain),
                    "label": cmd.label,
                }
            )
        else:
            cmds.append(
                {
                    "type": "C",
                    "qubit": cmd.qubit,
                    "op": cmd.op,
                    "condition": sorted(cmd.condition),
                }
            )
    out = {
        "graph": {
            "n": p.graph.n,
            "edges": [list(e) for e in sorted(p.graph.edges)],
            "open_inputs": list(p.graph.open_inputs),
        },
        "commands": cmds,
        "output": list(p.output),
    }
    if p.initial_state is not None:
        out["initial_state"] = [[float(a.real), float(a.imag)] for a in p.initial_state.amps]
    return out


def _need(d: dict, key: str, where: str):
    try:
        return d[key]
    except (KeyError, TypeError):
        raise InputError(f"pattern {where} is missing {key!r}") from None


def pattern_from_dict(d: dict) -> Pattern:
    """Inverse of :func:`pattern_to_dict`.

    Schema: ``{"graph": {"n", "edges", "open_inputs"}, "commands":
    [{"type": "M", "qubit", "kind", "theta", "phi", "s_domain",
    "label"} | {"type": "C", "qubit", "op", "condition"}], "output":
    [...]}`` plus an optional ``"initial_state"`` of ``[re, im]`` pairs.
    Angles are radians.
    """
    gd = _need(d, "graph", "file")
    graph = Graph(
        _need(gd, "n", "graph"),
        frozenset(tuple(e) for e in _need(gd, "edges", "graph")),
        tuple(gd.get("open_inputs", ())),
    )
    cmds = []
    for i, cd in enumerate(_need(d, "commands", "file")):
        where = f"command #{i}"
        kind = _need(cd, "type", where)
        if kind == "M":
            mkind = _need(cd, "kind", where)
            cmds.append(
                MeasurementCommand(
                    _need(cd, "qubit", where),
                    mkind,
                    _need(cd, "theta", where),
                    _need(cd, "phi", where) if mkind == "general" else None,
                    frozenset(cd.get("s_domain", ())),
                    cd.get("label", ""),
                )
            )
        elif kind == "C":
            cmds.append(
                CorrectionCommand(
                    _need(cd, "qubit", where),
                    _need(cd, "op", where),
                    frozenset(cd.get("condition", ())),
                )
            )
        else:
            raise InputError(f"{where} has unknown type {kind!r}; use 'M' or 'C'")
    init = None
    if "initial_state" in d:
        pairs = d["initial_state"]
        amps = np.array([complex(re, im) for re, im in pairs], dtype=np.complex128)
        nq = int(round(math.log2(len(amps)))) if len(amps) else 0
        init = PureState(nq, amps)
    return Pattern(graph, tuple(cmds), tuple(_need(d, "output", "file")), init)


def pattern_to_json(p: Pattern) -> str:
    from .util import json_dumps

    return json_dumps(pattern_to_dict(p))


def pattern_from_json(text: str) -> Pattern:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"pattern file is not valid JSON: {exc}") from None
    return pattern_from_dict(d)


# Builtin patterns -----------------------------------------------------------


def _j_pattern(alpha: float) -> Pattern:
    """J(alpha) on one input qubit: measure at ``-alpha``, X-correct the output."""
    g = Graph(2, frozenset({(1, 2)}), open_inputs=(1,))
    cmds = (
        MeasurementCommand(1, "planar", -float(alpha)),
        CorrectionCommand(2, "X", frozenset({1})),
    )
    return Pattern(g, cmds, (2,))


def _rotation_pattern(alpha: float, beta: float, gamma: float) -> Pattern:
    """J(0)J(-alpha)J(-beta)J(-gamma) on a 5-qubit line with one input.

    Measurement angles run ``gamma, beta, alpha, 0`` with the middle two
    sign-flipped by the preceding outcome; the output qubit receives
    ``X^(s2+s4) Z^(s1+s3)``.
    """
    g = Graph(5, frozenset({(1, 2), (2, 3), (3, 4), (4, 5)}), open_inputs=(1,))
    cmds = (
        MeasurementCommand(1, "planar", float(gamma)),
        MeasurementCommand(2, "planar", float(beta), s_domain=frozenset({1})),
        MeasurementCommand(3, "planar", float(alpha), s_domain=frozenset({2})),
        MeasurementCommand(4, "planar", 0.0),
        CorrectionCommand(5, "X", frozenset({2, 4})),
        CorrectionCommand(5, "Z", frozenset({1, 3})),
    )
    return Pattern(g, cmds, (5,))


def _t_state_1d(theta_m: float = THETA_M) -> Pattern:
    """Distill one maximally magic qubit from the 4-qubit cluster amplitudes.

    Planar angles ``0, theta_m, pi/4`` on qubits 1..3 with adaptive sign
    flips, then ``X^(s2) Z^(s1+s3)`` on the surviving qubit.
    """
    g = Graph(4, frozenset({(1, 2), (2, 3), (3, 4)}))
    cmds = (
        MeasurementCommand(1, "planar", 0.0),
        MeasurementCommand(2, "planar", float(theta_m), s_domain=frozenset({1})),
        MeasurementCommand(3, "planar", math.pi / 4.0, s_domain=frozenset({2})),
        CorrectionCommand(4, "X", frozenset({2})),
        CorrectionCommand(4, "Z", frozenset({1, 3})),
    )
    return Pattern(g, cmds, (4,), initial_state=cluster_state())


def _cs_box_initial() -> PureState:
    """Box-frame 4-qubit amplitudes whose two-measurement reduction is |CS>.

    Support on ``|b1 b2 b1 b4>`` with phase ``i**((b2 xor b4)(1-2 b1))``.
    """
    amps = np.zeros(16, dtype=np.complex128)
    for b1 in (0, 1):
        for b2 in (0, 1):
            for b4 in (0, 1):
                idx = (b1 << 3) | (b2 << 2) | (b1 << 1) | b4
                amps[idx] = 1j ** ((b2 ^ b4) * (1 - 2 * b1))
    return PureState(4, amps / math.sqrt(8.0))


def _cs_box() -> Pattern:
    """Two measurements on a box-graph frame followed by T-gate corrections.

    Qubit 1 is measured planar at 0 and qubit 4 in the general basis
    ``(pi/8, 0)``; conditional Paulis re-align the four branches, the two
    unconditional T corrections and a final X deliver ``|CS>`` on qubits
    2 and 3 in every branch.  The graph records the box ring 1-2-3-4-1,
    the local-Clifford frame the initial amplitudes live in.
    """
    g = Graph(4, frozenset({(1, 2), (2, 3), (3, 4), (1, 4)}))
    cmds = (
        MeasurementCommand(1, "planar", 0.0),
        MeasurementCommand(4, "general", math.pi / 8.0, 0.0),
        CorrectionCommand(2, "X", frozenset({4})),
        CorrectionCommand(2, "Z", frozenset({4})),
        CorrectionCommand(3, "X", frozenset({4})),
        CorrectionCommand(3, "Z", frozenset({1})),
        CorrectionCommand(2, "T"),
        CorrectionCommand(3, "T"),
        CorrectionCommand(3, "X"),
    )
    return Pattern(g, cmds, (2, 3), initial_state=_cs_box_initial())


def _arbitrary_prep(theta: float, phi: float) -> Pattern:
    """Prepare ``cos(theta)|0> + e^{i phi} sin(theta)|1>`` (up to H) with one measurement.

    A single general measurement on half of ``CZ|++>`` leaves the other
    qubit in the Hadamard frame of the target state, whose magic equals
    the target's for every outcome.
    """
    g = Graph(2, frozenset({(1, 2)}))
    cmds = (MeasurementCommand(1, "general", float(theta), float(-phi) + 0.0),)
    return Pattern(g, cmds, (2,))


_BUILTINS = {
    "j_pattern": _j_pattern,
    "rotation_pattern": _rotation_pattern,
    "t_state_1d": _t_state_1d,
    "cs_box": _cs_box,
    "arbitrary_prep": _arbitrary_prep,
}


def builtin(name: str, **params) -> Pattern:
    """Named patterns: j_pattern(alpha), rotation_pattern(alpha, beta, gamma),
    t_state_1d(theta_m), cs_box(), arbitrary_prep(theta, phi)."""
    try:
        factory = _BUILTINS[name]
    except KeyError:
        raise InputError(
            f"unknown builtin pattern {name!r}; available: {', '.join(sorted(_BUILTINS))}"
        ) from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise InputError(f"bad parameters for builtin {name!r}: {exc}") from None
