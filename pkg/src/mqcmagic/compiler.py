"""Gate circuits, J-sequence normal form, and compilation to patterns.

Every unitary used here factors into ``J(alpha) = H Rz(alpha)`` steps and
CZ gates.  A circuit is first rewritten gate by gate into that normal
form (with a peephole pass cancelling adjacent ``J(0)`` pairs, since
``J(0) = H``); the J sequence then maps one-to-one onto a measurement
pattern: each ``J(alpha)`` on a wire extends the wire's qubit chain by
one vertex and measures the old qubit at ``-alpha``, with byproduct
bookkeeping deciding the adaptive sign domains and the final Pauli
corrections.  The magic invested by running the compiled pattern is the
sum of the single-measurement magic of the J angles, which is how gate
counts turn into resource estimates.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .magic import MagicValue, magic_value, meas_magic
from .patterns import CorrectionCommand, Graph, MeasurementCommand, Pattern
from .states import Gate, PureState, apply_gates, gate_matrix
from .util import InputError, norm_angle

__all__ = [
    "Circuit",
    "JSequence",
    "InvestedReport",
    "apply_circuit",
    "euler_zxz",
    "j_decompose",
    "circuit_to_pattern",
    "invested_magic",
    "circuit_to_dict",
    "circuit_from_dict",
    "circuit_to_json",
    "circuit_from_json",
    "circuit_unitary",
]


@dataclass(frozen=True)
class Circuit:
    """Ordered gates on wires ``1..n`` (first gate acts first)."""

    n: int
    gates: tuple = ()

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool) or self.n < 1:
            raise InputError(f"wire count must be a positive integer, got {self.n!r}")
        gates = tuple(self.gates)
        for g in gates:
            if not isinstance(g, Gate):
                raise InputError(f"circuit entries must be gates, got {g!r}")
            for t in g.targets:
                if not (1 <= t <= self.n):
                    raise InputError(f"{g.kind} targets wire {t} outside [1, {self.n}]")
        object.__setattr__(self, "gates", gates)


@dataclass(frozen=True)
class JSequence:
    """Normal form: only ``J(alpha)`` and CZ entries, in application order."""

    n: int
    entries: tuple = ()

    def __post_init__(self):
        entries = tuple(self.entries)
        for g in entries:
            if not isinstance(g, Gate) or g.kind not in ("J", "CZ"):
                raise InputError(f"J sequence entries must be J or CZ gates, got {g!r}")
            for t in g.targets:
                if not (1 <= t <= self.n):
                    raise InputError(f"{g.kind} targets wire {t} outside [1, {self.n}]")
        object.__setattr__(self, "entries", entries)

    @property
    def j_angles(self) -> tuple:
        return tuple(g.alpha for g in self.entries if g.kind == "J")

    @property
    def cz_count(self) -> int:
        return sum(1 for g in self.entries if g.kind == "CZ")


@dataclass(frozen=True)
class InvestedReport:
    """Magic charged to the measurements a circuit compiles into.

    ``contributions`` holds one value per J step (zero for Clifford
    angles); ``nonclifford`` counts the steps that actually charge.
    """

    alpha: float
    total: MagicValue
    angles: tuple
    contributions: tuple
    n_j: int
    n_cz: int
    nonclifford: int


def apply_circuit(state: PureState, c: Circuit) -> PureState:
    """Dense action of ``c`` (wire ``w`` = qubit ``w``)."""
    if state.n != c.n:
        raise InputError(f"state has {state.n} qubits, circuit has {c.n} wires")
    return apply_gates(state, c.gates)


# Euler decomposition ---------------------------------------------------------


def euler_zxz(u: np.ndarray) -> tuple:
    """Angles ``(alpha, beta, gamma)`` with ``J(0)J(-alpha)J(-beta)J(-gamma)``
    proportional to ``u``.

    Equivalently ``u`` is ``Rz(-alpha) Rx(-beta) Rz(-gamma)`` up to a global
    phase.  The middle angle is recovered from the moduli of the first
    column, the outer ones from argument differences; diagonal and
    antidiagonal inputs take the two degenerate branches.
    """
    m = np.asarray(u, dtype=np.complex128)
    if m.shape != (2, 2):
        raise InputError(f"expected a 2x2 matrix, got shape {m.shape}")
    if float(np.max(np.abs(m.conj().T @ m - np.eye(2)))) > 1e-10:
        raise InputError("matrix is not unitary within 1e-10")

    lo = abs(m[1, 0])
    hi = abs(m[0, 0])
    if lo < 1e-9:  # diagonal: a single Rz
        a = float(np.angle(m[1, 1]) - np.angle(m[0, 0]))
        return norm_angle(-a), 0.0, 0.0
    if hi < 1e-9:  # antidiagonal: Rz then a full X flip
        a = float(np.angle(m[1, 0]) - np.angle(m[0, 1]))
        return norm_angle(-a), math.pi, 0.0
    b = 2.0 * math.atan2(lo, hi)
    a = float(np.angle(m[1, 0]) - np.angle(m[0, 0])) + math.pi / 2.0
    c = float(np.angle(m[0, 1]) - np.angle(m[0, 0])) + math.pi / 2.0
    return norm_angle(-a), norm_angle(-b), norm_angle(-c)


# J-sequence normal form -------------------------------------------------------


def _j(w: int, alpha: float) -> Gate:
    return Gate("J", (w,), alpha=alpha)


def _cz(a: int, b: int) -> Gate:
    return Gate("CZ", (a, b))


def _rz_steps(w: int, alpha: float) -> list:
    return [_j(w, alpha), _j(w, 0.0)]


def _gate_steps(g: Gate) -> list:
    """One gate's J/CZ word, in application order."""
    if g.kind == "J":
        return [g]
    if g.kind == "CZ":
        return [g]
    w = g.targets[0]
    if g.kind == "H":
        return [_j(w, 0.0)]
    if g.kind == "X":
        return [_j(w, 0.0), _j(w, math.pi)]
    if g.kind == "Y":
        return [_j(w, math.pi), _j(w, math.pi)]
    if g.kind == "Z":
        return _rz_steps(w, math.pi)
    if g.kind == "S":
        return _rz_steps(w, math.pi / 2.0)
    if g.kind == "T":
        return _rz_steps(w, math.pi / 4.0)
    if g.kind == "Rz":
        return _rz_steps(w, g.alpha)
    if g.kind == "Rx":
        return [_j(w, 0.0), _j(w, g.alpha)]
    if g.kind == "U2":
        a, b, c = euler_zxz(g.matrix)
        return [_j(w, -c + 0.0), _j(w, -b + 0.0), _j(w, -a + 0.0), _j(w, 0.0)]
    if g.kind == "CNOT":
        ctl, tgt = g.targets
        return [_j(tgt, 0.0), _cz(ctl, tgt), _j(tgt, 0.0)]
    if g.kind == "CRk":
        ctl, tgt = g.targets
        half = math.pi / 2.0**g.k  # half the controlled phase 2*pi/2**k
        steps = []
        steps += _gate_steps(Gate("CNOT", (ctl, tgt)))
        steps += _rz_steps(tgt, -half)
        steps += _gate_steps(Gate("CNOT", (ctl, tgt)))
        steps += _rz_steps(tgt, half)
        steps += _rz_steps(ctl, half)
        return steps
    raise InputError(f"gate kind {g.kind!r} has no J decomposition")


def j_decompose(c: Circuit) -> JSequence:
    """Rewrite ``c`` into J/CZ normal form and cancel adjacent ``J(0)`` pairs.

    The peephole only merges ``J(0) J(0) = I`` on the same wire with no
    intervening entry touching that wire, so the sequence's unitary is
    unchanged (up to the global phases the per-gate words already carry).
    """
    out: list = []
    dead: set = set()
    pending: dict = {}  # wire -> indices into out of entries touching it
    for g in c.gates:
        for step in _gate_steps(g):
            if step.kind == "J":
                w = step.targets[0]
                chain = pending.setdefault(w, [])
                if step.alpha == 0.0 and chain:
                    prev = out[chain[-1]]
                    if prev.kind == "J" and prev.alpha == 0.0:
                        dead.add(chain.pop())
                        continue
                chain.append(len(out))
                out.append(step)
            else:
                for w in step.targets:
                    pending.setdefault(w, []).append(len(out))
                out.append(step)
    return JSequence(c.n, tuple(s for i, s in enumerate(out) if i not in dead))


# Compilation to a measurement pattern ----------------------------------------


def circuit_to_pattern(c: Circuit | JSequence) -> Pattern:
    """Measurement pattern implementing ``c`` on its open inputs.

    Wire ``w`` starts on vertex ``w``; every J step appends a fresh
    vertex to the wire's chain and measures the old one at minus the J
    angle.  Byproduct X/Z index sets ride along (a J swaps them and adds
    the new outcome to X, a CZ cross-couples X into Z) and decide each
    measurement's adaptive sign domain and the output corrections.
    """
    jseq = j_decompose(c) if isinstance(c, Circuit) else c
    wires = range(1, jseq.n + 1)
    qubit_of = {w: w for w in wires}
    x_set = {w: frozenset() for w in wires}
    z_set = {w: frozenset() for w in wires}
    edges: set = set()
    next_q = jseq.n + 1
    cmds: list = []
    for g in jseq.entries:
        if g.kind == "J":
            w = g.targets[0]
            q = qubit_of[w]
            new = next_q
            next_q += 1
            edges.add((q, new))
            theta = -g.alpha + 0.0
            dom = x_set[w] if theta != 0.0 else frozenset()
            cmds.append(MeasurementCommand(q, "planar", theta, s_domain=dom))
            x_set[w], z_set[w] = z_set[w] ^ {q}, x_set[w]
            qubit_of[w] = new
        else:
            wa, wb = g.targets
            e = (min(qubit_of[wa], qubit_of[wb]), max(qubit_of[wa], qubit_of[wb]))
            edges.symmetric_difference_update({e})
            z_set[wa] = z_set[wa] ^ x_set[wb]
            z_set[wb] = z_set[wb] ^ x_set[wa]
    for w in wires:
        if x_set[w]:
            cmds.append(CorrectionCommand(qubit_of[w], "X", x_set[w]))
        if z_set[w]:
            cmds.append(CorrectionCommand(qubit_of[w], "Z", z_set[w]))
    graph = Graph(next_q - 1, frozenset(edges), open_inputs=tuple(wires))
    return Pattern(graph, tuple(cmds), tuple(qubit_of[w] for w in wires))


def invested_magic(c: Circuit | JSequence, alpha: float = 2.0) -> InvestedReport:
    """Magic charged by the measurements ``c`` compiles into.

    Each J step charges the single-measurement magic of its angle;
    Clifford angles (multiples of pi/2) charge nothing.
    """
    jseq = j_decompose(c) if isinstance(c, Circuit) else c
    angles = jseq.j_angles
    contributions = tuple(meas_magic(a, alpha) for a in angles)
    total = magic_value(alpha, math.fsum(v.bits for v in contributions))
    nonclifford = sum(1 for v in contributions if v.bits > 1e-12)
    return InvestedReport(
        alpha=alpha,
        total=total,
        angles=angles,
        contributions=contributions,
        n_j=len(angles),
        n_cz=jseq.cz_count,
        nonclifford=nonclifford,
    )


# Serialization ----------------------------------------------------------------


def circuit_to_dict(c: Circuit) -> dict:
    """JSON-ready dict; see :func:`circuit_from_dict` for the schema."""
    gates = []
    for g in c.gates:
        gd: dict = {"kind": g.kind, "targets": list(g.targets)}
        if g.alpha is not None:
            gd["alpha"] = g.alpha
        if g.k is not None:
            gd["k"] = g.k
        if g.matrix is not None:
            gd["matrix"] = [[float(v.real), float(v.imag)] for v in np.asarray(g.matrix).ravel()]
        gates.append(gd)
    return {"n": c.n, "gates": gates}


def circuit_from_dict(d: dict) -> Circuit:
    """Inverse of :func:`circuit_to_dict`.

    Schema: ``{"n": wires, "gates": [{"kind", "targets", "alpha"?, "k"?,
    "matrix"?}]}`` with angles in radians and ``matrix`` four row-major
    ``[re, im]`` pairs.
    """
    try:
        n = d["n"]
        gate_dicts = d["gates"]
    except (KeyError, TypeError):
        raise InputError("circuit file needs 'n' and 'gates'") from None
    gates = []
    for i, gd in enumerate(gate_dicts):
        try:
            kind = gd["kind"]
            targets = tuple(gd["targets"])
        except (KeyError, TypeError):
            raise InputError(f"gate #{i} needs 'kind' and 'targets'") from None
        matrix = None
        if "matrix" in gd:
            pairs = gd["matrix"]
            if not isinstance(pairs, list) or len(pairs) != 4:
                raise InputError(f"gate #{i} matrix must hold four [re, im] pairs")
            matrix = np.array([complex(re, im) for re, im in pairs]).reshape(2, 2)
        gates.append(Gate(kind, targets, alpha=gd.get("alpha"), k=gd.get("k"), matrix=matrix))
    return Circuit(n, tuple(gates))


def circuit_to_json(c: Circuit) -> str:
    from .util import json_dumps

    return json_dumps(circuit_to_dict(c))


def circuit_from_json(text: str) -> Circuit:
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"circuit file is not valid JSON: {exc}") from None
    return circuit_from_dict(d)


def circuit_unitary(c: Circuit | JSequence) -> np.ndarray:
    """Dense ``2**n x 2**n`` matrix of the whole circuit (small n only)."""
    gates = c.gates if isinstance(c, Circuit) else c.entries
    n = c.n
    if n > 10:
        from .util import ResourceLimitError

        raise ResourceLimitError(f"dense circuit unitary limited to 10 wires, got {n}")
    u = np.eye(2**n, dtype=np.complex128)
    for g in gates:
        u = _embed(gate_matrix(g), g.targets, n) @ u
    return u


def _embed(m: np.ndarray, targets: tuple, n: int) -> np.ndarray:
    order = list(targets) + [q for q in range(1, n + 1) if q not in targets]
    k = len(targets)
    full = np.kron(m, np.eye(2 ** (n - k), dtype=np.complex128))
    t = full.reshape((2,) * (2 * n))
    inv = [order.index(q) for q in range(1, n + 1)]
    perm = inv + [n + i for i in inv]
    return t.transpose(perm).reshape(2**n, 2**n)
