"""Dense pure-state / density-matrix simulation of few-qubit systems.

Index convention (used by every module): qubit 1 is the most significant bit
of the basis index, so ``|q1 q2 ... qn>`` has index ``q1*2**(n-1) + ... + qn``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .util import InputError, ResourceLimitError

MAX_PURE_QUBITS = 14
MAX_MIXED_QUBITS = 6

_INV_SQRT2 = 1.0 / math.sqrt(2.0)

GATE_KINDS = ("H", "X", "Y", "Z", "S", "T", "Rz", "Rx", "J", "CZ", "CNOT", "CRk", "U2")
_ONE_QUBIT = {"H", "X", "Y", "Z", "S", "T", "Rz", "Rx", "J", "U2"}
_PARAMETRIC = {"Rz", "Rx", "J"}


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector over ``2**n`` basis states."""

    n: int
    amps: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, PureState):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.amps, other.amps)

    def __post_init__(self):
        if not (0 <= self.n <= MAX_PURE_QUBITS):
            raise ResourceLimitError(f"pure-state qubit count {self.n} outside [0, {MAX_PURE_QUBITS}]")
        amps = np.asarray(self.amps, dtype=np.complex128).reshape(-1)
        if amps.shape[0] != 2**self.n:
            raise InputError(f"amplitude vector length {amps.shape[0]} != 2**{self.n}")
        nrm = float(np.vdot(amps, amps).real)
        if abs(nrm - 1.0) > 1e-10:
            raise InputError(f"state norm**2 = {nrm!r} deviates from 1 beyond 1e-10")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    @property
    def dim(self) -> int:
        return 2**self.n


@dataclass(frozen=True, eq=False)
class MixedState:
    """Density matrix on ``n`` qubits (dense, small systems only)."""

    n: int
    rho: np.ndarray

    def __eq__(self, other):
        if not isinstance(other, MixedState):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.rho, other.rho)

    def __post_init__(self):
        if not (1 <= self.n <= MAX_MIXED_QUBITS):
            raise ResourceLimitError(f"mixed-state qubit count {self.n} outside [1, {MAX_MIXED_QUBITS}]")
        rho = np.asarray(self.rho, dtype=np.complex128)
        d = 2**self.n
        if rho.shape != (d, d):
            raise InputError(f"density matrix shape {rho.shape} != ({d}, {d})")
        if float(np.max(np.abs(rho - rho.conj().T))) > 1e-10:
            raise InputError("density matrix is not Hermitian within 1e-10")
        tr = complex(np.trace(rho))
        if abs(tr - 1.0) > 1e-10:
            raise InputError(f"density matrix trace {tr!r} deviates from 1 beyond 1e-10")
        if float(np.min(np.linalg.eigvalsh(rho))) < -1e-9:
            raise InputError("density matrix has an eigenvalue below -1e-9")
        rho = rho.copy()
        rho.flags.writeable = False
        object.__setattr__(self, "rho", rho)

    @property
    def dim(self) -> int:
        return 2**self.n

    def purity(self) -> float:
        return float(np.trace(self.rho @ self.rho).real)


@dataclass(frozen=True)
class Gate:
    """A named gate on explicit target qubits.

    ``alpha`` is the angle for Rz/Rx/J, ``k`` the order of CRk (phase
    ``2*pi/2**k`` on ``|11>``), ``matrix`` the payload of U2.
    """

    kind: str
    targets: tuple[int, ...]
    alpha: float | None = None
    k: int | None = None
    matrix: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise InputError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        want = 1 if self.kind in _ONE_QUBIT else 2
        if len(self.targets) != want:
            raise InputError(f"{self.kind} takes {want} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise InputError(f"{self.kind} targets must be distinct, got {self.targets}")
        if self.kind in _PARAMETRIC:
            if self.alpha is None or not math.isfinite(self.alpha):
                raise InputError(f"{self.kind} requires a finite angle, got {self.alpha!r}")
        if self.kind == "CRk":
            if self.k is None or self.k < 1:
                raise InputError(f"CRk requires k >= 1, got {self.k!r}")
        if self.kind == "U2":
            m = np.asarray(self.matrix, dtype=np.complex128)
            if m.shape != (2, 2):
                raise InputError(f"U2 payload must be 2x2, got shape {m.shape}")
            if float(np.max(np.abs(m.conj().T @ m - np.eye(2)))) > 1e-10:
                raise InputError("U2 payload is not unitary within 1e-10")
            m = m.copy()
            m.flags.writeable = False
            object.__setattr__(self, "matrix", m)


# Gate constructors ---------------------------------------------------------


def H(q: int) -> Gate:
    return Gate("H", (q,))


def X(q: int) -> Gate:
    return Gate("X", (q,))


def Y(q: int) -> Gate:
    return Gate("Y", (q,))


def Z(q: int) -> Gate:
    return Gate("Z", (q,))


def S(q: int) -> Gate:
    return Gate("S", (q,))


def T(q: int) -> Gate:
    return Gate("T", (q,))


def RZ(q: int, alpha: float) -> Gate:
    return Gate("Rz", (q,), alpha=alpha)


def RX(q: int, alpha: float) -> Gate:
    return Gate("Rx", (q,), alpha=alpha)


def J(q: int, alpha: float) -> Gate:
    return Gate("J", (q,), alpha=alpha)


def CZ(a: int, b: int) -> Gate:
    return Gate("CZ", (a, b))


def CNOT(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def CRK(k: int, control: int, target: int) -> Gate:
    return Gate("CRk", (control, target), k=k)


def U2(q: int, matrix: np.ndarray) -> Gate:
    return Gate("U2", (q,), matrix=matrix)


def j_matrix(alpha: float) -> np.ndarray:
    e = cmath.exp(1j * alpha)
    return _INV_SQRT2 * np.array([[1.0, e], [1.0, -e]], dtype=np.complex128)


def gate_matrix(g: Gate) -> np.ndarray:
    """Dense matrix of a gate (2x2 or 4x4, control qubit = first target)."""
    if g.kind == "H":
        return _INV_SQRT2 * np.array([[1, 1], [1, -1]], dtype=np.complex128)
    if g.kind == "X":
        return np.array([[0, 1], [1, 0]], dtype=np.complex128)
    if g.kind == "Y":
        return np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
    if g.kind == "Z":
        return np.array([[1, 0], [0, -1]], dtype=np.complex128)
    if g.kind == "S":
        return np.array([[1, 0], [0, 1j]], dtype=np.complex128)
    if g.kind == "T":
        return np.array([[1, 0], [0, cmath.exp(1j * math.pi / 4)]], dtype=np.complex128)
    if g.kind == "Rz":
        return np.array([[1, 0], [0, cmath.exp(1j * g.alpha)]], dtype=np.complex128)
    if g.kind == "Rx":
        hm = gate_matrix(H(1))
        return hm @ np.array([[1, 0], [0, cmath.exp(1j * g.alpha)]], dtype=np.complex128) @ hm
    if g.kind == "J":
        return j_matrix(g.alpha)
    if g.kind == "U2":
        return np.asarray(g.matrix)
    if g.kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(np.complex128)
    if g.kind == "CNOT":
        m = np.eye(4, dtype=np.complex128)
        m[2, 2] = m[3, 3] = 0
        m[2, 3] = m[3, 2] = 1
        return m
    if g.kind == "CRk":
        phase = cmath.exp(2j * math.pi / 2**g.k)
        return np.diag([1, 1, 1, phase]).astype(np.complex128)
    raise InputError(f"unknown gate kind {g.kind!r}")


# Operations ----------------------------------------------------------------


def init_state(n: int, spec: str = "plus-all") -> PureState:
    """``|x>`` for a bit-string label, or ``|+>**n`` for ``"plus-all"``."""
    if not (1 <= n <= MAX_PURE_QUBITS):
        raise InputError(f"qubit count {n} outside [1, {MAX_PURE_QUBITS}]")
    d = 2**n
    if spec == "plus-all":
        amps = np.full(d, 1.0 / math.sqrt(d), dtype=np.complex128)
        return PureState(n, amps)
    if isinstance(spec, str) and len(spec) == n and set(spec) <= {"0", "1"}:
        amps = np.zeros(d, dtype=np.complex128)
        amps[int(spec, 2)] = 1.0
        return PureState(n, amps)
    raise InputError(f"state spec {spec!r} is neither 'plus-all' nor an {n}-bit label")


def _check_targets(n: int, targets: Iterable[int]) -> None:
    for q in targets:
        if not (1 <= q <= n):
            raise InputError(f"target qubit {q} outside [1, {n}]")


def apply_gate(state: PureState, g: Gate) -> PureState:
    """Unitary action of ``g``; qubit ``q`` lives on tensor axis ``q-1``."""
    n = state.n
    _check_targets(n, g.targets)
    t = state.amps.reshape((2,) * n)

    if g.kind == "CZ":
        a, b = sorted(g.targets)
        t = t.copy()
        sl = [slice(None)] * n
        sl[a - 1] = 1
        sl[b - 1] = 1
        t[tuple(sl)] *= -1.0
        return PureState(n, t.reshape(-1))
    if g.kind == "CRk":
        a, b = g.targets
        t = t.copy()
        sl = [slice(None)] * n
        sl[a - 1] = 1
        sl[b - 1] = 1
        t[tuple(sl)] *= cmath.exp(2j * math.pi / 2**g.k)
        return PureState(n, t.reshape(-1))
    if g.kind == "CNOT":
        c, x = g.targets
        t = t.copy()
        sel = [slice(None)] * n
        sel[c - 1] = 1
        sub = t[tuple(sel)]
        t[tuple(sel)] = np.flip(sub, axis=(x - 1) if x < c else (x - 2)).copy()
        return PureState(n, t.reshape(-1))

    u = gate_matrix(g)
    q = g.targets[0]
    moved = np.moveaxis(t, q - 1, 0)
    out = np.tensordot(u, moved, axes=([1], [0]))
    out = np.moveaxis(out, 0, q - 1)
    return PureState(n, np.ascontiguousarray(out).reshape(-1))


def apply_gates(state: PureState, gates: Iterable[Gate]) -> PureState:
    for g in gates:
        state = apply_gate(state, g)
    return state


def basis_kets(theta: float, phi: float) -> tuple[np.ndarray, np.ndarray]:
    """Measurement basis: outcome 0 is ``cos(theta)|0> + e^{i phi} sin(theta)|1>``."""
    e = cmath.exp(1j * phi)
    b0 = np.array([math.cos(theta), e * math.sin(theta)], dtype=np.complex128)
    b1 = np.array([math.sin(theta), -e * math.cos(theta)], dtype=np.complex128)
    return b0, b1


def planar_basis(beta: float) -> tuple[float, float]:
    """(theta, phi) of the planar basis ``(|0> +/- e^{i beta}|1>)/sqrt(2)``."""
    return math.pi / 4.0, beta


def project_measure(
    state: PureState,
    qubit: int,
    basis: tuple[float, float],
    mode: tuple,
) -> tuple[int, float, PureState]:
    """Projective measurement; the measured qubit is removed from the state.

    ``basis=(theta, phi)`` as in :func:`basis_kets`; ``mode`` is
    ``("sample", rng)`` or ``("forced", outcome)``. Returns
    ``(outcome, born probability, reduced state)``.
    """
    n = state.n
    if not (1 <= qubit <= n):
        raise InputError(f"measured qubit {qubit} outside [1, {n}]")
    theta, phi = basis
    b0, b1 = basis_kets(theta, phi)
    t = np.moveaxis(state.amps.reshape((2,) * n), qubit - 1, 0).reshape(2, -1)
    c0 = b0.conj() @ t
    c1 = b1.conj() @ t
    p0 = float(np.vdot(c0, c0).real)
    p1 = float(np.vdot(c1, c1).real)

    kind = mode[0]
    if kind == "sample":
        rng = mode[1]
        outcome = 0 if rng.random() < p0 / (p0 + p1) else 1
    elif kind == "forced":
        outcome = int(mode[1])
        if outcome not in (0, 1):
            raise InputError(f"forced outcome must be 0 or 1, got {mode[1]!r}")
        if (p0 if outcome == 0 else p1) < 1e-12:
            raise InputError(f"forced branch {outcome} has probability < 1e-12")
    else:
        raise InputError(f"unknown measurement mode {kind!r}")

    c = c0 if outcome == 0 else c1
    p = p0 if outcome == 0 else p1
    shape = tuple(2 for i in range(n) if i != qubit - 1)
    reduced = (c / math.sqrt(p)).reshape(shape or (1,)).reshape(-1)
    return outcome, p, PureState(n - 1, reduced)


def to_density(state: PureState, depolarizing: float = 0.0) -> MixedState:
    """``|psi><psi|`` mixed with ``depolarizing * I/d``."""
    if state.n > MAX_MIXED_QUBITS:
        raise ResourceLimitError(f"dense density matrix limited to {MAX_MIXED_QUBITS} qubits, got {state.n}")
    if not (0.0 <= depolarizing <= 1.0):
        raise InputError(f"depolarizing probability {depolarizing} outside [0, 1]")
    d = state.dim
    rho = np.outer(state.amps, state.amps.conj())
    if depolarizing > 0.0:
        rho = (1.0 - depolarizing) * rho + depolarizing * np.eye(d) / d
    return MixedState(state.n, rho)


def fidelity(a: PureState, b: PureState) -> float:
    """``|<a|b>|**2`` (global-phase insensitive)."""
    if a.n != b.n:
        raise InputError(f"fidelity between {a.n}- and {b.n}-qubit states")
    return float(abs(np.vdot(a.amps, b.amps)) ** 2)


def tensor(a: PureState, b: PureState) -> PureState:
    """``a`` on the more significant qubits, ``b`` on the less significant."""
    return PureState(a.n + b.n, np.kron(a.amps, b.amps))


# Reference states ----------------------------------------------------------


def cluster_state() -> PureState:
    """The 4-qubit entangled resource ``(|0000>+|0011>+|1100>-|1111>)/2``."""
    amps = np.zeros(16, dtype=np.complex128)
    amps[0b0000] = 0.5
    amps[0b0011] = 0.5
    amps[0b1100] = 0.5
    amps[0b1111] = -0.5
    return PureState(4, amps)


def cs_state() -> PureState:
    """Controlled-S magic state ``(|00>+|01>+|10>+i|11>)/2``."""
    return PureState(2, 0.5 * np.array([1, 1, 1, 1j], dtype=np.complex128))


def max_magic_qubit() -> PureState:
    """Single-qubit state with Bloch vector ``(1,1,1)/sqrt(3)`` (magic = 1 T)."""
    th = math.acos(1.0 / math.sqrt(3.0)) / 2.0
    amps = np.array([math.cos(th), cmath.exp(1j * math.pi / 4) * math.sin(th)], dtype=np.complex128)
    return PureState(1, amps)
