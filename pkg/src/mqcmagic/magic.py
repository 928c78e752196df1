"""Pauli spectrum and magic quantifiers.

All magic values are logarithms base 2 ("bits"); the companion T unit is the
magic of the maximal-magic single-qubit state, ``log2(3/2)`` bits, so values
are also reported as multiples of that ceiling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .states import MixedState, PureState
from .util import InputError, ResourceLimitError

TUNIT = math.log2(1.5)

MAX_SPECTRUM_PURE = 10
MAX_SPECTRUM_MIXED = 6

__all__ = [
    "TUNIT",
    "PauliString",
    "SpectrumVector",
    "MagicValue",
    "magic_value",
    "pauli_expectation",
    "pauli_spectrum",
    "spectrum_to_csv",
    "sre",
    "m2_mixed",
    "meas_magic",
    "meas_magic_general",
    "nullity",
]


@dataclass(frozen=True)
class PauliString:
    """Phase-free n-qubit Pauli operator as X/Z bit masks.

    Mask bit of weight ``2**(n-i)`` addresses qubit ``i`` (same convention as
    basis indices: qubit 1 is the most significant bit). Both bits set on a
    qubit means Y; the identity has both masks zero.
    """

    n: int
    x_mask: int
    z_mask: int

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"PauliString needs n >= 1, got {self.n}")
        top = 1 << self.n
        if not (0 <= self.x_mask < top and 0 <= self.z_mask < top):
            raise InputError(f"masks ({self.x_mask}, {self.z_mask}) exceed {self.n} bits")

    @property
    def index(self) -> int:
        """Position in a SpectrumVector: ``(x_mask << n) | z_mask``."""
        return (self.x_mask << self.n) | self.z_mask

    def label(self) -> str:
        letters = []
        for i in range(self.n):
            bit = 1 << (self.n - 1 - i)
            xb, zb = bool(self.x_mask & bit), bool(self.z_mask & bit)
            letters.append("IXZY"[xb + 2 * zb] if not (xb and zb) else "Y")
        return "".join(letters)


@dataclass(frozen=True)
class SpectrumVector:
    """All ``4**n`` spectrum entries ``Xi_P = tr(P rho)**2 / d`` plus purity."""

    n: int
    xi: np.ndarray
    purity: float

    def __post_init__(self):
        xi = np.asarray(self.xi, dtype=np.float64).reshape(-1)
        if xi.shape[0] != 4**self.n:
            raise InputError(f"spectrum length {xi.shape[0]} != 4**{self.n}")
        if float(xi.min()) < -1e-12:
            raise InputError("spectrum has an entry below -1e-12")
        if abs(float(xi.sum()) - self.purity) > 1e-9:
            raise InputError("spectrum sum deviates from purity beyond 1e-9")
        xi = xi.copy()
        xi.flags.writeable = False
        object.__setattr__(self, "xi", xi)

    def entry(self, p: PauliString) -> float:
        return float(self.xi[p.index])


@dataclass(frozen=True)
class MagicValue:
    """A magic quantity: Renyi order, value in bits, value in T units."""

    alpha: float
    bits: float
    t_units: float

    def __add__(self, other: "MagicValue") -> "MagicValue":
        if self.alpha != other.alpha:
            raise InputError(f"cannot add magic of orders {self.alpha} and {other.alpha}")
        return magic_value(self.alpha, self.bits + other.bits)


def magic_value(alpha: float, bits: float) -> MagicValue:
    """MagicValue with the definitional bits -> T-unit conversion applied."""
    return MagicValue(alpha=alpha, bits=bits, t_units=bits / TUNIT)


def _clamped_bits(bits: float, what: str) -> float:
    if bits < -1e-9:
        raise InputError(f"{what} = {bits} bits is negative beyond tolerance; non-normalized input?")
    return max(bits, 0.0)


def _xor_parity(v: np.ndarray) -> np.ndarray:
    """Bit parity of each uint64 entry (0 or 1)."""
    v = v.copy()
    for s in (32, 16, 8, 4, 2, 1):
        v ^= v >> np.uint64(s)
    return (v & np.uint64(1)).astype(np.int64)


def pauli_expectation(state: PureState | MixedState, p: PauliString) -> float:
    """``<psi|P|psi>`` or ``tr(P rho)`` in O(2**n) via mask-driven index pairing."""
    if state.n != p.n:
        raise InputError(f"state on {state.n} qubits vs Pauli on {p.n}")
    d = state.dim
    idx = np.arange(d, dtype=np.uint64)
    signs = 1.0 - 2.0 * _xor_parity(idx & np.uint64(p.z_mask))
    phase = 1j ** ((p.x_mask & p.z_mask).bit_count() % 4)
    perm = (idx ^ np.uint64(p.x_mask)).astype(np.int64)
    if isinstance(state, PureState):
        val = np.dot(state.amps.conj()[perm], signs * state.amps) * phase
    else:
        val = np.dot(signs, state.rho[np.arange(d), perm]) * phase
    return float(val.real)


def _letter_transform(rho: np.ndarray, n: int) -> np.ndarray:
    """Per-qubit 4-way mixing: density matrix -> tr(P rho) for all 4**n P.

    Output is indexed base-4 per qubit (I=0, X=1, Y=2, Z=3), qubit 1 on the
    most significant digit.
    """
    d = 2**n
    a = rho.reshape(1, d, d)
    for _ in range(n):
        b, r, c = a.shape
        a = a.reshape(b, 2, r // 2, 2, c // 2)
        letters = np.stack(
            [
                a[:, 0, :, 0, :] + a[:, 1, :, 1, :],
                a[:, 0, :, 1, :] + a[:, 1, :, 0, :],
                1j * (a[:, 0, :, 1, :] - a[:, 1, :, 0, :]),
                a[:, 0, :, 0, :] - a[:, 1, :, 1, :],
            ],
            axis=1,
        )
        a = letters.reshape(b * 4, r // 2, c // 2)
    return a.reshape(-1).real


def _letters_to_mask_order(vals: np.ndarray, n: int) -> np.ndarray:
    """Reindex a base-4 letter vector to ``(x_mask << n) | z_mask`` order."""
    idx = np.arange(4**n, dtype=np.int64)
    x_mask = np.zeros_like(idx)
    z_mask = np.zeros_like(idx)
    for i in range(n):
        dig = (idx >> (2 * (n - 1 - i))) & 3
        xb = ((dig == 1) | (dig == 2)).astype(np.int64)
        zb = ((dig == 2) | (dig == 3)).astype(np.int64)
        x_mask |= xb << (n - 1 - i)
        z_mask |= zb << (n - 1 - i)
    out = np.empty_like(vals)
    out[(x_mask << n) | z_mask] = vals
    return out


def pauli_spectrum(state: PureState | MixedState, method: str = "fast") -> SpectrumVector:
    """Full spectrum vector.

    ``method="fast"`` uses the qubit-recursive 4-way transform (O(4**n * n)
    from the density operator); ``method="naive"`` evaluates every Pauli
    string independently and serves as the cross-check oracle.
    """
    n = state.n
    if isinstance(state, PureState):
        if n > MAX_SPECTRUM_PURE:
            raise ResourceLimitError(f"pure-state spectrum limited to {MAX_SPECTRUM_PURE} qubits, got {n}")
        purity = 1.0
        rho = None if method == "naive" else np.outer(state.amps, state.amps.conj())
    else:
        if n > MAX_SPECTRUM_MIXED:
            raise ResourceLimitError(f"mixed-state spectrum limited to {MAX_SPECTRUM_MIXED} qubits, got {n}")
        purity = state.purity()
        rho = None if method == "naive" else state.rho

    d = 2**n
    if method == "fast":
        vals = _letter_transform(rho, n)
        xi = _letters_to_mask_order(vals * vals, n) / d
    elif method == "naive":
        xi = np.empty(4**n, dtype=np.float64)
        for x in range(d):
            for z in range(d):
                v = pauli_expectation(state, PauliString(n, x, z))
                xi[(x << n) | z] = v * v / d
    else:
        raise InputError(f"unknown spectrum method {method!r}")
    return SpectrumVector(n=n, xi=xi, purity=purity)


def spectrum_to_csv(spec: SpectrumVector) -> str:
    """CSV serialization, columns ``x_mask,z_mask,xi``."""
    lines = ["x_mask,z_mask,xi"]
    n = spec.n
    for x in range(2**n):
        for z in range(2**n):
            lines.append(f"{x},{z},{spec.xi[(x << n) | z]!r}")
    return "\n".join(lines) + "\n"


def _renyi_bits(prob: np.ndarray, alpha: float, log2_d: float) -> float:
    """(1-alpha)^-1 log2 sum(prob**alpha) - log2 d with the alpha=0,1 limits."""
    if alpha < 0:
        raise InputError(f"Renyi order must be >= 0, got {alpha}")
    if alpha == 1.0:
        pos = prob[prob > 0.0]
        return float(-(pos * np.log2(pos)).sum()) - log2_d
    if alpha == 0.0:
        return math.log2(int((prob > 1e-12).sum())) - log2_d
    return float(math.log2(float((prob**alpha).sum())) / (1.0 - alpha)) - log2_d


def sre(state: PureState, alpha: float = 2.0) -> MagicValue:
    """Stabilizer Renyi entropy M_alpha of a pure state."""
    spec = pauli_spectrum(state)
    bits = _renyi_bits(spec.xi, alpha, float(state.n))
    return magic_value(alpha, _clamped_bits(bits, f"M_{alpha}"))


def m2_mixed(rho: MixedState) -> MagicValue:
    """Mixed-state magic ``-log2 sum(Xi**2) - log2 d - S2(rho)``."""
    spec = pauli_spectrum(rho)
    s2 = -math.log2(spec.purity)
    bits = -math.log2(float((spec.xi**2).sum())) - rho.n - s2
    return magic_value(2.0, _clamped_bits(bits, "M_2"))


def _single_qubit_renyi(prob4: np.ndarray, alpha: float) -> float:
    return _renyi_bits(prob4, alpha, 1.0)


def meas_magic(theta: float, alpha: float = 2.0) -> MagicValue:
    """Magic injected by a planar measurement at angle ``theta``.

    For alpha = 2 this is the closed form ``-log2(1/2 + cos(t)**4/2 +
    sin(t)**4/2)``; other orders use the measured-qubit spectrum
    ``{1/2, cos(t)**2/2, sin(t)**2/2, 0}`` directly. The angle is folded into
    [0, pi/4] first (the value is even and pi/2-periodic), so equal-magic
    angles produce bit-identical results.
    """
    from .util import fold_planar_angle

    a = fold_planar_angle(theta)
    c = math.cos(a)
    s = math.sin(a)
    if alpha == 2.0:
        bits = -math.log2(0.5 + 0.5 * c**4 + 0.5 * s**4)
    else:
        prob = np.array([0.5, 0.5 * c * c, 0.5 * s * s, 0.0])
        bits = _single_qubit_renyi(prob, alpha)
    return magic_value(alpha, _clamped_bits(bits, "measurement magic"))


def meas_magic_general(theta: float, phi: float, alpha: float = 2.0) -> MagicValue:
    """Magic injected by a general measurement with basis half-angle ``theta``
    and phase ``phi`` (Bloch vector ``(sin2t cos p, sin2t sin p, cos2t)``)."""
    bx = math.sin(2.0 * theta) * math.cos(phi)
    by = math.sin(2.0 * theta) * math.sin(phi)
    bz = math.cos(2.0 * theta)
    if alpha == 2.0:
        bits = -math.log2((1.0 + bx**4 + by**4 + bz**4) / 2.0)
    else:
        prob = np.array([0.5, 0.5 * bx * bx, 0.5 * by * by, 0.5 * bz * bz])
        bits = _single_qubit_renyi(prob, alpha)
    return magic_value(alpha, _clamped_bits(bits, "measurement magic"))


def nullity(state: PureState) -> int:
    """``n - log2 |{P : |<P>| = 1}|``; the counted set is a group of size 2**k."""
    spec = pauli_spectrum(state)
    thresh = (1.0 - 1e-9) ** 2 / state.dim
    count = int((spec.xi >= thresh).sum())
    k = count.bit_length() - 1
    if 2**k != count:
        raise InputError(f"unsigned stabilizer count {count} is not a power of two (tolerance failure)")
    return state.n - k
