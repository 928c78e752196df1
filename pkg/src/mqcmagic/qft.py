"""QFT ladder construction, per-frequency magic profiles, and scaling fits."""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .compiler import Circuit, apply_circuit, j_decompose
from .magic import MagicValue, magic_value, meas_magic
from .states import CRK, H, PureState, fidelity
from .util import InputError, ResourceLimitError, parallel_map, spawn_rng

__all__ = [
    "MAX_QFT_SIM_QUBITS",
    "MAX_QFT_FIT_QUBITS",
    "QftProfile",
    "FitResult",
    "build_qft",
    "imr_crk",
    "qft_profile",
    "qft_total",
    "scaling_fit",
    "truncation_fidelity",
    "fidelity_table",
    "profile_to_csv",
    "scaling_to_csv",
    "fidelity_to_csv",
]

MAX_QFT_SIM_QUBITS = 10
MAX_QFT_FIT_QUBITS = 10_000

# The closed-form tail sums converge long before this order: the per-gate
# cost underflows to exactly 0.0 bits near k = 30.
_ANALYTIC_K_MAX = 256


@dataclass(frozen=True)
class QftProfile:
    """Invested magic of a (possibly truncated) ladder, split by frequency.

    ``per_frequency`` holds one row ``(k, gate_count, per_gate, subtotal)``
    per controlled-phase order ``k``; ``j_count`` is the number of J steps in
    the compiled sequence after peephole cancellation.
    """

    n: int
    per_frequency: tuple
    total: MagicValue
    j_count: int


@dataclass(frozen=True)
class FitResult:
    """Least-squares line through ``(n, total in T)`` plus its exact limit.

    ``analytic_slope`` is the converged sum of per-gate costs over all orders
    (the large-``n`` slope) and ``analytic_intercept`` the matching offset;
    ``residual`` is the largest absolute deviation of the fitted line from
    the closed-form totals inside ``n_range``.
    """

    slope: float
    intercept: float
    n_range: tuple
    residual: float
    analytic_slope: float
    analytic_intercept: float

    def __post_init__(self):
        if self.n_range[0] < 4:
            raise InputError(f"fit range must start at n >= 4, got {self.n_range[0]}")
        if not math.isfinite(self.residual):
            raise InputError(f"fit residual must be finite, got {self.residual!r}")


def _check_cutoff(n: int, m: int | None) -> int:
    if n < 1:
        raise InputError(f"qubit count must be >= 1, got {n}")
    if m is None:
        return n
    if not 2 <= m <= n:
        raise InputError(f"cutoff must satisfy 2 <= m <= n, got m={m} with n={n}")
    return m


def build_qft(n: int, m: int | None = None) -> Circuit:
    """Iterative H + controlled-phase ladder on ``n`` wires.

    Wire ``j`` (counted from the top) receives an H followed by CR_k gates
    controlled on ``j`` targeting ``j-k+1``, highest wire first.  A cutoff
    ``m`` drops every CR_k of order ``k > m``, keeping only low-frequency
    phase gates.  The trailing qubit-reversal swaps are omitted throughout:
    they are Clifford and carry no magic, so no magic quantity depends on
    them (state-level checks must account for the reversed output order).
    """
    m_eff = _check_cutoff(n, m)
    gates = []
    for j in range(n, 0, -1):
        gates.append(H(j))
        for k in range(2, j + 1):
            if k <= m_eff:
                gates.append(CRK(k, j, j - k + 1))
    return Circuit(n, tuple(gates))


def imr_crk(k: int) -> MagicValue:
    """Invested magic of one controlled-phase gate of order ``k``.

    The gate compiles to exactly three non-Clifford J angles of magnitude
    ``pi / 2**k``, so its cost is three single-measurement charges at that
    angle.  For large ``k`` this decays like ``3 (pi/2**k)**2 log2 e`` bits.
    """
    if k < 2:
        raise InputError(f"controlled-phase order must be >= 2, got {k}")
    return magic_value(2.0, 3.0 * meas_magic(math.pi / 2.0**k).bits)


def qft_total(n: int, m: int | None = None) -> MagicValue:
    """Closed-form invested magic of the ladder: sum of (n-k+1) CR_k costs."""
    m_eff = _check_cutoff(n, m)
    bits = math.fsum((n - k + 1) * imr_crk(k).bits for k in range(2, m_eff + 1))
    return magic_value(2.0, bits)


def qft_profile(n: int, m: int | None = None) -> QftProfile:
    """Per-frequency invested-magic breakdown of the (truncated) ladder."""
    m_eff = _check_cutoff(n, m)
    rows = []
    for k in range(2, m_eff + 1):
        count = n - k + 1
        per_gate = imr_crk(k)
        rows.append((k, count, per_gate, magic_value(2.0, count * per_gate.bits)))
    total = magic_value(2.0, math.fsum(r[3].bits for r in rows))
    j_count = len(j_decompose(build_qft(n, m)).j_angles)
    return QftProfile(n=n, per_frequency=tuple(rows), total=total, j_count=j_count)


@functools.cache
def _analytic_constants() -> tuple:
    costs = [(k, imr_crk(k).t_units) for k in range(2, _ANALYTIC_K_MAX + 1)]
    slope = math.fsum(c for _, c in costs)
    intercept = -math.fsum((k - 1) * c for k, c in costs)
    return slope, intercept


def scaling_fit(n_lo: int, n_hi: int) -> FitResult:
    """Least-squares line through the closed-form totals over ``[n_lo, n_hi]``.

    Works from the closed form (no simulation), so wide ranges are cheap.
    The totals become exactly linear once ``n`` passes the last order with a
    nonzero cost, hence the converged ``analytic_*`` cross-check values.
    """
    if n_lo < 6:
        raise InputError(f"fit range must start at n >= 6, got {n_lo}")
    if n_hi <= n_lo:
        raise InputError(f"fit range must satisfy n_hi > n_lo, got [{n_lo}, {n_hi}]")
    if n_hi > MAX_QFT_FIT_QUBITS:
        raise ResourceLimitError(f"fit range capped at n = {MAX_QFT_FIT_QUBITS}, got {n_hi}")
    # total(n) = sum_{k<=n} (n-k+1) c_k = (n+1) C(n) - K(n) with C, K cumulative.
    ck = np.array([imr_crk(k).t_units for k in range(2, n_hi + 1)])
    csum = np.cumsum(ck)
    ksum = np.cumsum(ck * np.arange(2, n_hi + 1, dtype=np.float64))
    ns = np.arange(n_lo, n_hi + 1, dtype=np.int64)
    totals = (ns + 1.0) * csum[ns - 2] - ksum[ns - 2]
    slope, intercept = (float(v) for v in np.polyfit(ns.astype(np.float64), totals, 1))
    residual = float(np.max(np.abs(slope * ns + intercept - totals)))
    analytic_slope, analytic_intercept = _analytic_constants()
    return FitResult(
        slope=slope,
        intercept=intercept,
        n_range=(n_lo, n_hi),
        residual=residual,
        analytic_slope=analytic_slope,
        analytic_intercept=analytic_intercept,
    )


def _random_input(n: int, rng: np.random.Generator) -> PureState:
    re = rng.standard_normal(2**n)
    im = rng.standard_normal(2**n)
    amps = re + 1j * im
    return PureState(n, amps / np.linalg.norm(amps))


def truncation_fidelity(
    n: int, m: int, trials: int, rng: np.random.Generator, threads: int | str | None = 1
) -> tuple:
    """(min, mean) fidelity of the truncated ladder against the full one.

    Both circuits share the same wire layout (no swaps either way), so the
    fidelity is a direct overlap of the two outputs on a common random
    input.  Inputs are drawn up front from ``rng``; the simulations then run
    via ``parallel_map``, so the result is identical for any thread count.
    """
    if n > MAX_QFT_SIM_QUBITS:
        raise ResourceLimitError(f"fidelity simulation capped at n = {MAX_QFT_SIM_QUBITS}, got {n}")
    _check_cutoff(n, m)
    if trials < 1:
        raise InputError(f"trial count must be >= 1, got {trials}")
    full = build_qft(n)
    trunc = build_qft(n, m)
    inputs = [_random_input(n, rng) for _ in range(trials)]

    def one(psi: PureState) -> float:
        return fidelity(apply_circuit(psi, full), apply_circuit(psi, trunc))

    fids = parallel_map(one, inputs, threads=threads)
    return min(fids), math.fsum(fids) / trials


def fidelity_table(
    n: int,
    m_values,
    trials: int,
    seed: int,
    threads: int | str | None = 1,
) -> list:
    """Rows ``(n, m, min, mean)`` with identical inputs reused across cutoffs."""
    rows = []
    for m in m_values:
        rng = spawn_rng(seed, "qft-fidelity", n, trials)
        lo, mean = truncation_fidelity(n, m, trials, rng, threads=threads)
        rows.append((n, int(m), lo, mean))
    return rows


def profile_to_csv(profile: QftProfile) -> str:
    """CSV serialization, columns ``n,k,count,t_units``."""
    lines = ["n,k,count,t_units"]
    for k, count, _, subtotal in profile.per_frequency:
        lines.append(f"{profile.n},{k},{count},{subtotal.t_units!r}")
    return "\n".join(lines) + "\n"


def scaling_to_csv(n_values, m: int | None = None) -> str:
    """CSV serialization, columns ``n,total_t``."""
    lines = ["n,total_t"]
    for n in n_values:
        lines.append(f"{int(n)},{qft_total(int(n), m).t_units!r}")
    return "\n".join(lines) + "\n"


def fidelity_to_csv(rows) -> str:
    """CSV serialization, columns ``n,m,min_fidelity,mean_fidelity``."""
    lines = ["n,m,min_fidelity,mean_fidelity"]
    for n, m, lo, mean in rows:
        lines.append(f"{n},{m},{lo!r},{mean!r}")
    return "\n".join(lines) + "\n"
