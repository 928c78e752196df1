"""Few-shot randomized-measurement estimation of M2 and purity.

Each qubit is measured in a uniformly random Pauli basis (a letter from
{X, Y, Z}); repeating this for many random bases yields per-basis outcome
records. The estimator averages the kernels ``K4 = (-2)**(-D4)`` over outcome
4-subsets and ``K2 = (-2)**(-D2)`` over 2-subsets, where ``D4`` counts bit
positions with odd XOR parity across the four outcomes and ``D2`` is the
Hamming distance, and combines them as

    M2_hat = -log2(mean K4) + log2(mean K2),      purity_hat = d * mean K2.

Both per-basis averages are complete U-statistics. They are evaluated exactly
in closed form: with ``t_A`` the Walsh-Hadamard transform of the outcome
counts, the sign variables ``s_i = (-1)**(A . z_i)`` have power sums
``p1 = t_A``, ``p2 = p4 = N``, ``p3 = t_A``, so the elementary symmetric
sums ``e2 = sum_{i<j} s_i s_j`` and ``e4 = sum_{i<j<k<l} s_i s_j s_k s_l``
follow from Newton's identities as exact integers, and

    sum over 2-subsets of K2 = 4**(-n) * sum_A 3**|A| * e2(t_A),
    sum over 4-subsets of K4 = 4**(-n) * sum_A 3**|A| * e4(t_A).

This costs O(2**n) per basis independent of the shot count, so every tuple
contributes and no subsampling noise is introduced. The analytic-expectation
mode replaces sampled counts with exact Born probabilities, turning the same
pipeline into a deterministic evaluation that must agree with the direct
Pauli-spectrum computation — the module's correctness gate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from ._backend import moments_from_counts, moments_from_probs, wht_inplace
from .magic import TUNIT, MagicValue, magic_value
from .states import MAX_MIXED_QUBITS, MixedState, PureState
from .util import (
    EstimatorFailure,
    InputError,
    ResourceLimitError,
    parallel_map,
    popcount_weights,
)

__all__ = [
    "MAX_SAMPLE_QUBITS",
    "MAX_SHOTS_PER_BASIS",
    "TUPLE_CAP",
    "ShotRecord",
    "EstimateResult",
    "ScalingResult",
    "sample_shots",
    "estimate_m2",
    "estimate_m2_analytic",
    "bootstrap_stderr",
    "scaling_study",
    "shots_to_csv",
    "shots_from_csv",
    "estimate_to_json",
]

#: Nominal bound on explicitly enumerated outcome 4-subsets. The closed-form
#: moment evaluation used here incorporates every 4-subset at O(2**n) cost, so
#: the bound never forces subsampling; it is kept as the reference point for
#: the ``tuples_used`` field, which may exceed it when the closed form covers
#: more tuples than enumeration would have.
TUPLE_CAP = 10**7

#: Largest simulated system for shot sampling (density matrices are capped
#: separately at MAX_MIXED_QUBITS).
MAX_SAMPLE_QUBITS = 10

#: Keeps the int64 per-coefficient moment accumulators (~N**4) exact.
MAX_SHOTS_PER_BASIS = 50_000

#: Hard cap on record width for post-processing (2**n count vector per basis).
MAX_RECORD_QUBITS = 20

_LETTERS = "XYZ"
_H = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=np.complex128) / math.sqrt(2.0)
# Maps the letter's eigenbasis onto the computational one: H for X, H S^dag
# for Y (so |0> +/- i|1> land on |0>/|1>), identity for Z.
_ROTATE = {
    "X": _H,
    "Y": _H @ np.diag([1.0, -1.0j]).astype(np.complex128),
    "Z": np.eye(2, dtype=np.complex128),
}


@dataclass(frozen=True)
class ShotRecord:
    """Outcomes collected in one measurement basis.

    ``basis`` assigns one letter from {X, Y, Z} per qubit (first character =
    qubit 1); ``outcomes`` holds one bit string per shot, in collection order,
    with bit ``i`` the outcome of qubit ``i+1``.
    """

    basis: str
    outcomes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "basis", str(self.basis))
        object.__setattr__(self, "outcomes", tuple(str(o) for o in self.outcomes))
        n = len(self.basis)
        if n == 0:
            raise InputError("measurement basis must name at least one qubit")
        bad = set(self.basis) - set(_LETTERS)
        if bad:
            raise InputError(f"basis {self.basis!r} contains letters outside X/Y/Z: {sorted(bad)}")
        if not self.outcomes:
            raise InputError(f"record for basis {self.basis!r} has no outcomes")
        for o in self.outcomes:
            if len(o) != n or set(o) - {"0", "1"}:
                raise InputError(f"outcome {o!r} is not a {n}-bit string")

    @property
    def n(self) -> int:
        return len(self.basis)

    @property
    def n_shots(self) -> int:
        return len(self.outcomes)


@dataclass(frozen=True)
class EstimateResult:
    """M2/purity estimate with its sampling metadata.

    ``stderr`` is in T units and stays ``None`` until filled from
    :func:`bootstrap_stderr`. ``shots_per_basis`` is the common per-record
    shot count (the smallest one if records are ragged; 0 in analytic mode).
    ``tuples_used`` counts the outcome 4-subsets the K4 average incorporates
    (0 in analytic mode, where expectations replace tuples).
    """

    m2: MagicValue
    purity: float
    stderr: float | None
    n_bases: int
    shots_per_basis: int
    tuples_used: int

    def __post_init__(self):
        if not self.purity > 0.0:
            raise InputError(f"estimated purity must be positive, got {self.purity!r}")
        if self.stderr is not None and not self.stderr >= 0.0:
            raise InputError(f"stderr must be >= 0, got {self.stderr!r}")
        if self.n_bases < 1:
            raise InputError(f"n_bases must be >= 1, got {self.n_bases}")
        if self.shots_per_basis < 0 or self.tuples_used < 0:
            raise InputError("shot and tuple counts must be >= 0")


@dataclass(frozen=True)
class ScalingResult:
    """Estimation error versus total shot budget, with log-log fits.

    ``points`` holds ``(total shots, mean |M2_hat - M2|)`` pairs in T units;
    ``slope`` is the least-squares slope over all points with nonzero error.
    """

    points: tuple[tuple[int, float], ...]
    slope: float

    def __post_init__(self):
        pts = tuple((int(n), float(e)) for n, e in self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 2:
            raise InputError("a scaling study needs at least 2 grid points")
        for n, e in pts:
            if n < 1 or e < 0.0:
                raise InputError(f"invalid scaling point ({n}, {e!r})")

    @property
    def local_slopes(self) -> tuple[float, ...]:
        """Slope between consecutive points (last entry = large-N behaviour)."""
        out = []
        for (n0, e0), (n1, e1) in zip(self.points, self.points[1:]):
            if e0 <= 0.0 or e1 <= 0.0:
                out.append(math.nan)
            else:
                out.append((math.log10(e1) - math.log10(e0)) / (math.log10(n1) - math.log10(n0)))
        return tuple(out)


# Sampling -------------------------------------------------------------------


def _check_rng(rng) -> np.random.Generator:
    if not isinstance(rng, np.random.Generator):
        raise InputError(f"rng must be a numpy Generator, got {type(rng).__name__}")
    return rng


def _basis_probs(state: PureState | MixedState, letters: str) -> np.ndarray:
    """Born distribution over bit strings when qubit i is read in letters[i]."""
    if isinstance(state, PureState):
        t = state.amps.reshape((2,) * state.n)
        for i, ch in enumerate(letters):
            if ch == "Z":
                continue
            t = np.moveaxis(np.tensordot(_ROTATE[ch], t, axes=([1], [i])), 0, i)
        p = np.abs(np.ascontiguousarray(t).reshape(-1)) ** 2
    else:
        u = np.ones((1, 1), dtype=np.complex128)
        for ch in letters:
            u = np.kron(u, _ROTATE[ch])
        p = np.real(np.einsum("ij,jk,ik->i", u, state.rho, u.conj()))
    p = np.clip(p, 0.0, None)
    return p / p.sum()


def _check_state(state: PureState | MixedState) -> int:
    if isinstance(state, PureState):
        if state.n > MAX_SAMPLE_QUBITS:
            raise ResourceLimitError(
                f"randomized measurement of pure states is limited to {MAX_SAMPLE_QUBITS} qubits, got {state.n}"
            )
    elif isinstance(state, MixedState):
        if state.n > MAX_MIXED_QUBITS:
            raise ResourceLimitError(
                f"randomized measurement of mixed states is limited to {MAX_MIXED_QUBITS} qubits, got {state.n}"
            )
    else:
        raise InputError(f"state must be a PureState or MixedState, got {type(state).__name__}")
    if state.n < 1:
        raise InputError("randomized measurement needs at least one qubit")
    return state.n


def sample_shots(
    state: PureState | MixedState,
    n_bases: int,
    shots_per_basis: int,
    rng: np.random.Generator,
) -> list[ShotRecord]:
    """Simulate randomized Pauli measurements of ``state``.

    Draws ``n_bases`` bases uniformly from {X, Y, Z}**n (repeats are kept as
    separate records) and, for each, ``shots_per_basis`` outcomes from the
    exact Born distribution. Outcome sampling uses one child RNG stream per
    basis, so record ``b`` is reproducible regardless of evaluation order.
    """
    n = _check_state(state)
    _check_rng(rng)
    if n_bases < 1:
        raise InputError(f"n_bases must be >= 1, got {n_bases}")
    if shots_per_basis < 1:
        raise InputError(f"shots_per_basis must be >= 1, got {shots_per_basis}")
    if shots_per_basis > MAX_SHOTS_PER_BASIS:
        raise ResourceLimitError(
            f"shots_per_basis is limited to {MAX_SHOTS_PER_BASIS}, got {shots_per_basis}"
        )
    letters = rng.integers(0, 3, size=(n_bases, n))
    streams = rng.spawn(n_bases)
    dim = 2**n
    fmt = f"0{n}b"
    records = []
    for b in range(n_bases):
        basis = "".join(_LETTERS[k] for k in letters[b])
        probs = _basis_probs(state, basis)
        draws = streams[b].choice(dim, size=shots_per_basis, p=probs)
        records.append(ShotRecord(basis, tuple(format(int(z), fmt) for z in draws)))
    return records


# Estimation -----------------------------------------------------------------


def _validate_records(records) -> tuple[tuple[ShotRecord, ...], int]:
    records = tuple(records)
    if not records:
        raise InputError("estimate needs at least one shot record")
    for r in records:
        if not isinstance(r, ShotRecord):
            raise InputError(f"records must be ShotRecord objects, got {type(r).__name__}")
    n = records[0].n
    for r in records:
        if r.n != n:
            raise InputError(f"mixed record widths: {n} and {r.n} qubits")
        if r.n_shots < 4:
            raise InputError(
                f"the M2 kernel needs at least 4 shots per basis, basis {r.basis!r} has {r.n_shots}"
            )
        if r.n_shots > MAX_SHOTS_PER_BASIS:
            raise ResourceLimitError(
                f"per-basis shot count is limited to {MAX_SHOTS_PER_BASIS}, got {r.n_shots}"
            )
    if n > MAX_RECORD_QUBITS:
        raise ResourceLimitError(f"record post-processing is limited to {MAX_RECORD_QUBITS} qubits, got {n}")
    return records, n


def _record_kernel_means(rec: ShotRecord, w3: np.ndarray) -> tuple[float, float]:
    """(mean K4 over 4-subsets, mean K2 over 2-subsets) for one basis record."""
    n = rec.n
    counts = np.bincount([int(o, 2) for o in rec.outcomes], minlength=2**n).astype(np.int64)
    t = wht_inplace(counts)
    s4, s2 = moments_from_counts(t, w3, rec.n_shots)
    scale = 0.25**n
    m = rec.n_shots
    return (s4 * scale) / math.comb(m, 4), (s2 * scale) / math.comb(m, 2)


def _combine(k4_mean: float, k2_mean: float, n: int, context: str) -> tuple[MagicValue, float]:
    if k4_mean <= 0.0 or k2_mean <= 0.0:
        raise EstimatorFailure(
            f"{context}: nonpositive kernel mean (K4 = {k4_mean!r}, K2 = {k2_mean!r}) "
            "— insufficient statistics for the log estimator",
            k4_mean=k4_mean,
            k2_mean=k2_mean,
        )
    bits = -math.log2(k4_mean) + math.log2(k2_mean)
    return magic_value(2.0, bits), (2.0**n) * k2_mean


def estimate_m2(records, threads: int | str | None = 1) -> EstimateResult:
    """U-statistic estimate of M2 and purity from per-basis shot records.

    Per basis, K4/K2 are averaged over all outcome 4-/2-subsets (exactly, via
    the Walsh-Hadamard moment identities); the per-basis averages are then
    combined as ``-log2(mean K4) + log2(mean K2)`` and ``purity = d*mean K2``.
    Raises :class:`EstimatorFailure` carrying the raw means when either mean
    is nonpositive (insufficient statistics). Per-basis work is data-parallel;
    the reduction order is fixed, so results do not depend on ``threads``.
    """
    records, n = _validate_records(records)
    w3 = popcount_weights(n)
    per_basis = parallel_map(lambda r: _record_kernel_means(r, w3), records, threads)
    nb = len(records)
    k4_mean = math.fsum(k4 for k4, _ in per_basis) / nb
    k2_mean = math.fsum(k2 for _, k2 in per_basis) / nb
    m2, purity = _combine(k4_mean, k2_mean, n, f"estimate over {nb} bases")
    return EstimateResult(
        m2=m2,
        purity=purity,
        stderr=None,
        n_bases=nb,
        shots_per_basis=min(r.n_shots for r in records),
        tuples_used=sum(math.comb(r.n_shots, 4) for r in records),
    )


def estimate_m2_analytic(state: PureState | MixedState, threads: int | str | None = 1) -> EstimateResult:
    """Exact-expectation twin of :func:`estimate_m2`.

    Replaces sampled outcome counts with the exact Born distribution of every
    one of the 3**n Pauli bases, so mean K4 and mean K2 become their true
    expectations: ``E[K4] = sum_P Xi_P**2`` and ``d*E[K2] = tr rho**2``. For a
    pure state the result must match the direct Pauli-spectrum M2 — this is
    the estimator's ground-truth gate, run entirely through the same kernels.
    """
    n = _check_state(state)
    w3 = popcount_weights(n)
    scale = 0.25**n

    def one(letters: tuple[str, ...]) -> tuple[float, float]:
        q = _basis_probs(state, "".join(letters)).astype(np.float64)
        s4, s2 = moments_from_probs(wht_inplace(q), w3)
        return s4 * scale, s2 * scale

    per_basis = parallel_map(one, itertools.product(_LETTERS, repeat=n), threads)
    nb = 3**n
    k4_mean = math.fsum(k4 for k4, _ in per_basis) / nb
    k2_mean = math.fsum(k2 for _, k2 in per_basis) / nb
    m2, purity = _combine(k4_mean, k2_mean, n, "analytic expectation")
    return EstimateResult(
        m2=m2, purity=purity, stderr=None, n_bases=nb, shots_per_basis=0, tuples_used=0
    )


def bootstrap_stderr(
    records,
    resamples: int = 200,
    rng: np.random.Generator | None = None,
    threads: int | str | None = 1,
) -> float:
    """Bootstrap standard error of the M2 estimate, in T units.

    Resamples whole basis records with replacement, re-runs the combining
    step on cached per-basis kernel means, and returns the sample standard
    deviation of the resampled estimates. Resamples whose kernel means turn
    nonpositive are dropped; if fewer than two survive the statistics are
    unusable and :class:`EstimatorFailure` is raised. One child RNG stream
    per resample keeps the result independent of evaluation order.
    """
    records, n = _validate_records(records)
    if len(records) < 2:
        raise InputError(f"bootstrap needs at least 2 basis records, got {len(records)}")
    if resamples < 100:
        raise InputError(f"resamples must be >= 100, got {resamples}")
    rng = _check_rng(rng if rng is not None else np.random.default_rng(0))
    w3 = popcount_weights(n)
    per_basis = parallel_map(lambda r: _record_kernel_means(r, w3), records, threads)
    k4s = np.array([k4 for k4, _ in per_basis])
    k2s = np.array([k2 for _, k2 in per_basis])
    nb = len(records)

    def one(stream: np.random.Generator) -> float | None:
        idx = stream.integers(0, nb, size=nb)
        k4_mean = math.fsum(k4s[idx]) / nb
        k2_mean = math.fsum(k2s[idx]) / nb
        if k4_mean <= 0.0 or k2_mean <= 0.0:
            return None
        return (-math.log2(k4_mean) + math.log2(k2_mean)) / TUNIT

    values = [v for v in parallel_map(one, rng.spawn(resamples), threads) if v is not None]
    if len(values) < 2:
        raise EstimatorFailure(
            f"only {len(values)} of {resamples} bootstrap resamples had positive kernel means",
            k4_mean=math.fsum(k4s) / nb,
            k2_mean=math.fsum(k2s) / nb,
        )
    if min(values) == max(values):  # no variance; avoids mean round-off
        return 0.0
    return float(np.std(values, ddof=1))


# Error-scaling study --------------------------------------------------------


def _allocate_shots(total: int) -> tuple[int, int]:
    """Split a total shot budget into (bases, shots per basis).

    Shots per basis grow from 4 up to 80 while the basis count holds at 81;
    past that point extra budget buys more random bases. Small budgets are
    therefore 4-tuple starved (the steep error regime) while large budgets
    become basis-ensemble limited (the 1/sqrt(N) regime).
    """
    m = min(80, max(4, total // 81))
    return max(1, total // m), m


def scaling_study(
    state: PureState | MixedState,
    total_shot_grid,
    repeats: int = 10,
    rng: np.random.Generator | None = None,
    threads: int | str | None = 1,
) -> ScalingResult:
    """Mean |M2 error| versus total shots, with the fitted log-log slope.

    For every budget N in the ascending grid, runs ``repeats`` independent
    trials of sample-and-estimate against the analytic-expectation value and
    averages the absolute error (in T units). Budgets are split by
    :func:`_allocate_shots`; the reported N is the number of shots actually
    collected. Trials that fail with nonpositive kernel means are dropped
    (every budget must keep at least one trial). RNG streams split per
    (budget, trial).
    """
    _check_state(state)
    grid = [int(x) for x in total_shot_grid]
    if len(grid) < 2:
        raise InputError("the shot grid needs at least 2 budgets")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError(f"the shot grid must be strictly ascending, got {grid}")
    if grid[0] < 16:
        raise InputError(f"the smallest budget must be >= 16 shots, got {grid[0]}")
    if repeats < 1:
        raise InputError(f"repeats must be >= 1, got {repeats}")
    rng = _check_rng(rng if rng is not None else np.random.default_rng(0))
    exact_t = estimate_m2_analytic(state, threads).m2.t_units
    streams = rng.spawn(len(grid) * repeats)

    points = []
    for gi, total in enumerate(grid):
        n_bases, shots = _allocate_shots(total)
        errors = []
        for r in range(repeats):
            records = sample_shots(state, n_bases, shots, streams[gi * repeats + r])
            try:
                est = estimate_m2(records, threads)
            except EstimatorFailure:
                continue
            errors.append(abs(est.m2.t_units - exact_t))
        if not errors:
            raise EstimatorFailure(
                f"every trial at budget {total} had nonpositive kernel means"
            )
        points.append((n_bases * shots, math.fsum(errors) / len(errors)))

    usable = [(n, e) for n, e in points if e > 0.0]
    if len(usable) < 2:
        raise EstimatorFailure("log-log fit needs at least 2 budgets with nonzero error")
    slope = float(
        np.polyfit(
            np.log10([n for n, _ in usable]), np.log10([e for _, e in usable]), 1
        )[0]
    )
    return ScalingResult(points=tuple(points), slope=slope)


# File formats ---------------------------------------------------------------


def shots_to_csv(records) -> str:
    """One "basis,outcome" row per shot, records in order."""
    records, _ = _validate_shape_only(records)
    lines = ["basis,outcome"]
    for r in records:
        lines.extend(f"{r.basis},{o}" for o in r.outcomes)
    return "\n".join(lines) + "\n"


def _validate_shape_only(records) -> tuple[tuple[ShotRecord, ...], int]:
    records = tuple(records)
    if not records:
        raise InputError("no shot records")
    for r in records:
        if not isinstance(r, ShotRecord):
            raise InputError(f"records must be ShotRecord objects, got {type(r).__name__}")
    n = records[0].n
    for r in records:
        if r.n != n:
            raise InputError(f"mixed record widths: {n} and {r.n} qubits")
    return records, n


def shots_from_csv(text: str) -> tuple[ShotRecord, ...]:
    """Parse "basis,outcome" rows; consecutive rows with one basis form a record.

    Errors name the offending 1-based row. Blank lines are ignored.
    """
    lines = text.splitlines()
    if not lines or lines[0].strip() != "basis,outcome":
        raise InputError('row 1: expected the header "basis,outcome"')
    records: list[ShotRecord] = []
    basis: str | None = None
    outcomes: list[str] = []

    def flush():
        if basis is not None:
            records.append(ShotRecord(basis, tuple(outcomes)))

    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise InputError(f"row {i}: expected 2 fields, got {len(parts)}")
        b, o = parts[0].strip(), parts[1].strip()
        if set(b) - set(_LETTERS) or not b:
            raise InputError(f"row {i}: basis {b!r} is not a string over X/Y/Z")
        if len(o) != len(b) or set(o) - {"0", "1"}:
            raise InputError(f"row {i}: outcome {o!r} does not match the {len(b)}-qubit basis {b!r}")
        if b != basis:
            flush()
            basis, outcomes = b, []
        outcomes.append(o)
    flush()
    if not records:
        raise InputError("the CSV contains no shot rows")
    widths = {r.n for r in records}
    if len(widths) > 1:
        raise InputError(f"the CSV mixes record widths {sorted(widths)}")
    return tuple(records)


def estimate_to_json(result: EstimateResult) -> str:
    """JSON document for one estimate (stderr may be null)."""
    from .util import json_dumps

    return json_dumps(
        {
            "m2_bits": result.m2.bits,
            "m2_T": result.m2.t_units,
            "purity": result.purity,
            "stderr_T": result.stderr,
            "n_bases": result.n_bases,
            "shots_per_basis": result.shots_per_basis,
        }
    )
