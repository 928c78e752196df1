"""QFT ladder construction, per-frequency profiles, and scaling fits."""

import math
from collections import Counter

import numpy as np
import pytest

from mqcmagic import (
    CRK,
    Circuit,
    H,
    InputError,
    PureState,
    ResourceLimitError,
    apply_circuit,
    apply_gate,
    build_qft,
    circuit_unitary,
    cs_state,
    fidelity,
    fidelity_table,
    imr_crk,
    invested_magic,
    j_decompose,
    qft_profile,
    qft_total,
    scaling_fit,
    sre,
    truncation_fidelity,
)
from mqcmagic.qft import FitResult, fidelity_to_csv, profile_to_csv, scaling_to_csv
from mqcmagic.util import spawn_rng

SEED = 20260816


def qft_oracle(n: int) -> np.ndarray:
    """DFT matrix composed with the bit-reversal permutation (no swaps)."""
    d = 2**n
    x = np.arange(d)
    dft = np.exp(2j * np.pi * np.outer(x, x) / d) / math.sqrt(d)
    rev = [int(format(i, f"0{n}b")[::-1], 2) for i in range(d)]
    perm = np.zeros((d, d))
    perm[rev, x] = 1.0
    return dft @ perm


class TestBuildQft:
    def test_single_qubit_is_one_hadamard(self):
        gates = build_qft(1).gates
        assert [g.kind for g in gates] == ["H"]

    def test_two_qubit_gate_list(self):
        gates = build_qft(2).gates
        assert [(g.kind, g.targets) for g in gates] == [("H", (2,)), ("CRk", (2, 1)), ("H", (1,))]
        assert gates[1].k == 2

    def test_cutoff_two_keeps_only_order_two(self):
        orders = [g.k for g in build_qft(4, 2).gates if g.kind == "CRk"]
        assert orders == [2, 2, 2]

    def test_gate_count_per_order_is_ladder_count(self):
        for n in (3, 5, 8):
            counts = Counter(g.k for g in build_qft(n).gates if g.kind == "CRk")
            assert counts == {k: n - k + 1 for k in range(2, n + 1)}

    @pytest.mark.parametrize("n", [1, 2, 3, 4])
    def test_unitary_matches_dft_times_bit_reversal(self, n):
        err = np.max(np.abs(circuit_unitary(build_qft(n)) - qft_oracle(n)))
        assert err < 1e-12

    def test_two_qubit_ladder_reaches_cs_state(self):
        """|+>|0> runs to |CS> just before the trailing Clifford H."""
        plus0 = PureState(2, np.kron([1, 1], [1.0, 0]) / math.sqrt(2))
        out = apply_circuit(plus0, build_qft(2))
        expect = np.array([2, 1 + 1j, 0, 1 - 1j]) / (2 * math.sqrt(2))
        assert np.max(np.abs(out.amps - expect)) < 1e-12
        assert fidelity(apply_gate(out, H(1)), cs_state()) > 1 - 1e-12
        assert sre(out).t_units == pytest.approx(2.0388402273172614, abs=1e-6)

    @pytest.mark.parametrize("n,m", [(0, None), (-1, None), (4, 1), (4, 5), (1, 2)])
    def test_bad_sizes_rejected(self, n, m):
        with pytest.raises(InputError):
            build_qft(n, m)


class TestImrCrk:
    def test_order_two_pin(self):
        v = imr_crk(2)
        assert v.bits == pytest.approx(1.2451124978365313, abs=1e-12)
        assert v.bits == pytest.approx(1.24511, abs=5e-6)
        assert v.t_units == pytest.approx(2.129, abs=5e-4)

    def test_order_three_closed_form(self):
        """cos^4 + sin^4 at pi/8 is 3/4, so each angle charges log2(8/7)."""
        assert imr_crk(3).bits == pytest.approx(3 * math.log2(8 / 7), abs=1e-12)
        assert imr_crk(3).bits == pytest.approx(0.57795, abs=5e-5)

    def test_large_order_quadratic_tail(self):
        """The cost decays like 3 (pi/2^k)^2 log2 e bits."""
        v10 = imr_crk(10)
        assert v10.bits == pytest.approx(4.073729793606362e-05, abs=1e-18)
        tail = 3 * (math.pi / 2**10) ** 2 * math.log2(math.e)
        assert v10.bits == pytest.approx(tail, rel=1e-3)
        for k in (16, 20):
            assert imr_crk(k).bits == pytest.approx(
                3 * (math.pi / 2**k) ** 2 * math.log2(math.e), rel=1e-6
            )

    @pytest.mark.parametrize("k", range(2, 13))
    def test_matches_compiled_gate(self, k):
        compiled = invested_magic(Circuit(2, (CRK(k, 2, 1),))).total
        assert abs(imr_crk(k).bits - compiled.bits) < 1e-12

    @pytest.mark.parametrize("k", [1, 0, -3])
    def test_low_orders_rejected(self, k):
        with pytest.raises(InputError):
            imr_crk(k)


class TestQftProfile:
    def test_two_qubit_profile_is_single_entry(self):
        p = qft_profile(2)
        assert len(p.per_frequency) == 1
        k, count, per_gate, subtotal = p.per_frequency[0]
        assert (k, count) == (2, 1)
        assert per_gate.bits == subtotal.bits
        assert subtotal.t_units == pytest.approx(2.1285, abs=1e-4)

    @pytest.mark.parametrize("n,m", [(2, None), (5, None), (8, None), (8, 5), (10, 3)])
    def test_total_matches_compiled_invested_magic(self, n, m):
        p = qft_profile(n, m)
        assert p.total.bits == pytest.approx(invested_magic(build_qft(n, m)).total.bits, abs=1e-9)
        assert p.total.bits == pytest.approx(
            math.fsum(row[3].bits for row in p.per_frequency), abs=1e-9
        )
        assert qft_total(n, m).bits == pytest.approx(p.total.bits, abs=1e-12)

    def test_per_frequency_nonincreasing_above_order_two(self):
        for n in (8, 32, 64):
            subs = [row[3].t_units for row in qft_profile(n).per_frequency]
            assert all(subs[i] >= subs[i + 1] for i in range(1, len(subs) - 1))

    def test_truncation_drops_exactly_the_tail(self):
        gap = qft_profile(8).total.t_units - qft_profile(8, 5).total.t_units
        tail = math.fsum((8 - k + 1) * imr_crk(k).t_units for k in (6, 7, 8))
        assert gap == pytest.approx(tail, abs=1e-12)
        assert gap == pytest.approx(0.06340087144760886, abs=1e-12)

    def test_compiled_j_count(self):
        """Peephole leaves 6 J per CR gate: j_count = n + 6 * (#CR)."""
        for n, m in [(2, None), (4, None), (8, None), (8, 5), (6, 3)]:
            p = qft_profile(n, m)
            n_cr = sum(row[1] for row in p.per_frequency)
            assert p.j_count == n + 6 * n_cr
            assert len(j_decompose(build_qft(n, m)).j_angles) == p.j_count
        assert qft_profile(8).j_count == 176


class TestScalingFit:
    def test_paper_range_constants(self):
        fit = scaling_fit(8, 32)
        assert abs(fit.slope / 3.4619 - 1) < 0.01
        assert abs(fit.intercept + 5.3388) < 0.05
        assert fit.residual < 0.05
        assert fit.n_range == (8, 32)

    def test_frozen_fit_values(self):
        fit = scaling_fit(8, 32)
        assert fit.slope == pytest.approx(3.4869596518183035, abs=1e-12)
        assert fit.intercept == pytest.approx(-5.341917294182589, abs=1e-10)
        assert fit.residual < 1e-3

    def test_analytic_constants(self):
        fit = scaling_fit(8, 32)
        assert fit.analytic_slope == pytest.approx(3.486961133263064, abs=1e-12)
        assert fit.analytic_intercept == pytest.approx(-5.341953526089331, abs=1e-9)

    def test_wide_fit_converges_to_analytic(self):
        fit = scaling_fit(100, 200)
        assert abs(fit.slope - fit.analytic_slope) < 1e-4
        assert abs(fit.intercept - fit.analytic_intercept) < 1e-3
        assert fit.residual < 1e-9

    def test_totals_are_asymptotically_linear(self):
        fit = scaling_fit(8, 32)
        for n in (40, 100, 1000):
            line = fit.analytic_slope * n + fit.analytic_intercept
            assert qft_total(n).t_units == pytest.approx(line, abs=1e-6)

    @pytest.mark.parametrize("lo,hi", [(5, 10), (8, 8), (8, 7)])
    def test_bad_ranges_rejected(self, lo, hi):
        with pytest.raises(InputError):
            scaling_fit(lo, hi)

    def test_range_cap(self):
        with pytest.raises(ResourceLimitError):
            scaling_fit(6, 20000)

    def test_fit_result_validates(self):
        with pytest.raises(InputError):
            FitResult(1.0, 0.0, (3, 10), 0.0, 1.0, 0.0)
        with pytest.raises(InputError):
            FitResult(1.0, 0.0, (8, 10), math.inf, 1.0, 0.0)


class TestTruncationFidelity:
    def test_no_truncation_is_exact(self):
        lo, mean = truncation_fidelity(5, 5, 6, spawn_rng(SEED, "full"))
        assert lo > 1 - 1e-12 and mean > 1 - 1e-12

    def test_frozen_regression_n8_m4(self):
        rng = spawn_rng(SEED, "qft-fidelity", 8, 50)
        lo, mean = truncation_fidelity(8, 4, 50, rng)
        assert lo == pytest.approx(0.9344109726391119, abs=1e-12)
        assert mean == pytest.approx(0.9440292607710613, abs=1e-12)
        assert lo >= 0.93

    def test_mean_matches_haar_average(self):
        """E|<psi|W|psi>|^2 = (|tr W|^2 + d) / (d^2 + d) for Haar inputs."""
        w = circuit_unitary(build_qft(8)).conj().T @ circuit_unitary(build_qft(8, 4))
        d = 256
        haar = (abs(np.trace(w)) ** 2 + d) / (d * d + d)
        rng = spawn_rng(SEED, "qft-fidelity", 8, 50)
        _, mean = truncation_fidelity(8, 4, 50, rng)
        assert mean == pytest.approx(float(haar), abs=0.01)

    def test_mean_increases_with_cutoff(self):
        rows = fidelity_table(6, [2, 3], 50, seed=SEED)
        assert rows[0][3] < rows[1][3]

    def test_thread_count_invariance(self):
        rows1 = fidelity_table(6, [2, 4], 20, seed=SEED, threads=1)
        rows4 = fidelity_table(6, [2, 4], 20, seed=SEED, threads=4)
        assert rows1 == rows4

    def test_resource_and_input_checks(self):
        with pytest.raises(ResourceLimitError):
            truncation_fidelity(11, 4, 2, spawn_rng(SEED))
        with pytest.raises(InputError):
            truncation_fidelity(6, 1, 2, spawn_rng(SEED))
        with pytest.raises(InputError):
            truncation_fidelity(6, 3, 0, spawn_rng(SEED))


class TestCsvEmitters:
    def test_profile_csv(self):
        lines = profile_to_csv(qft_profile(4)).splitlines()
        assert lines[0] == "n,k,count,t_units"
        assert len(lines) == 4
        assert lines[1].startswith("4,2,3,")

    def test_scaling_csv(self):
        lines = scaling_to_csv(range(2, 6)).splitlines()
        assert lines[0] == "n,total_t"
        assert len(lines) == 5
        n, total = lines[1].split(",")
        assert n == "2"
        assert float(total) == pytest.approx(qft_total(2).t_units)

    def test_fidelity_csv(self):
        rows = fidelity_table(4, [2, 3], 5, seed=SEED)
        lines = fidelity_to_csv(rows).splitlines()
        assert lines[0] == "n,m,min_fidelity,mean_fidelity"
        assert len(lines) == 3
        assert lines[1].startswith("4,2,")
