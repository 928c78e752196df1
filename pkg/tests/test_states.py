"""Dense simulator: state validation, gate application, measurement."""

import math

import numpy as np
import pytest

from mqcmagic import (
    CNOT,
    CRK,
    CZ,
    Gate,
    H,
    InputError,
    J,
    MixedState,
    PureState,
    ResourceLimitError,
    RX,
    RZ,
    S,
    T,
    U2,
    X,
    Y,
    Z,
    apply_gate,
    apply_gates,
    cluster_state,
    cs_state,
    fidelity,
    init_state,
    j_matrix,
    max_magic_qubit,
    planar_basis,
    project_measure,
    tensor,
    to_density,
)
from mqcmagic.states import basis_kets, gate_matrix

from conftest import random_state


class TestPureState:
    def test_accepts_normalized_vector(self):
        s = PureState(1, np.array([1.0, 1.0]) / math.sqrt(2))
        assert s.dim == 2
        assert s.amps.dtype == np.complex128

    def test_rejects_bad_norm(self):
        with pytest.raises(InputError):
            PureState(1, np.array([1.0, 1.0]))

    def test_rejects_wrong_length(self):
        with pytest.raises(InputError):
            PureState(2, np.array([1.0, 0.0]))

    def test_rejects_too_many_qubits(self):
        with pytest.raises(ResourceLimitError):
            PureState(15, np.zeros(2**15))

    def test_amps_are_immutable(self):
        s = init_state(2)
        with pytest.raises(ValueError):
            s.amps[0] = 0.0

    def test_equality_compares_amplitudes(self):
        a = init_state(2)
        b = init_state(2)
        assert a == b
        assert a != apply_gate(a, Z(1))

    def test_zero_qubit_state_allowed(self):
        s = PureState(0, np.array([1.0]))
        assert s.dim == 1


class TestMixedState:
    def test_purity_of_pure_projector(self):
        rho = to_density(init_state(2))
        assert rho.purity() == pytest.approx(1.0, abs=1e-12)

    def test_rejects_non_hermitian(self):
        m = np.eye(4) / 4.0 + 0j
        m[0, 1] = 0.5
        with pytest.raises(InputError):
            MixedState(2, m)

    def test_rejects_bad_trace(self):
        with pytest.raises(InputError):
            MixedState(1, np.eye(2))

    def test_rejects_negative_eigenvalue(self):
        with pytest.raises(InputError):
            MixedState(1, np.diag([1.5, -0.5]))

    def test_depolarizing_mix(self):
        rho = to_density(init_state(1, "0"), depolarizing=0.5)
        assert np.allclose(rho.rho, np.diag([0.75, 0.25]))


class TestGateValidation:
    def test_unknown_kind_rejected(self):
        with pytest.raises(InputError):
            Gate("Q", (1,))

    def test_duplicate_targets_rejected(self):
        with pytest.raises(InputError):
            CZ(2, 2)

    def test_bad_arity_rejected(self):
        with pytest.raises(InputError):
            Gate("H", (1, 2))

    def test_crk_needs_positive_k(self):
        with pytest.raises(InputError):
            CRK(0, 1, 2)

    def test_u2_must_be_unitary(self):
        with pytest.raises(InputError):
            U2(1, np.array([[1.0, 0.0], [1.0, 1.0]]))

    def test_nonfinite_angle_rejected(self):
        with pytest.raises(InputError):
            RZ(1, float("nan"))


def embed_unitary(g: Gate, n: int) -> np.ndarray:
    """Independent dense-unitary oracle: permute targets to the front."""
    m = gate_matrix(g)
    k = len(g.targets)
    full = np.kron(m, np.eye(2 ** (n - k)))
    t = full.reshape((2,) * (2 * n))
    rest = [q for q in range(1, n + 1) if q not in g.targets]
    order = list(g.targets) + rest
    inv = [order.index(q) for q in range(1, n + 1)]
    t = t.transpose(tuple(inv) + tuple(i + n for i in inv))
    return t.reshape(2**n, 2**n)


ALL_GATES = [
    H(2),
    X(1),
    Y(3),
    Z(2),
    S(1),
    T(3),
    RZ(2, 0.7),
    RX(1, -1.2),
    J(3, 2.1),
    CZ(1, 3),
    CNOT(3, 1),
    CNOT(1, 2),
    CRK(3, 2, 3),
    CRK(1, 3, 1),
]


class TestApplyGate:
    @pytest.mark.parametrize("g", ALL_GATES, ids=lambda g: f"{g.kind}{g.targets}")
    def test_matches_dense_unitary(self, rng, g):
        n = 3
        s = random_state(rng, n)
        got = apply_gate(s, g).amps
        want = embed_unitary(g, n) @ s.amps
        assert np.allclose(got, want, atol=1e-12)

    def test_rejects_out_of_range_target(self):
        with pytest.raises(InputError):
            apply_gate(init_state(2), H(3))

    def test_apply_gates_composes_in_order(self, rng):
        s = random_state(rng, 2)
        a = apply_gates(s, [H(1), CZ(1, 2), S(2)])
        b = apply_gate(apply_gate(apply_gate(s, H(1)), CZ(1, 2)), S(2))
        assert np.allclose(a.amps, b.amps)

    def test_j_is_h_times_rz(self, rng):
        alpha = 0.83
        s = random_state(rng, 1)
        via_j = apply_gate(s, J(1, alpha))
        via_hrz = apply_gates(s, [RZ(1, alpha), H(1)])
        assert fidelity(via_j, via_hrz) > 1 - 1e-12
        assert np.allclose(j_matrix(alpha), gate_matrix(H(1)) @ gate_matrix(RZ(1, alpha)))

    def test_crk_phase_on_11(self):
        s = apply_gate(init_state(2), CRK(2, 1, 2))
        want = np.array([0.5, 0.5, 0.5, 0.5 * 1j])
        assert np.allclose(s.amps, want)

    def test_cnot_control_target_order(self):
        s = init_state(2, "10")
        assert np.allclose(apply_gate(s, CNOT(1, 2)).amps, init_state(2, "11").amps)
        s = init_state(2, "01")
        assert np.allclose(apply_gate(s, CNOT(1, 2)).amps, init_state(2, "01").amps)


class TestInitState:
    def test_plus_all(self):
        s = init_state(2)
        assert np.allclose(s.amps, np.full(4, 0.5))

    def test_bit_label(self):
        s = init_state(3, "101")
        want = np.zeros(8)
        want[0b101] = 1.0
        assert np.allclose(s.amps, want)

    def test_bad_label_rejected(self):
        with pytest.raises(InputError):
            init_state(2, "012")


class TestMeasurement:
    def test_basis_kets_orthonormal(self, rng):
        for _ in range(25):
            theta, phi = rng.uniform(0, math.pi, size=2)
            b0, b1 = basis_kets(theta, phi)
            assert abs(np.vdot(b0, b0) - 1) < 1e-12
            assert abs(np.vdot(b1, b1) - 1) < 1e-12
            assert abs(np.vdot(b0, b1)) < 1e-12

    def test_planar_basis_convention(self):
        beta = 0.4
        b0, b1 = basis_kets(*planar_basis(beta))
        root = 1 / math.sqrt(2)
        assert np.allclose(b0, [root, root * np.exp(1j * beta)])
        assert np.allclose(b1, [root, -root * np.exp(1j * beta)])

    def test_probabilities_sum_to_one(self, rng):
        s = random_state(rng, 3)
        basis = (0.3, 1.1)
        _, p0, _ = project_measure(s, 2, basis, ("forced", 0))
        _, p1, _ = project_measure(s, 2, basis, ("forced", 1))
        assert p0 + p1 == pytest.approx(1.0, abs=1e-12)

    def test_reduced_state_is_normalized(self, rng):
        s = random_state(rng, 4)
        _, _, red = project_measure(s, 3, planar_basis(0.9), ("forced", 1))
        assert red.n == 3
        assert np.vdot(red.amps, red.amps).real == pytest.approx(1.0, abs=1e-12)

    def test_forced_zero_probability_branch_rejected(self):
        s = init_state(1, "0")
        with pytest.raises(InputError):
            project_measure(s, 1, (0.0, 0.0), ("forced", 1))

    def test_sampling_follows_born_rule(self):
        rng = np.random.default_rng(5)
        s = apply_gate(init_state(1, "0"), RX(1, 2 * math.asin(math.sqrt(0.25))))
        hits = sum(
            project_measure(s, 1, (0.0, 0.0), ("sample", rng))[0] for _ in range(4000)
        )
        assert abs(hits / 4000 - 0.25) < 0.03

    def test_unknown_mode_rejected(self, rng):
        with pytest.raises(InputError):
            project_measure(random_state(rng, 1), 1, (0.0, 0.0), ("maybe", 1))


class TestHelpers:
    def test_tensor_orders_first_factor_high(self):
        s = tensor(init_state(1, "1"), init_state(1, "0"))
        assert np.allclose(s.amps, init_state(2, "10").amps)

    def test_fidelity_ignores_global_phase(self, rng):
        s = random_state(rng, 2)
        t = PureState(2, s.amps * np.exp(0.3j))
        assert fidelity(s, t) == pytest.approx(1.0, abs=1e-12)

    def test_fidelity_size_mismatch(self, rng):
        with pytest.raises(InputError):
            fidelity(random_state(rng, 1), random_state(rng, 2))


class TestReferenceStates:
    def test_cluster_amplitudes(self):
        amps = cluster_state().amps
        want = np.zeros(16)
        want[0b0000] = want[0b0011] = want[0b1100] = 0.5
        want[0b1111] = -0.5
        assert np.allclose(amps, want)

    def test_cs_amplitudes(self):
        assert np.allclose(cs_state().amps, np.array([1, 1, 1, 1j]) / 2.0)

    def test_max_magic_bloch_vector(self):
        v = max_magic_qubit().amps
        paulis = [
            np.array([[0, 1], [1, 0]]),
            np.array([[0, -1j], [1j, 0]]),
            np.diag([1.0, -1.0]),
        ]
        bloch = np.array([np.vdot(v, p @ v).real for p in paulis])
        assert np.allclose(bloch, np.full(3, 1 / math.sqrt(3)), atol=1e-12)
