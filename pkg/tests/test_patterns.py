"""Graph states, measurement patterns, and the builtin constructions."""

import math

import numpy as np
import pytest

from mqcmagic import (
    CZ,
    CorrectionCommand,
    Graph,
    H,
    InputError,
    MeasurementCommand,
    Pattern,
    PureState,
    ResourceLimitError,
    apply_gate,
    apply_gates,
    build_graph_state,
    builtin,
    cluster_state,
    cs_state,
    enumerate_branches,
    fidelity,
    init_state,
    j_matrix,
    max_magic_qubit,
    meas_magic_general,
    pattern_from_dict,
    pattern_from_json,
    pattern_to_dict,
    pattern_to_json,
    run_pattern,
    sre,
    stabilizer_expectations,
    tensor,
)

from conftest import random_state


def path_graph(n):
    return Graph(n, frozenset((i, i + 1) for i in range(1, n)))


def simple_pattern():
    g = Graph(2, frozenset({(1, 2)}))
    cmds = (
        MeasurementCommand(1, "planar", math.pi / 4),
        CorrectionCommand(2, "X", frozenset({1})),
    )
    return Pattern(g, cmds, (2,))


class TestGraph:
    def test_edges_normalized(self):
        g = Graph(3, frozenset({(2, 1), (3, 2)}))
        assert g.edges == frozenset({(1, 2), (2, 3)})
        assert g.neighbors(2) == (1, 3)
        assert g.neighbors(1) == (2,)

    def test_self_loop_rejected(self):
        with pytest.raises(InputError):
            Graph(2, frozenset({(1, 1)}))

    def test_out_of_range_edge_rejected(self):
        with pytest.raises(InputError):
            Graph(2, frozenset({(1, 3)}))

    def test_duplicate_open_inputs_rejected(self):
        with pytest.raises(InputError):
            Graph(2, open_inputs=(1, 1))

    def test_open_input_out_of_range_rejected(self):
        with pytest.raises(InputError):
            Graph(2, open_inputs=(3,))


class TestCommandValidation:
    def test_planar_takes_single_angle(self):
        with pytest.raises(InputError):
            MeasurementCommand(1, "planar", 0.1, phi=0.2)

    def test_general_needs_both_angles(self):
        with pytest.raises(InputError):
            MeasurementCommand(1, "general", 0.1)

    def test_general_rejects_s_domain(self):
        with pytest.raises(InputError):
            MeasurementCommand(1, "general", 0.1, 0.2, s_domain=frozenset({1}))

    def test_unknown_kind_rejected(self):
        with pytest.raises(InputError):
            MeasurementCommand(1, "diagonal", 0.1)

    def test_nonfinite_angle_rejected(self):
        with pytest.raises(InputError):
            MeasurementCommand(1, "planar", float("nan"))

    def test_default_label(self):
        assert MeasurementCommand(3, "planar", 0.0).label == "M3"

    def test_correction_op_validated(self):
        with pytest.raises(InputError):
            CorrectionCommand(1, "S")


class TestPatternValidation:
    def test_double_measurement_rejected(self):
        g = Graph(2, frozenset({(1, 2)}))
        cmds = (
            MeasurementCommand(1, "planar", 0.0),
            MeasurementCommand(1, "planar", 0.0, label="again"),
        )
        with pytest.raises(InputError):
            Pattern(g, cmds, (2,))

    def test_forward_s_domain_rejected(self):
        g = Graph(2, frozenset({(1, 2)}))
        cmds = (MeasurementCommand(1, "planar", 0.0, s_domain=frozenset({2})),)
        with pytest.raises(InputError):
            Pattern(g, cmds, (2,))

    def test_correction_after_measurement_rejected(self):
        g = Graph(2, frozenset({(1, 2)}))
        cmds = (
            MeasurementCommand(1, "planar", 0.0),
            CorrectionCommand(1, "X", frozenset({1})),
        )
        with pytest.raises(InputError):
            Pattern(g, cmds, (2,))

    def test_output_must_match_unmeasured(self):
        g = Graph(2, frozenset({(1, 2)}))
        cmds = (MeasurementCommand(1, "planar", 0.0),)
        with pytest.raises(InputError):
            Pattern(g, cmds, (1,))
        with pytest.raises(InputError):
            Pattern(g, cmds, (1, 2))

    def test_initial_state_size_checked(self):
        g = Graph(2, frozenset({(1, 2)}))
        cmds = (MeasurementCommand(1, "planar", 0.0),)
        with pytest.raises(InputError):
            Pattern(g, cmds, (2,), initial_state=init_state(3))

    def test_initial_state_excludes_open_inputs(self):
        g = Graph(2, frozenset({(1, 2)}), open_inputs=(1,))
        cmds = (MeasurementCommand(1, "planar", 0.0),)
        with pytest.raises(InputError):
            Pattern(g, cmds, (2,), initial_state=init_state(2))

    def test_command_accessors(self):
        p = simple_pattern()
        assert len(p.measurements) == 1
        assert len(p.corrections) == 1


class TestBuildGraphState:
    def test_two_path_amplitudes(self):
        s = build_graph_state(Graph(2, frozenset({(1, 2)})))
        assert np.allclose(s.amps, np.array([1, 1, 1, -1]) / 2.0)

    def test_stabilizers_plus_one(self, rng):
        for _ in range(5):
            n = int(rng.integers(2, 6))
            edges = frozenset(
                (a, b)
                for a in range(1, n + 1)
                for b in range(a + 1, n + 1)
                if rng.uniform() < 0.5
            )
            g = Graph(n, edges)
            vals = stabilizer_expectations(g, build_graph_state(g))
            assert np.allclose(vals, 1.0, atol=1e-10)

    def test_input_placement_matches_manual_tensor(self, rng):
        psi = random_state(rng, 1)
        g = Graph(3, frozenset({(1, 2), (2, 3)}), open_inputs=(2,))
        got = build_graph_state(g, psi)
        plus = init_state(1)
        want = PureState(3, np.kron(plus.amps, np.kron(psi.amps, plus.amps)))
        want = apply_gates(want, [CZ(1, 2), CZ(2, 3)])
        assert np.allclose(got.amps, want.amps)

    def test_input_order_follows_open_inputs(self, rng):
        psi = random_state(rng, 1)
        phi = random_state(rng, 1)
        g = Graph(3, frozenset(), open_inputs=(3, 1))
        got = build_graph_state(g, tensor(psi, phi))
        want = np.kron(phi.amps, np.kron(init_state(1).amps, psi.amps))
        assert np.allclose(got.amps, want)

    def test_input_size_mismatch_rejected(self, rng):
        g = Graph(3, frozenset(), open_inputs=(1,))
        with pytest.raises(InputError):
            build_graph_state(g, random_state(rng, 2))

    def test_box_ring_is_cluster_in_hadamard_frame(self):
        g = Graph(4, frozenset({(1, 3), (2, 3), (2, 4), (1, 4)}))
        s = apply_gates(build_graph_state(g), [H(q) for q in (1, 2, 3, 4)])
        assert fidelity(s, cluster_state()) == pytest.approx(1.0, abs=1e-12)

    def test_star_is_ghz_in_leaf_hadamard_frame(self):
        g = Graph(3, frozenset({(1, 2), (1, 3)}))
        s = apply_gates(build_graph_state(g), [H(2), H(3)])
        ghz = np.zeros(8, dtype=np.complex128)
        ghz[0] = ghz[7] = 1.0 / math.sqrt(2.0)
        assert fidelity(s, PureState(3, ghz)) == pytest.approx(1.0, abs=1e-12)


class TestRunPolicies:
    def test_sample_requires_rng(self):
        with pytest.raises(InputError):
            run_pattern(simple_pattern(), policy="sample")

    def test_sample_is_seed_deterministic(self):
        a = run_pattern(simple_pattern(), rng=np.random.default_rng(7))
        b = run_pattern(simple_pattern(), rng=np.random.default_rng(7))
        assert a.outcomes == b.outcomes
        assert np.array_equal(a.final_state.amps, b.final_state.amps)

    def test_forced_and_branch_agree(self):
        p = simple_pattern()
        for bits in ((0,), (1,)):
            a = run_pattern(p, policy="forced", outcomes=bits)
            b = run_pattern(p, policy="branch", outcomes=bits)
            assert a.outcomes == b.outcomes == bits
            assert np.array_equal(a.final_state.amps, b.final_state.amps)

    def test_forced_outcome_vector_validated(self):
        p = simple_pattern()
        with pytest.raises(InputError):
            run_pattern(p, policy="forced", outcomes=(0, 1))
        with pytest.raises(InputError):
            run_pattern(p, policy="forced", outcomes=(2,))
        with pytest.raises(InputError):
            run_pattern(p, policy="forced")

    def test_unknown_policy_rejected(self):
        with pytest.raises(InputError):
            run_pattern(simple_pattern(), policy="greedy", outcomes=(0,))

    def test_zero_probability_branch_rejected(self):
        g = Graph(1, frozenset(), open_inputs=(1,))
        p = Pattern(g, (MeasurementCommand(1, "general", 0.0, 0.0),), ())
        with pytest.raises(InputError):
            run_pattern(p, input=init_state(1, "0"), policy="forced", outcomes=(1,))

    def test_input_forbidden_with_explicit_amplitudes(self):
        p = builtin("t_state_1d")
        with pytest.raises(InputError):
            run_pattern(p, input=init_state(4), policy="branch", outcomes=(0, 0, 0))

    def test_trace_disabled_leaves_empty_traces(self):
        r = run_pattern(simple_pattern(), policy="branch", outcomes=(0,), trace=False)
        assert r.reserved_trace == ()
        assert r.correction_trace == ()


class TestEnumerateBranches:
    def test_probabilities_sum_to_one(self):
        runs = enumerate_branches(simple_pattern())
        assert len(runs) == 2
        assert sum(r.branch_prob for r in runs) == pytest.approx(1.0, abs=1e-12)

    def test_bit_order_is_msb_first(self):
        p = builtin("t_state_1d")
        runs = enumerate_branches(p)
        assert runs[4].outcomes == (1, 0, 0)
        assert runs[1].outcomes == (0, 0, 1)

    def test_thread_count_does_not_change_results(self):
        a = enumerate_branches(builtin("cs_box"), threads=1)
        b = enumerate_branches(builtin("cs_box"), threads=4)
        for ra, rb in zip(a, b):
            assert ra.outcomes == rb.outcomes
            assert ra.branch_prob == rb.branch_prob
            assert np.array_equal(ra.final_state.amps, rb.final_state.amps)

    def test_measurement_count_limit(self):
        n = 13
        g = Graph(n, frozenset())
        cmds = tuple(MeasurementCommand(q, "planar", 0.0) for q in range(1, n + 1))
        p = Pattern(g, cmds, ())
        with pytest.raises(ResourceLimitError):
            enumerate_branches(p)


class TestJPattern:
    def test_implements_j_gate_on_every_branch(self, rng):
        for _ in range(10):
            alpha = float(rng.uniform(-math.pi, math.pi))
            psi = random_state(rng, 1)
            want = PureState(1, j_matrix(alpha) @ psi.amps)
            p = builtin("j_pattern", alpha=alpha)
            for bits in ((0,), (1,)):
                r = run_pattern(p, input=psi, policy="branch", outcomes=bits)
                assert fidelity(r.final_state, want) >= 1.0 - 1e-10

    def test_branch_probabilities_are_half(self, rng):
        p = builtin("j_pattern", alpha=0.3)
        runs = enumerate_branches(p, input=random_state(rng, 1))
        assert [r.branch_prob for r in runs] == pytest.approx([0.5, 0.5], abs=1e-12)


class TestRotationPattern:
    def test_implements_zxz_rotation_on_all_branches(self, rng):
        alpha, beta, gamma = rng.uniform(-math.pi, math.pi, size=3)
        u = j_matrix(0.0) @ j_matrix(-alpha) @ j_matrix(-beta) @ j_matrix(-gamma)
        psi = random_state(rng, 1)
        want = PureState(1, u @ psi.amps)
        p = builtin("rotation_pattern", alpha=float(alpha), beta=float(beta), gamma=float(gamma))
        runs = enumerate_branches(p, input=psi)
        assert len(runs) == 16
        for r in runs:
            assert fidelity(r.final_state, want) >= 1.0 - 1e-10


class TestTState1d:
    def test_branch_statistics_and_traces(self):
        runs = enumerate_branches(builtin("t_state_1d"))
        assert len(runs) == 8
        want_bits = (0.0, 0.3625700793847084, 0.5849625007211567)
        for r in runs:
            assert r.branch_prob == pytest.approx(0.125, abs=1e-12)
            got = [v.bits for v in r.reserved_trace]
            assert got == pytest.approx(want_bits, abs=1e-9)

    def test_final_magic_is_one_t_unit(self):
        for r in enumerate_branches(builtin("t_state_1d")):
            assert sre(r.final_state, 2).t_units == pytest.approx(1.0, abs=1e-9)

    def test_reserved_second_step_in_t_units(self):
        r = run_pattern(builtin("t_state_1d"), policy="branch", outcomes=(0, 0, 0))
        assert r.reserved_trace[1].t_units == pytest.approx(0.6198176446143524, abs=1e-12)

    def test_branch_sectors(self):
        # The first outcome splits the branches between the maximal-magic
        # state and its Bloch antipode; no Pauli fixup can merge the two
        # sectors, so fid0 records the split honestly.
        runs = enumerate_branches(builtin("t_state_1d"))
        assert [round(r.fid0, 12) for r in runs] == [1, 1, 1, 1, 0, 0, 0, 0]
        target = max_magic_qubit()
        for r in runs:
            want = 1.0 if r.outcomes[0] == 0 else 0.0
            assert fidelity(r.final_state, target) == pytest.approx(want, abs=1e-9)

    def test_correction_trace_is_flat(self):
        r = run_pattern(builtin("t_state_1d"), policy="branch", outcomes=(1, 1, 0))
        assert len(r.correction_trace) == 2
        for v in r.correction_trace:
            assert v.t_units == pytest.approx(1.0, abs=1e-9)


class TestCsBox:
    def test_every_branch_delivers_cs(self):
        runs = enumerate_branches(builtin("cs_box"))
        assert len(runs) == 4
        for r in runs:
            assert r.branch_prob == pytest.approx(0.25, abs=1e-12)
            assert fidelity(r.final_state, cs_state()) >= 1.0 - 1e-10
            assert r.fid0 == pytest.approx(1.0, abs=1e-10)

    def test_reserved_trace(self):
        r = run_pattern(builtin("cs_box"), policy="branch", outcomes=(0, 0))
        got = [v.t_units for v in r.reserved_trace]
        assert got == pytest.approx([0.0, 0.7095112913514572], abs=1e-12)

    def test_correction_trace_charges_t_gates(self):
        r = run_pattern(builtin("cs_box"), policy="branch", outcomes=(0, 0))
        got = [v.t_units for v in r.correction_trace]
        want = [0.7095112913514572] * 4 + [
            1.4190225827029115,
            2.0388402273172637,
            2.0388402273172637,
        ]
        assert got == pytest.approx(want, abs=1e-9)

    def test_graph_records_box_ring(self):
        p = builtin("cs_box")
        assert p.graph.edges == frozenset({(1, 2), (2, 3), (3, 4), (1, 4)})


class TestArbitraryPrep:
    def test_branch_magic_matches_target(self, rng):
        for _ in range(6):
            theta = float(rng.uniform(0.1, math.pi / 2 - 0.1))
            phi = float(rng.uniform(-math.pi, math.pi))
            p = builtin("arbitrary_prep", theta=theta, phi=phi)
            want = meas_magic_general(theta, phi).bits
            for r in enumerate_branches(p):
                assert sre(r.final_state, 2).bits == pytest.approx(want, abs=1e-9)


class TestBuiltins:
    def test_unknown_name_rejected(self):
        with pytest.raises(InputError):
            builtin("bell_pair")

    def test_bad_parameters_rejected(self):
        with pytest.raises(InputError):
            builtin("j_pattern", gamma=0.1)


class TestSerialization:
    def test_round_trip_preserves_pattern(self):
        for name, params in (
            ("j_pattern", {"alpha": 0.3}),
            ("rotation_pattern", {"alpha": 0.1, "beta": -0.2, "gamma": 0.4}),
            ("t_state_1d", {}),
            ("cs_box", {}),
        ):
            p = builtin(name, **params)
            assert pattern_from_dict(pattern_to_dict(p)) == p

    def test_json_round_trip_is_byte_stable(self):
        text = pattern_to_json(builtin("cs_box"))
        assert pattern_to_json(pattern_from_json(text)) == text

    def test_round_trip_run_agrees(self):
        p = builtin("t_state_1d")
        q = pattern_from_json(pattern_to_json(p))
        a = run_pattern(p, policy="branch", outcomes=(1, 0, 1))
        b = run_pattern(q, policy="branch", outcomes=(1, 0, 1))
        assert np.array_equal(a.final_state.amps, b.final_state.amps)

    def test_malformed_json_rejected(self):
        with pytest.raises(InputError):
            pattern_from_json("{not json")

    def test_missing_keys_rejected(self):
        with pytest.raises(InputError):
            pattern_from_dict({"graph": {"n": 2, "edges": []}})
        with pytest.raises(InputError):
            pattern_from_dict(
                {
                    "graph": {"n": 1, "edges": []},
                    "commands": [{"type": "M", "qubit": 1}],
                    "output": [],
                }
            )

    def test_unknown_command_type_rejected(self):
        with pytest.raises(InputError):
            pattern_from_dict(
                {
                    "graph": {"n": 1, "edges": []},
                    "commands": [{"type": "K", "qubit": 1}],
                    "output": [1],
                }
            )
