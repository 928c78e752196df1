"""mqcmagic: magic-resource accounting for measurement-based quantum computation.

Dense few-qubit simulation, measurement-pattern execution, J-gate compilation
with invested-magic bookkeeping, QFT resource profiles, potential-magic search,
and a few-shot randomized-measurement estimator of the 2-Renyi magic.
"""

from ._backend import backend_name
from .accounting import (
    PotentialResult,
    ResourceReport,
    compare_arbitrary_vs_standard,
    ledger,
    measurement_layers,
    potential_search,
    report_to_csv,
    report_to_json,
)
from .compiler import (
    Circuit,
    InvestedReport,
    JSequence,
    apply_circuit,
    circuit_from_dict,
    circuit_from_json,
    circuit_to_dict,
    circuit_to_json,
    circuit_to_pattern,
    circuit_unitary,
    euler_zxz,
    invested_magic,
    j_decompose,
)
from .estimator import (
    MAX_SHOTS_PER_BASIS,
    TUPLE_CAP,
    EstimateResult,
    ScalingResult,
    ShotRecord,
    bootstrap_stderr,
    estimate_m2,
    estimate_m2_analytic,
    estimate_to_json,
    sample_shots,
    scaling_study,
    shots_from_csv,
    shots_to_csv,
)
from .magic import (
    TUNIT,
    MagicValue,
    PauliString,
    SpectrumVector,
    m2_mixed,
    magic_value,
    meas_magic,
    meas_magic_general,
    nullity,
    pauli_expectation,
    pauli_spectrum,
    sre,
)
from .patterns import (
    MAX_BRANCH_MEASUREMENTS,
    THETA_M,
    CorrectionCommand,
    Graph,
    MeasurementCommand,
    Pattern,
    PatternRun,
    build_graph_state,
    builtin,
    enumerate_branches,
    pattern_from_dict,
    pattern_from_json,
    pattern_to_dict,
    pattern_to_json,
    run_pattern,
    stabilizer_expectations,
)
from .qft import (
    FitResult,
    QftProfile,
    build_qft,
    fidelity_table,
    imr_crk,
    qft_profile,
    qft_total,
    scaling_fit,
    truncation_fidelity,
)
from .states import (
    CNOT,
    CRK,
    CZ,
    Gate,
    H,
    J,
    MixedState,
    PureState,
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
from .util import EstimatorFailure, InputError, ResourceLimitError

__version__ = "0.1.0"
