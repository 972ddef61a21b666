"""Arbitrary-order Wightman, CTOC and OTOC correlations of small spin systems,
with numerical checks of the constraints imposed by generalized C, T and S
symmetries."""

from .contour import (
    EtaVector,
    Permutation,
    enumerate_ranks,
    expand_ctoc,
    predict_rank_delta,
    rank,
    reverse_sigma,
    s_transform_label,
    t_transform_label,
)
from .correlations import (
    CorrelationEngine,
    CtocSpec,
    SweepTemplate,
    WightmanSpec,
    apply_super,
    ctoc_direct,
    ctoc_via_expansion,
    sweep,
    wightman,
)
from .operators import (
    DensityMatrix,
    QuantumOperator,
    build_tfim,
    collective_z,
    heisenberg_evolve,
    pauli_string,
    product_state_C,
    thermal_state,
)
from .symmetry import (
    SymmetryTransform,
    check_symmetry,
    compose_S,
    observable_parity,
    selection_rule,
    verify_theorem1,
    verify_theorem2,
    verify_theorem3,
)

__version__ = "0.1.0"
