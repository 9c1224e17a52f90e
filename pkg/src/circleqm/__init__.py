"""Angular-momentum bookkeeping for measurements on a cyclic lattice.

Simulates a particle on a circle, the preparer that put it into superposition
and optionally the preparer's own preparer and a meter. Tracks total angular
momentum conditional on each measurement outcome.
"""

__version__ = "0.1.0"

from .lattice import (  # noqa: E402
    GRAND_PREPARER,
    METER,
    PREPARER,
    SYSTEM,
    CompositeState,
    DensityOperator,
    Label,
    ModeWavefunction,
    Role,
    WrapError,
    WrapWarning,
    basis_state,
    entanglement_entropy,
    fidelity_to,
    marginal_distribution,
    mutual_information,
    reduced_density,
    superposition,
    tensor,
    total_L_distribution,
    uniform_state,
    uniform_width,
)
from .representations import (  # noqa: E402
    AngleWavefunction,
    frame_factorization_residual,
    joint_angle_amplitudes,
    rotate,
    to_angle,
    to_momentum,
)
from .interactions import (  # noqa: E402
    PointerCouple,
    ShiftPrepare,
    Swap,
    apply_chain,
    pointer_couple,
    shift_prepare,
    swap_states,
    unitary_matrix,
    verify_conserves_total_L,
    verify_unitary,
)
from .measurement import OutcomeRecord, outcome_table, sample_counts, sample_outcome  # noqa: E402
from .conservation import (  # noqa: E402
    ChainReport,
    ConservationLedger,
    branch_mean_offsets,
    build_ledger,
    chain_report,
    meter_untouched_check,
    offset_differences,
    table1_oracle,
)
