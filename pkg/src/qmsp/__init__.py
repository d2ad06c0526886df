"""qmsp: randomness and structure of measured qubit processes.

Finite-state qubit sources composed with projective measurements yield
classical stochastic processes; this package quantifies their entropy rate
and the structure of their predictive-state sets by iterating the observer's
belief dynamics on the state simplex.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: F401
    DegenerateCloud,
    DimensionMismatch,
    EmptySpectrum,
    LMaxTooLarge,
    MachineError,
    NegativeEntry,
    NoConvergence,
    NonStochasticRow,
    NotUnifilar,
    Reducible,
    ZeroProbabilitySymbol,
    ZeroProbabilityWord,
)
from .hmm import (  # noqa: F401
    BlockEntropyEstimate,
    LabeledHMM,
    block_entropy_estimate,
    entropy_rate_unifilar,
    is_unifilar,
    sample_sequence,
    shannon_entropy_bits,
    stationary_distribution,
    statistical_complexity,
    unifilarity_witness,
    validate,
)
from .machine_io import load_machine, machine_from_dict, save_machine  # noqa: F401
from .quantum import (  # noqa: F401
    ProjectiveMeasurement,
    PureQubit,
    QubitHMM,
    basis_vectors,
    born_probabilities,
    measure_machine,
)
from .mixed_state import (  # noqa: F401
    EnumerationBudgetExceeded,
    MixedStatePresentation,
    TrajectoryEstimate,
    embed_points,
    enumerate_msp,
    iterate_trajectory,
    mixed_state_of_word,
    msp_tolerance_sweep,
    propagate,
    symbol_distribution,
    tangent_basis,
    write_point_cloud,
)
from .dimension import (  # noqa: F401
    BoxCountResult,
    DimensionReport,
    LceEstimate,
    box_counting_dimension,
    dimension_report,
    ifs_jacobian,
    lce_spectrum,
    lyapunov_dimension,
    open_set_overlap_flag,
)
from .sweep import RunConfig, SweepRow, angle_grid, angle_seed, run_sweep  # noqa: F401
