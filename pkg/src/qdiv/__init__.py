"""Numerical toolkit for induced quantum divergences and one-shot bounds."""

from .linalg import (
    DEFAULT_DIM_CAP,
    HERM_TOL,
    PSD_TOL,
    RECON_TOL,
    TRACE_TOL,
    DensityOperator,
    HermitianOperator,
    PositiveOperator,
    SpectralDecomposition,
    SupportProjector,
    ValidationError,
    eig_hermitian,
    fidelity_and_purified,
    mat_fn,
    op_meet,
    partial_trace,
    permute_systems,
    positive_part_trace,
    support_projector,
    tensor,
    trace_distance,
)
from .states import (
    Channel,
    CqState,
    PairwiseFamily,
    basis_state,
    channel,
    classical_channel,
    cq_state,
    load_channel,
    load_state,
    maximally_entangled,
    maximally_mixed,
    pairwise_tensor_family,
    purify,
    random_density,
    save_channel,
    save_state,
)
from .divergences import (
    DirectSumReport,
    DivergenceValue,
    NeymanPearsonTest,
    check_direct_sum,
    d_alpha,
    d_hypothesis,
    d_max,
    d_min,
    d_tilde_max,
    d_umegaki,
    pinched_measured_lower_bound,
    q_alpha,
)
from .induced import (
    BlockReport,
    InducedResult,
    ParentDivergence,
    induced,
    induced_block_property,
    induced_max_closed,
    induced_min_closed,
    induced_renyi,
)
from .info import (
    ChannelMutualInfo,
    CondMutualInfo,
    InducedMutualInfo,
    MutualInfoResult,
    SmoothedResult,
    channel_mutual_info,
    cond_mutual_info,
    induced_mutual_info_2,
    mutual_info,
    smoothed_mutual_info_2,
)
from .protocols import (
    CommBound,
    ConvexSplitReport,
    DecodingReport,
    EqsrBound,
    ExpurgationReport,
    InfeasibleError,
    Povm,
    brute_force_tc,
    convex_split_check,
    distill_lower_bound,
    eqsr_cost_bound,
    eqsr_feasibility,
    expurgate_check,
    pbd_simulate,
    pgm,
    tc_upper,
)

__version__ = "0.1.0"
