"""Two-level processor sharing queues with hyper-exponential job sizes."""
from .analytic import (
    SojournBreakdown,
    conditional_sojourn,
    nphase_sojourn_linear,
    nphase_sojourn_series,
    ps_sojourn,
    sojourn,
    two_phase_sojourn,
    upper_bound,
    volterra_alpha,
)
from .errors import (
    DegenerateThresholdError,
    GridTooCoarseError,
    InvalidModelError,
    SimulationBugError,
    TlpsError,
    UnstableModelError,
)
from .expmix import ExpMixture, laplace_at, lemma2_gap, phi1_const, phi2, phi2_phi1
from .hyperexp import (
    HyperExp,
    TlpsModel,
    TruncatedStats,
    heavy_tail_family,
    make_hyperexp,
    moments,
    truncated_ccdf,
    truncated_stats,
)
from .threshold import (
    approx_derivative,
    approx_threshold,
    bound_gap,
    bound_gap_curve,
    epsilon_family,
    gain_curve,
    limit_sojourn,
    optimize_threshold,
    gain,
    table1_row,
    two_phase_constants,
)
from .simulate import SimConfig, SimResult, busy_period_check, run, run_replication

__version__ = "0.1.0"
