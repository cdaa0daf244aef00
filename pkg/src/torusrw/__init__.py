"""Cover times, vacant sets and interlacements of the torus walk.

Simulation and numerical verification toolkit for the continuous-time
simple random walk on (Z/NZ)^d: exact lattice potential theory (Green
function, capacities, equilibrium measures), cover-time statistics against
the Gumbel limit, local sampling of random interlacements, and
quasistationary spectral analysis of the walk conditioned to avoid a set.
"""

from .lattice import BoxSpec, SiteSet, TorusGeometry, box_sites_zd, concentric_radii, separation
from .rng import RngStream
from .walk import (
    ExcursionRecord,
    HitRecord,
    HittingResult,
    HorizonExceededError,
    default_horizon,
    excursions,
    hitting_time,
    run_bounded,
    run_cover,
)
from .potential import (
    G0_D3_REFERENCE,
    EquilibriumReport,
    GreenTable,
    equilibrium_measure,
    green,
    hit_prob_far_bound,
)
from .interlacement import (
    AdditivityReport,
    InterlacementSample,
    LabeledBatch,
    TruncationPolicy,
    VacancyBatch,
    additivity_check,
    read_samples_jsonl,
    sample_batch,
    sample_interlacement,
    sample_labeled,
    two_point_sum,
    vacancy_one,
    vacancy_two,
    write_samples_jsonl,
)
from .spectral import (
    ConditionedKernel,
    HittingComparison,
    QuasistationaryResult,
    TvDecayReport,
    build_kernel,
    conditioned_distribution,
    dense_eigenpairs,
    hitting_from_sigma,
    quasistationary,
    sigma_to_csv,
    tv_decay,
)
from .experiments import (
    ExcursionReport,
    ExperimentConfig,
    GumbelFit,
    HittingTimeReport,
    LastKReport,
    LastPointsReport,
    LatePointReport,
    VacancyTorusReport,
    g0_for,
    gumbel_mean,
    gumbel_variance,
    run_excursion_calibration,
    run_gumbel,
    run_hitting_time_check,
    run_last_k_separation,
    run_last_points,
    run_late_points,
    vacancy_experiment,
)

__version__ = "0.1.0"
