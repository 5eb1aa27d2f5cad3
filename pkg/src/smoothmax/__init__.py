"""Expected number of maxima of n points drawn from B_p + δB_q."""

from .geometry import PNorm, ball_polygon, clip_convex, lens_height, lp_norm, support_contains, unit_ball_area
from .sampling import SeedSpec, SmoothedDist, sample_ball, sample_set, sample_smoothed
from .maxima import MaximaResult, count_maxima, maximal_points, maximal_points_bruteforce
from .density import (
    density_b1b2,
    density_b2b2,
    density_binfq,
    density_numeric,
    measure_mc,
    measure_sector_b2b2,
    measure_t_b1b1,
)
from .theory import (
    RegimePrediction,
    WitnessSet,
    harmonic_number,
    predicted_growth,
    verify_witness,
    witness_b1b1,
    witness_b2b2,
    witness_binfq,
)
from .harness import (
    ExperimentConfig,
    ExperimentRecord,
    ExponentFitter,
    FitResult,
    compare_to_theory,
    delta_sweep,
    emit_report,
    fit_exponent,
    run_cell,
)

__version__ = "0.1.0"
