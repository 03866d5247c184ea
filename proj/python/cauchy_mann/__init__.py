"""Mann-Maz'ya iteration for elliptic Cauchy problems."""

from ._core import (
    AffineOperator,
    BenchmarkProblem,
    CauchyError,
    CauchyOperator,
    Domain,
    Grid,
    Segment,
    SpectralOperator,
    annulus_benchmark,
    appendix_f,
    appendix_g,
    appendix_h,
    default_config,
    log_e_over_gap,
    log_source_filter,
    mann_mazya_run,
    normalize_config,
    perturb_affine_term,
    rectangle_benchmark,
    run_experiment,
    segmenting_matrix,
    sha256_file,
    source_element,
    strip_eigenvalue,
    strip_gap,
)

__version__ = "0.1.0"
