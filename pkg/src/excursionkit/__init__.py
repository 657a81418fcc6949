"""Volume and surface estimation for excursion sets of smooth random fields.

The package samples isotropic Gaussian and chi-square fields, thresholds them
on polytopic honeycombs (hypercubic, hexagonal, Poisson-Voronoi), and studies
the surface-area estimator built from facet crossings: its dimension-dependent
multiplicative bias 2d/beta_d, the corrected estimator, two-point crossing
rates, random-line boundary measures, and joint fluctuation scaling.
"""

from .densities import (
    CovarianceModel,
    ReferenceDensities,
    beta_d,
    bias_factor,
    chisq_surface_density,
    chisq_volume_density,
    gaussian_l1_limit,
    gaussian_surface_density,
    gaussian_volume_density,
)
from .tessellation import (
    Box,
    FacetSet,
    Honeycomb,
    WindowedHoneycomb,
    facet_normality_violation,
    hexagonal_honeycomb,
    honeycomb_edge_csv,
    hypercubic_honeycomb,
    pyramid_identity_sum,
    voronoi_honeycomb_2d,
)
from .sampling import (
    CovarianceNotPositiveDefiniteError,
    EmbeddingNotNonnegativeDefiniteError,
    FieldSample,
    GridSpec,
    PointCapacityError,
    sample_chi_square,
    sample_gaussian_grid,
    sample_gaussian_points,
    sample_poisson_process,
)
from .estimators import (
    CrossingRateResult,
    EstimateReport,
    ExcursionIndicator,
    corrected_surface,
    crossing_frequency,
    crossing_rate_surface,
    exceedance_indicator,
    first_order_surface_from_crossing,
    hypercubic_surface_fast,
    make_report,
    surface_estimate,
    volume_estimate,
)
from .crofton import (
    CroftonEstimate,
    LevelPolyline,
    circle_shape,
    crofton_measure_mc,
    extract_level_polyline_2d,
    l1_weighted_length,
    sphere_l1_average,
    square_shape,
)
from .campaigns import (
    CampaignConfig,
    ConfigError,
    McCampaignResult,
    default_config,
    run_bias_sweep,
    run_campaign,
    run_clt,
    run_crofton_demo,
    run_crossing_convergence,
    run_volume_check,
    validate_config,
)

__version__ = "0.1.0"

__all__ = [
    "Box",
    "CampaignConfig",
    "ConfigError",
    "CovarianceModel",
    "CovarianceNotPositiveDefiniteError",
    "CroftonEstimate",
    "CrossingRateResult",
    "EmbeddingNotNonnegativeDefiniteError",
    "EstimateReport",
    "ExcursionIndicator",
    "FacetSet",
    "FieldSample",
    "GridSpec",
    "Honeycomb",
    "LevelPolyline",
    "McCampaignResult",
    "PointCapacityError",
    "ReferenceDensities",
    "WindowedHoneycomb",
    "beta_d",
    "bias_factor",
    "chisq_surface_density",
    "chisq_volume_density",
    "circle_shape",
    "corrected_surface",
    "crofton_measure_mc",
    "crossing_frequency",
    "crossing_rate_surface",
    "default_config",
    "exceedance_indicator",
    "extract_level_polyline_2d",
    "facet_normality_violation",
    "first_order_surface_from_crossing",
    "gaussian_l1_limit",
    "gaussian_surface_density",
    "gaussian_volume_density",
    "hexagonal_honeycomb",
    "honeycomb_edge_csv",
    "hypercubic_honeycomb",
    "hypercubic_surface_fast",
    "l1_weighted_length",
    "make_report",
    "pyramid_identity_sum",
    "run_bias_sweep",
    "run_campaign",
    "run_clt",
    "run_crofton_demo",
    "run_crossing_convergence",
    "run_volume_check",
    "sample_chi_square",
    "sample_gaussian_grid",
    "sample_gaussian_points",
    "sample_poisson_process",
    "sphere_l1_average",
    "square_shape",
    "surface_estimate",
    "validate_config",
    "volume_estimate",
    "__version__",
]
