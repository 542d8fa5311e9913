"""Lost-in-space star identification toolkit.

Six identification methods (Angle, Interior Angle, Spherical Triangle,
Planar Triangle, Pyramid, Composite Pyramid) run against indexed feature
catalogs built from a bright-star table, with a synthetic-sky harness for
accuracy and catalog-access benchmarking.
"""

from .benchmark import (
    GAUSSIAN_RHO_GRID,
    SPIKE_OMEGA_GRID,
    TrialRecord,
    TrendFit,
    fit_trend,
    make_trial_image,
    run_end_to_end,
    run_pivot_experiment,
    run_query_experiment,
    run_trial,
    run_verification_ablation,
    tune_sigma,
    z_test,
)
from .catalog import (
    CatalogError,
    CatalogStar,
    CatalogStore,
    build_pair_catalog,
    build_store,
    build_trio_catalog,
    build_trio_permutation_catalog,
    parse_source,
)
from .features import planar_features, spherical_features
from .geometry import (
    DegenerateGeometryError,
    angular_separation,
    find_positive_overlay,
    interior_angle,
    spherical_to_cartesian,
    triad,
    wahba_loss,
)
from .identification import (
    METHOD_TAGS,
    IdentificationResult,
    MethodConfig,
    default_config,
    identify,
    query_step,
)
from .synthesis import (
    SPIKE_LABEL,
    SyntheticImage,
    add_spikes,
    apply_gaussian_noise,
    generate_image,
    load_image,
    save_image,
)

__version__ = "0.1.0"
