"""Geographically weighted canonical correlation analysis.

Local canonical correlations and loadings between two multivariate
variable sets, estimated at every observation location through spatial
kernel weighting, with residual-goodness-of-fit bandwidth selection
(early-stopped), spatial-stability screening of canonical variates,
synthetic ground-truth generators and an evaluation harness against the
stationary global model.
"""

__version__ = "0.1.0"

from .cca import (  # noqa: F401
    CCASolution,
    LocalCCAResult,
    canonical_scores,
    fit_all_locations,
    global_cca,
    local_cca,
    solve_cca,
)
from .dataset import SpatialDataset  # noqa: F401
from .errors import (  # noqa: F401
    CapacityError,
    ConfigurationError,
    DegenerateFitError,
    DegenerateNeighborhoodError,
    DegenerateVarianceError,
    GwccaError,
    InputError,
    NumericalError,
    ParameterError,
    SchemaError,
    ValidityError,
)
from .evaluation import EvalReport, compare_models, mae, rmse  # noqa: F401
from .kernels import (  # noqa: F401
    FAMILIES,
    KernelSpec,
    WeightVector,
    adaptive_bandwidth,
    kernel_weight,
    pairwise_distances,
    weight_vector,
)
from .moments import (  # noqa: F401
    LocalCovariances,
    gw_corr,
    gw_cov,
    gw_cov_matrices,
    gw_mean,
    gw_std,
)
from .pipeline import (  # noqa: F401
    CsvSchema,
    FitConfig,
    FitResult,
    GridSpec,
    SummaryTable,
    collinearity_filter,
    export,
    fit,
    load_csv,
    preprocess,
    summarize,
    zscore,
)
from .selection import (  # noqa: F401
    ScanRecord,
    SelectionConfig,
    early_stop_scan,
    early_stop_trace,
    loading_threshold,
    rgof,
    screen_variates,
    select_reportable,
    support_ratio,
)
from .synth import (  # noqa: F401
    SynthParams1,
    SynthParams2,
    SyntheticTruth,
    cross_cov,
    generate_dataset1,
    generate_dataset2,
    joint_covariance,
    make_directions,
    sample_grf,
    sample_location,
)
