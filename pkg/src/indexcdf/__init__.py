"""Conditional distribution estimation through a fitted single index.

The library approximates the conditional law of a scalar response Y given a
d-dimensional covariate X by the law of Y given a single linear index.  The
index direction is chosen to minimise a leave-two-out least-squares criterion
built from sphere-averaged conditional CDF estimates; the fitted index then
feeds kernel conditional-CDF estimators and quantile prediction intervals.
"""

from .data import (
    Dataset,
    ScalingParams,
    embed_time_series,
    load_csv,
    load_series,
    standardize,
)
from .kernels import Kernel, epanechnikov, EPANECHNIKOV, get_kernel
from .directions import Direction, canonicalize
from .local_linear import (
    CdfEstimate,
    LocalLinearWeights,
    loo2_cdf,
    loo2_cdf_matrix,
    local_linear_cdf,
    local_linear_cdf_at,
    moment_sums,
)
from .criterion import (
    CriterionValue,
    Sphere,
    SphereSet,
    criterion_sphere,
    criterion_total,
    empirical_joint,
    make_data_spheres,
    make_sphere_grid,
    sphere_contains,
)
from .optimize import SimplexOptions, ThetaFit, fit_theta, nelder_mead_minimize
from .bandwidth import (
    BandwidthGrid,
    LinearFit,
    bootstrap_sample,
    geometric_grid,
    ols_fit,
    select_h,
    select_H,
)
from .anw import (
    AnwWeights,
    PredictionInterval,
    anw_cdf,
    anw_weights,
    prediction_interval,
    quantile,
)
from .simulate import StudyConfig, StudyReport, gen_example1, gen_example2, run_study

__version__ = "0.1.0"
