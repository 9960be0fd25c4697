"""Zero-integral periodic splines for circular densities in Bayes space."""

from .bayes import (
    ClrCurve,
    DensityCurve,
    Grid,
    bayes_inner,
    clr_inverse,
    clr_transform,
    functional_sd,
    perturb,
    power,
    sample_mean_clr,
)
from .circstats import CircularSample, stats_report, trig_moment, validate_circular_density
from .errors import (
    CircBayesError,
    ConfigError,
    InputError,
    NumericalError,
    RankDeficiencyError,
    SingularSystemError,
)
from .fosreg import RegressionDataset, bootstrap_bands, fit_fos, predict_clr
from .smoothfit import (
    FitProblem,
    PSplineConfig,
    SmoothingConfig,
    optimize_alpha,
    optimize_rho,
    solve_pspline,
    solve_smoothing,
)
from .splinecore import KnotConfig, PeriodicSplineZ

__version__ = "0.1.0"
