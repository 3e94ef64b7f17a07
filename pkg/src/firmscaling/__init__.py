"""Growth-rate fluctuation scaling for firm panels.

Pipeline: load or synthesise a :class:`FirmPanel`, extract one-year growth
observations, bin them by initial size, and fit the power law
``sigma(S0) = a * S0**-beta`` on log-log axes.
"""
from .estimators import ConditionalLaplace, MovingWindowScaling, PowerLawScaling
from .exceptions import DegenerateFitError, InsufficientDataError, PanelFormatError, ScalingError
from .growth import (
    GrowthObservation,
    ObservationSet,
    extract_growth_observations,
    filter_outliers,
    growth_pipeline,
    pool,
)
from .panel import (
    FirmPanel,
    FirmRecord,
    ValidationReport,
    filter_classification,
    filter_years,
    load_panel,
    validate_panel,
)
from .scaling import (
    BinRow,
    BinTable,
    LaplaceFit,
    RegressionFit,
    fit_conditional_laplace,
    fit_laplace,
    fit_power_law,
    log_bin,
    ols,
)
from .synth import SynthConfig, gen_emerging_industry, gen_gibrat, gen_power_law_laplace, gen_units
from .windows import ConvergenceResult, WindowSeries, detect_convergence, moving_window_fits

__version__ = "0.1.0"
