"""Viability kernels and viable harvesting for two-species exploited ecosystems."""

from .errors import (
    ConfigError,
    DataError,
    ModelContractError,
    ModelEvaluationError,
    NoSolutionError,
    PolicyError,
    PreconditionError,
    ValidationError,
    ViabilityError,
)
from .estimation import (
    FitOptions,
    FitResult,
    ObservationSeries,
    central_gradient,
    efforts_from_observations,
    fit_conjugate_gradient,
    synthetic_observations,
    weighted_ssr,
)
from .kernel_analytic import (
    ConditionReport,
    MaxCatchThresholds,
    check_conditions_generic,
    kernel_member_generic,
    kernel_member_no_dd,
    lv_kernel_boundary,
    lv_kernel_member,
    lv_max_catch_thresholds,
    lv_sustainable_catch_bound,
    lv_threshold_conditions,
)
from .kernel_grid import GridSpec, KernelGrid, compute_v0_grid, is_viability_domain, iterate_kernel
from .model import (
    Control,
    GrowthModel,
    LotkaVolterraParams,
    State,
    Thresholds,
    identity_model,
    lv_model,
    step,
)
from .viable_control import (
    ControlBox,
    FeedbackPolicy,
    Trajectory,
    control_box,
    feedback,
    hat_controls,
    simulate,
    viable_control_member,
)

__version__ = "0.1.0"
