"""Neutron polarimetry simulator and noncyclic-phase analysis toolkit."""

from .analysis import (
    FitResult,
    IntensityScan,
    MixingSpec,
    PhaseResult,
    bootstrap_phase_sigma,
    fit_harmonic,
    mix_scans,
    normalize_counts,
    phase_from_extrema_mixed,
    phase_from_extrema_pure,
    run_pipeline,
)
from .beamline import (
    BeamlineConfig,
    ConfigError,
    ScanPlan,
    analytic_extrema,
    mixed_intensity,
    observed_intensity,
    propagate,
    propagate_second_order,
    pure_intensity,
)
from .config import ExperimentConfig
from .counting import CountingPlan, ScanRecord, expectation_scan, simulate_scan
from .spincore import (
    AxisAngle,
    BlochState,
    Su2Params,
    axis_angle_from_matrix,
    axis_angle_to_matrix,
    mixed_state_phase,
    pancharatnam_phase,
    params_from_matrix,
    su2_from_params,
)

__version__ = "0.1.0"
