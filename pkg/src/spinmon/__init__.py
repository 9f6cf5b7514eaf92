"""Monitored kicked-top dynamics of collective spins."""

__version__ = "0.1.0"

from .haar_model import HaarModelInput, HaarTraces, closed_form_traces, haar_expectation_sq, haar_mean_qfi_curve
from .kicked_top import FloquetPropagator, KickedTopParams, apply, apply_density, build_propagator
from .measurement import (
    GaussianMeasurement,
    MeasurementOutcome,
    posterior_update,
    posterior_update_density,
    povm_completeness_check,
    sample_outcome,
    sample_outcome_density,
)
from .observables import QfiSummary, mean_qfi, mean_qfi_density, purity, qfi_axis, reference_values
from .operators import (
    CollectiveOps,
    DensityState,
    SpinQuantum,
    SpinState,
    dicke_state,
    haar_random_state,
    make_ops,
    spin_coherent,
)
from .scaling import ScalingFit, beta_curve, fit_power_law
from .trajectory import (
    InitialCondition,
    RunConfig,
    SweepResult,
    TrajectoryRecord,
    run_mixed_trajectory,
    run_pure_trajectory,
    run_sweep,
)
