"""Human operator models for compensatory tracking.

Simulates a human operator closing the loop around a rate-command
plant, generates random-appearing forcing functions, and identifies
operator parameters (including a fractional-order structure) from
recorded or synthetic sessions.
"""

from .fractional import GlKernel, gamma, gl_apply, gl_weights, make_kernel
from .identify import (FIT_MODES, MODEL_KINDS, FitResult, ScanGrid,
                       SimplexConfig, SimplexResult, fit, model_from_params,
                       nelder_mead, read_fit_report, read_table_csv,
                       rmse_cost, scan_alpha_delay_kp, sweep_delay,
                       write_fit_report, write_scan_grid,
                       write_sweep_results)
from .loop import (ForcingSpec, LoopConfig, UnstableLoopError,
                   generate_forcing, simulate)
from .models import (PLANT_PRESETS, FractionalModel, GainLeadDelayModel,
                     OperatorModel, PlantModel, PlantState,
                     QuasiLinearModel, delay_line, make_operator_stepper,
                     operator_output, plant_step, plant_zoh_coefficients,
                     quantize_delay)
from .sessions import (SOURCES, MalformedRowError, NonFiniteValueError,
                       NonUniformSamplingError, Session, SessionFileError,
                       SessionInvariantError, SessionMeta, read_session,
                       write_session)
from .signals import SampledSignal, resample

__version__ = "0.1.0"

__all__ = [
    "FIT_MODES",
    "ForcingSpec",
    "FitResult",
    "FractionalModel",
    "GainLeadDelayModel",
    "GlKernel",
    "LoopConfig",
    "MODEL_KINDS",
    "MalformedRowError",
    "NonFiniteValueError",
    "NonUniformSamplingError",
    "OperatorModel",
    "PLANT_PRESETS",
    "PlantModel",
    "PlantState",
    "QuasiLinearModel",
    "SOURCES",
    "SampledSignal",
    "ScanGrid",
    "Session",
    "SessionFileError",
    "SessionInvariantError",
    "SessionMeta",
    "SimplexConfig",
    "SimplexResult",
    "UnstableLoopError",
    "delay_line",
    "fit",
    "gamma",
    "generate_forcing",
    "gl_apply",
    "gl_weights",
    "make_kernel",
    "make_operator_stepper",
    "model_from_params",
    "nelder_mead",
    "operator_output",
    "plant_step",
    "plant_zoh_coefficients",
    "quantize_delay",
    "read_fit_report",
    "read_session",
    "read_table_csv",
    "resample",
    "rmse_cost",
    "scan_alpha_delay_kp",
    "simulate",
    "sweep_delay",
    "write_fit_report",
    "write_scan_grid",
    "write_session",
    "write_sweep_results",
]
