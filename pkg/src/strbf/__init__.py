"""Online gradient-descent training of plain, fractional and spatio-temporal RBF networks."""

from .harness import (
    AggregateResult,
    ExperimentConfig,
    ModelKind,
    TrialResult,
    aggregate,
    emit_csv,
    mse_db,
    run_monte_carlo,
    run_trial,
)
from .kernels import KernelSpec, KernelVariant, kernel_eval, squared_distance
from .learning import (
    DivergenceError,
    FrbfConfig,
    GdConfig,
    StepResult,
    frbf_step,
    gd_step_rbf,
    gd_step_strbf,
    instantaneous_cost,
)
from .model import (
    Architecture,
    RbfState,
    StRbfState,
    activations,
    forward_rbf,
    init_state,
    push_and_forward_strbf,
)
from .plant import NoiseSpec, PlantCoeffs, SignalSpec, gen_square, plant_output, run_plant

__version__ = "0.1.0"
