"""Weight-operator simulator: projection events, dephasing channels,
repeated-question confinement, and channel-scale ion estimates."""

__version__ = "0.1.0"

from .channels import (
    BranchConfig,
    BranchMixture,
    DephasingChannel,
    HamiltonianSpec,
    apply_dephasing,
    coherence_multiplier,
    computational_dephasing,
    evolve_unitary,
    propagator,
    rabi_hamiltonian,
    random_hermitian,
    release_branch_mixture,
)
from .collapse import (
    ExperienceEvent,
    NatureAnswer,
    apply_answer,
    probability_yes,
    process1,
    sample_answer,
    select_event,
)
from .errors import (
    CapacityError,
    ConfigurationError,
    DegenerateBranchError,
    DegenerateFitError,
    DimensionMismatchError,
    InvalidStateError,
    PreconditionError,
    ScenarioExecutionError,
    ValidationError,
    ZenosimError,
)
from .estimates import (
    EstimateReport,
    IonParameters,
    calcium_ion,
    spread_at_trigger,
    velocity_ratio,
)
from .opalg import (
    FactorSpace,
    Projector,
    ValidationReport,
    WeightOperator,
    basis_projector,
    expectation_value,
    partial_trace,
    tensor_product,
    validate_weight_operator,
)
from .zeno import (
    EffortSetting,
    ExpectedRunResult,
    LeakageSweepResult,
    RobustnessReport,
    RunMode,
    SampledRunResult,
    SurvivalCurve,
    ZenoProtocol,
    effort_to_interval,
    eq4_single_step,
    leakage_sweep,
    mixture_robustness_check,
    run_expected,
    run_sampled,
)

__all__ = [name for name in dir() if not name.startswith("_")]
