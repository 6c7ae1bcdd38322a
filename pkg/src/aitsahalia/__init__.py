"""Positivity-preserving integration of the generalized Ait-Sahalia model.

The package provides a tamed semi-implicit Euler scheme with a closed
form, unconditionally positive update, backward and explicit Euler
baselines, reproducible Brownian lattices, strong-error and moment
harnesses, assumption checks for the taming functions, and a multilevel
Monte Carlo estimator.  The `aitsahalia` command line drives the same
machinery and writes CSV artifacts.
"""

from .config import PARAM_KEYS, PRESETS, get_params, load_params_file
from .csvio import (
    f17,
    write_assumptions_csv,
    write_convergence_csv,
    write_mlmc_csv,
    write_moments_csv,
    write_paths_csv,
)
from .mlmc import BudgetExceeded, MlmcResult, Payoff, mlmc_estimate, mlmc_fixed_levels
from .model import (
    ExponentOutOfRange,
    InadmissibleRegime,
    ModelParams,
    NonPositiveCoefficient,
    NonPositiveState,
    Regime,
    RegimeKind,
    classify_regime,
    diffusion,
    drift,
    validate,
)
from .montecarlo import (
    ConvergenceReport,
    DegenerateFit,
    MomentReport,
    RateFit,
    RefNotFiner,
    fit_rate,
    moment_study,
    strong_error_study,
)
from .noise import (
    BrownianLattice,
    LevelMismatch,
    LevelTooDeep,
    coarsen,
    coarsen_block,
    generate,
    generate_block,
    load_lattice,
    save_lattice,
)
from .schemes import (
    NewtonConfig,
    PathBatch,
    SchemeConfig,
    SchemeKind,
    StepOutcome,
    StepStatus,
    StepTooLarge,
    Trajectory,
    bem_step,
    em_step,
    integrate,
    integrate_paths,
    positive_root,
    tem_step,
)
from .taming import AssumptionReport, GridSpec, TamingConfig, check_assumptions, f_h, g_h

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "BrownianLattice",
    "BudgetExceeded",
    "ConvergenceReport",
    "DegenerateFit",
    "ExponentOutOfRange",
    "GridSpec",
    "InadmissibleRegime",
    "LevelMismatch",
    "LevelTooDeep",
    "MlmcResult",
    "ModelParams",
    "MomentReport",
    "NewtonConfig",
    "NonPositiveCoefficient",
    "NonPositiveState",
    "PARAM_KEYS",
    "PRESETS",
    "PathBatch",
    "Payoff",
    "RateFit",
    "RefNotFiner",
    "Regime",
    "RegimeKind",
    "SchemeConfig",
    "SchemeKind",
    "StepOutcome",
    "StepStatus",
    "StepTooLarge",
    "TamingConfig",
    "Trajectory",
    "bem_step",
    "check_assumptions",
    "classify_regime",
    "coarsen",
    "coarsen_block",
    "diffusion",
    "drift",
    "em_step",
    "f17",
    "f_h",
    "fit_rate",
    "g_h",
    "generate",
    "generate_block",
    "get_params",
    "integrate",
    "integrate_paths",
    "load_lattice",
    "load_params_file",
    "mlmc_estimate",
    "mlmc_fixed_levels",
    "moment_study",
    "positive_root",
    "save_lattice",
    "strong_error_study",
    "tem_step",
    "validate",
    "write_assumptions_csv",
    "write_convergence_csv",
    "write_mlmc_csv",
    "write_moments_csv",
    "write_paths_csv",
]
