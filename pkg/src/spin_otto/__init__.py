"""Quantum Otto engine on the Zeeman ladder of a single atom.

The engine is an N-level spin driven by unidirectional spin-exchange
collisions with a polarized bath; heating can push it through maximum
entropy into population inversion (negative spin temperature).
"""

from .cycle import (
    CycleConfig,
    CycleRecord,
    StrokeKind,
    StrokeRecord,
    SweepResult,
    calibrate_uniform_rate,
    calibrated_rate,
    count_entropy_peaks,
    cycle_entropy_trace,
    default_config,
    heating_entropy_peak,
    reduced_final_profile,
    run_cooling,
    run_cycle,
    run_heating,
    solve_cooling_time,
    sweep_heating_time,
    uniform_config,
)
from .dynamics import (
    Direction,
    RateGenerator,
    RatePhysicalInputs,
    RateProfile,
    Trajectory,
    analytic_uniform_populations,
    basis_state,
    build_generator,
    evolve,
    expected_collisions,
    rate_from_physical,
)
from .errors import (
    CalibrationError,
    ClosureError,
    ConfigError,
    DomainError,
    FitError,
    SpinOttoError,
)
from .levels import build_heat_time_map, compare_n_levels, terminal_power_drop, truncate
from .tempfit import (
    Regime,
    TemperatureFit,
    boltzmann_distribution,
    classify_regime,
    fit_dual_boltzmann,
    temperature_trace,
)
from .thermo import (
    KAPPA_NK_PER_MG,
    LAMBDA_NK_PER_MG,
    EnergyLadder,
    bath_quantum,
    cycle_power,
    heat_exchanged,
    otto_efficiency,
    shannon_entropy,
    stroke_work,
    zeeman_ladder,
)

__version__ = "0.1.0"
