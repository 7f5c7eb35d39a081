"""Semiclassical 1D Maxwell-Bloch laboratory for multi-level EIT media.

The package integrates the coupled probe-field / atomic-coherence equations
of an m-level ensemble driven by co- and counter-propagating pump fields and
compares the runs against the closed-form polariton predictions (mixing
angles, group velocity, pulse-matching rates, stationary pulses).

All internal quantities are in scaled units: time in 1/Gamma, length in L.
"""

from .model import (
    Config,
    ConfigError,
    FieldState,
    InitialSeed,
    LevelSystem,
    ProbeInput,
    PropagationGeometry,
    PumpSchedule,
    SchemeOptions,
    SimGrid,
    StorageUndefinedError,
    config_scaled_to_si,
    config_si_to_scaled,
    load_preset,
    omega_total,
    preset_names,
    validate,
)
from .polariton import (
    MixingAngles,
    PolaritonView,
    adiabatic_parameter,
    adiabatic_sigma_bc,
    basis_matrix,
    direction_cosine,
    from_polaritons,
    group_velocity,
    mismatch_decay_rate,
    mixing_angles,
    mixing_phi,
    mixing_theta,
    pair_beta,
    pair_mixing_angle,
    stationary_pump_amplitude,
    stationary_pump_amplitude_literal,
    stationary_weights,
    to_polaritons,
)
from .dynamics import (
    InstabilityError,
    Trajectory,
    run,
    step_atoms,
    step_fields_characteristics,
    step_fields_quasistatic,
)
from .experiments import (
    ExperimentReport,
    excitation_monitor,
    fringe_averaged_profile,
    interference_profile,
    run_experiment,
)

__version__ = "0.1.0"
