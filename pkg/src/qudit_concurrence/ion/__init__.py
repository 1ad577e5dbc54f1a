"""Pulse-level trapped-ion simulation: level scheme, pulses, readout."""

from .levels import AncillaIonLevel, Ion, IonLevelScheme, TargetLevel, level_by_name
from .pulses import (
    ExecutionResult,
    Pulse,
    PulseKind,
    PulseProgram,
    carrier_unitary,
    compile_protocol,
    execute,
    format_program,
    parse_program,
    program_unitary,
    pulse_area,
    pulse_operator,
    sideband_unitary,
)
from .readout import (
    CascadeStep,
    FluorescenceOutcome,
    ReadoutPlan,
    bright_probability,
    cascade_distribution,
    compile_readout,
    format_readout,
    measure_cascade,
    parse_readout,
    sample_cascade,
)
