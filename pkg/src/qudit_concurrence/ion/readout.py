"""Electron-shelving readout of the four-level ancilla.

Mapping pulses first move every ancilla population except |G> out of the
4S1/2 manifold.  A cascade of fluorescence tests then follows; before each
test after the first, one shelved population is returned to 4S1/2.  A bright
result ends the cascade, and if all three tests are dark the ancilla is
declared to have been in |E'>.  Fluorescence is an ideal projective
measurement onto {4S1/2} versus everything else.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gate_model import AncillaLevel, ProbVector
from ..linalg import StateVector, apply_operator
from .levels import BRIGHT_LEVELS, AncillaIonLevel as A, Ion, IonLevelScheme
from .pulses import Pulse, PulseKind, PulseProgram, format_program, parse_program, pulse_operator

__all__ = [
    "CascadeStep",
    "ReadoutPlan",
    "FluorescenceOutcome",
    "compile_readout",
    "bright_probability",
    "cascade_distribution",
    "measure_cascade",
    "sample_cascade",
    "format_readout",
    "parse_readout",
]


@dataclass(frozen=True)
class CascadeStep:
    """Optional unshelving pulse, then a fluorescence test; bright means ``outcome``.

    The last step has ``test=False``: its outcome is declared by elimination.
    """

    outcome: AncillaLevel
    unshelve: Pulse | None = None
    test: bool = True


@dataclass(frozen=True)
class ReadoutPlan:
    mapping: PulseProgram
    cascade: tuple

    @property
    def unshelve_program(self) -> PulseProgram:
        return PulseProgram(tuple(s.unshelve for s in self.cascade if s.unshelve is not None), "cascade unshelving")


@dataclass(frozen=True)
class FluorescenceOutcome:
    level_detected: AncillaLevel
    num_tests: int

    def __post_init__(self):
        if not 1 <= self.num_tests <= 4:
            raise ValueError(f"num_tests must be in 1..4, got {self.num_tests}")


def compile_readout(scheme: IonLevelScheme | None = None) -> ReadoutPlan:
    anc = Ion.ancilla
    pi = np.pi
    mapping = PulseProgram(
        (
            # one Raman π pulse with two π-polarised beams: D3/2 -> D5/2 for both E and E'
            Pulse(anc, PulseKind.raman_carrier, A.E, A.D5a, pi),
            Pulse(anc, PulseKind.raman_carrier, A.Ep, A.D5b, pi),
            # park G, move G' to D5/2, bring G back
            Pulse(anc, PulseKind.carrier, A.G, A.D3aux, pi),
            Pulse(anc, PulseKind.carrier, A.Gp, A.D5c, pi),
            Pulse(anc, PulseKind.carrier, A.G, A.D3aux, pi),
        ),
        "readout mapping",
    )
    cascade = (
        CascadeStep(AncillaLevel.G),
        CascadeStep(AncillaLevel.Gp, Pulse(anc, PulseKind.carrier, A.Gp, A.D5c, pi)),
        CascadeStep(AncillaLevel.E, Pulse(anc, PulseKind.carrier, A.G, A.D5a, pi)),
        CascadeStep(AncillaLevel.Ep, None, test=False),
    )
    return ReadoutPlan(mapping, cascade)


def _bright_mask(dims) -> np.ndarray:
    mask = np.zeros(dims, dtype=bool)
    for level in BRIGHT_LEVELS:
        mask[int(level)] = True
    return mask.reshape(-1)


def bright_probability(state: StateVector) -> float:
    """Probability that a fluorescence test on the ancilla comes out bright."""
    mask = _bright_mask(state.factor_dims)
    return float(np.sum(np.abs(state.amplitudes[mask]) ** 2))


def _unshelve(amps: np.ndarray, step: CascadeStep, dims, scheme: IonLevelScheme) -> np.ndarray:
    if step.unshelve is None:
        return amps
    op, targets = pulse_operator(step.unshelve, scheme)
    return apply_operator(amps, op, dims, targets)


def cascade_distribution(state: StateVector, plan: ReadoutPlan, scheme: IonLevelScheme) -> ProbVector:
    """Exact Born probabilities of the four cascade outcomes for a state after the mapping pulses."""
    mask = _bright_mask(state.factor_dims)
    dims = state.factor_dims
    amps = np.array(state.amplitudes)
    probs = []
    for step in plan.cascade:
        amps = _unshelve(amps, step, dims, scheme)
        if not step.test:
            probs.append(float(np.sum(np.abs(amps) ** 2)))
            break
        probs.append(float(np.sum(np.abs(amps[mask]) ** 2)))
        amps = np.where(mask, 0.0, amps)
    p = np.clip(np.array(probs), 0.0, None)
    return ProbVector.from_array(p / p.sum())


def measure_cascade(state: StateVector, rng, plan: ReadoutPlan, scheme: IonLevelScheme):
    """Run one shot of the fluorescence cascade.

    ``rng`` is a seed or a ``numpy.random.Generator``.  Returns the outcome and
    the post-measurement state (collapsed and renormalised).
    """
    rng = np.random.default_rng(rng)
    mask = _bright_mask(state.factor_dims)
    dims = state.factor_dims
    amps = np.array(state.amplitudes)
    for n, step in enumerate(plan.cascade, start=1):
        amps = _unshelve(amps, step, dims, scheme)
        if not step.test:
            return FluorescenceOutcome(step.outcome, n), StateVector(dims, amps / np.linalg.norm(amps))
        total = float(np.sum(np.abs(amps) ** 2))
        p_bright = float(np.sum(np.abs(amps[mask]) ** 2)) / total
        if rng.random() < p_bright:
            amps = np.where(mask, amps, 0.0)
            return FluorescenceOutcome(step.outcome, n), StateVector(dims, amps / np.linalg.norm(amps))
        amps = np.where(mask, 0.0, amps)
    raise RuntimeError("readout cascade ended without an outcome")


def sample_cascade(state: StateVector, shots: int, rng, plan: ReadoutPlan, scheme: IonLevelScheme) -> np.ndarray:
    """Counts of the four outcomes over ``shots`` repetitions.

    Draws one multinomial sample from :func:`cascade_distribution`, which has
    the same law as repeating :func:`measure_cascade` on fresh copies of the state.
    """
    if shots < 1:
        raise ValueError("shots must be at least 1")
    p = cascade_distribution(state, plan, scheme).as_array()
    return np.random.default_rng(rng).multinomial(shots, p)


def format_readout(plan: ReadoutPlan) -> str:
    return format_program(plan.mapping) + format_program(plan.unshelve_program)


def parse_readout(text: str):
    """Split a serialised readout back into (mapping, unshelving) programs."""
    blocks, current = [], []
    for line in text.splitlines():
        if line.strip().startswith("#") and current:
            blocks.append("\n".join(current))
            current = []
        current.append(line)
    if current:
        blocks.append("\n".join(current))
    return tuple(parse_program(b) for b in blocks)
