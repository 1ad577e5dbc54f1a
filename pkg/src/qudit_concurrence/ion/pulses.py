"""Carrier and sideband pulses, pulse programs, and their execution.

Interaction-picture Hamiltonians with ħ = 1 and laser phase φ, for a
transition ``lower -> upper`` with raising operator σ+ = |upper><lower|:

    carrier      H = ½ |Ω| (e^{iφ} σ+ + h.c.)
    red          H = ½ i η|Ω| e^{iφ} σ+ a  + h.c.
    blue         H = ½ i η|Ω| e^{iφ} σ+ a† + h.c.

A pulse is specified by its area θ (|Ω|τ for the carrier, η|Ω|τ for the
sidebands) and its unitary is exp(-i θ H) with unit coupling.  Sideband areas
refer to the n = 0 <-> 1 transition; higher phonon sectors pick up the usual
√n scaling through the ladder operators.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from ..gate_model import PREPARATION_ANGLES
from ..linalg import TOL, StateVector, apply_operator, matrix_exponential
from .levels import AncillaIonLevel as A
from .levels import Ion, IonLevelScheme, TargetLevel as T, level_by_name

__all__ = [
    "PulseKind",
    "Pulse",
    "PulseProgram",
    "ExecutionResult",
    "pulse_area",
    "carrier_unitary",
    "sideband_unitary",
    "pulse_operator",
    "compile_protocol",
    "execute",
    "format_program",
    "parse_program",
    "program_unitary",
]


class PulseKind(enum.Enum):
    carrier = "carrier"
    red_sideband = "red_sideband"
    blue_sideband = "blue_sideband"
    raman_carrier = "raman_carrier"

    @property
    def is_sideband(self) -> bool:
        return self in (PulseKind.red_sideband, PulseKind.blue_sideband)


def pulse_area(kind: PulseKind, rabi: float, duration: float, lamb_dicke: float | None = None) -> float:
    """Reduce physical parameters to a pulse area: |Ω|τ, or η|Ω|τ on a sideband."""
    if kind.is_sideband:
        if lamb_dicke is None:
            raise ValueError("sideband pulses need a Lamb-Dicke parameter")
        return float(lamb_dicke * abs(rabi) * duration)
    return float(abs(rabi) * duration)


@dataclass(frozen=True)
class Pulse:
    ion: Ion
    kind: PulseKind
    lower: int
    upper: int
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        levels = A if self.ion is Ion.ancilla else T
        try:
            lower, upper = levels(self.lower), levels(self.upper)
        except ValueError:
            raise ValueError(f"levels ({self.lower}, {self.upper}) do not belong to the {self.ion.value} ion") from None
        if lower == upper:
            raise ValueError("a pulse needs two distinct levels")
        if self.kind.is_sideband and self.phi != 0.0:
            raise ValueError("sideband pulses are driven with phase 0")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "phi", float(self.phi))

    def inverse(self) -> "Pulse":
        return Pulse(self.ion, self.kind, self.lower, self.upper, -self.theta, self.phi)


@dataclass(frozen=True)
class PulseProgram:
    pulses: tuple = ()
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "pulses", tuple(self.pulses))

    def __len__(self) -> int:
        return len(self.pulses)

    def __iter__(self):
        return iter(self.pulses)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return PulseProgram(self.pulses[item], self.label)
        return self.pulses[item]

    def __add__(self, other: "PulseProgram") -> "PulseProgram":
        return PulseProgram(self.pulses + other.pulses, self.label or other.label)

    def inverse(self) -> "PulseProgram":
        return PulseProgram(tuple(p.inverse() for p in reversed(self.pulses)), f"inverse of {self.label}".strip())


def _transition_ops(n_levels: int, lower: int, upper: int):
    sigma_plus = np.zeros((n_levels, n_levels), dtype=complex)
    sigma_plus[upper, lower] = 1.0
    return sigma_plus


def carrier_unitary(theta: float, phi: float, lower, upper, scheme: IonLevelScheme | None = None) -> np.ndarray:
    """``exp(-i θ/2 (cos φ σx - sin φ σy))`` on one ion's levels.

    The ion is inferred from the level type; the matrix acts on that ion's
    electronic factor only (identity on the phonon mode by construction).
    """
    n = len(type(lower))
    if type(lower) is not type(upper) or lower == upper:
        raise ValueError(f"invalid carrier transition ({lower!r}, {upper!r})")
    sp = _transition_ops(n, int(lower), int(upper))
    h = 0.5 * (np.exp(1j * phi) * sp + np.exp(-1j * phi) * sp.conj().T)
    return matrix_exponential(h, -1j * theta)


def _annihilation(n_fock: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, n_fock)), k=1).astype(complex)


def sideband_unitary(kind, theta: float, lower, upper, scheme: IonLevelScheme) -> np.ndarray:
    """Sideband unitary on ``(ion levels) ⊗ (phonon)``, ion factor first.

    ``kind`` is ``"red"``/``"blue"`` or the matching :class:`PulseKind`.
    """
    if isinstance(kind, str):
        kind = {"red": PulseKind.red_sideband, "blue": PulseKind.blue_sideband}.get(kind, None) or PulseKind(kind)
    if not kind.is_sideband:
        raise ValueError(f"{kind} is not a sideband")
    if type(lower) is not type(upper) or lower == upper:
        raise ValueError(f"invalid sideband transition ({lower!r}, {upper!r})")
    n = len(type(lower))
    sp = _transition_ops(n, int(lower), int(upper))
    a = _annihilation(scheme.n_fock)
    ladder = a if kind is PulseKind.red_sideband else a.conj().T
    coupling = 0.5j * np.kron(sp, ladder)
    return matrix_exponential(coupling + coupling.conj().T, -1j * theta)


def _level_enum(ion: Ion):
    return A if ion is Ion.ancilla else T


@lru_cache(maxsize=512)
def pulse_operator(pulse: Pulse, scheme: IonLevelScheme):
    """Local operator for a pulse and the scheme factors it acts on."""
    levels = _level_enum(pulse.ion)
    lower, upper = levels(pulse.lower), levels(pulse.upper)
    factor = scheme.factor(pulse.ion)
    if pulse.kind.is_sideband:
        op = sideband_unitary(pulse.kind, pulse.theta, lower, upper, scheme)
        targets = (factor, scheme.PHONON)
    else:
        op = carrier_unitary(pulse.theta, pulse.phi, lower, upper, scheme)
        targets = (factor,)
    op.setflags(write=False)
    return op, targets


@dataclass(frozen=True)
class ExecutionResult:
    state: StateVector
    leakage: float
    norms: tuple = field(repr=False, default=())

    @property
    def valid(self) -> bool:
        return self.leakage <= TOL.structural

    def phonon_excitation(self) -> float:
        """Population outside the phonon ground state."""
        return float(self.state.marginal_probabilities(IonLevelScheme.PHONON)[1:].sum())


def _guard_population(state: StateVector) -> float:
    return float(state.marginal_probabilities(IonLevelScheme.PHONON)[-1])


def execute(program: Iterable[Pulse], initial: StateVector, scheme: IonLevelScheme) -> ExecutionResult:
    """Apply the pulses left to right.

    ``initial`` must have factor dims starting with ``scheme.dims``; further
    factors (e.g. an unaddressed spectator qubit) are carried along untouched.
    Leakage is the largest population seen in the top (guard) phonon level.
    """
    if tuple(initial.factor_dims[:3]) != scheme.dims:
        raise ValueError(f"state factor dims {initial.factor_dims} do not start with {scheme.dims}")
    if not initial.is_normalized(TOL.input_normalization):
        raise ValueError(f"initial state norm {initial.norm()!r} deviates from 1")
    amps = initial.amplitudes
    dims = initial.factor_dims
    leakage = _guard_population(initial)
    norms = []
    for pulse in program:
        op, targets = pulse_operator(pulse, scheme)
        amps = apply_operator(amps, op, dims, targets)
        step = StateVector(dims, amps)
        norms.append(step.norm())
        leakage = max(leakage, _guard_population(step))
    return ExecutionResult(StateVector(dims, amps), leakage, tuple(norms))


_RY = -np.pi / 2  # laser phase giving R_y
_RX = 0.0


def compile_protocol(scheme: IonLevelScheme | None = None) -> PulseProgram:
    """Pulse sequence realising the gate-level protocol on the two ions.

    3 preparation pulses, the controlled-σy block (5), the controlled-σx
    block (5), the controlled-(-σz) block (3) and 4 final ancilla rotations.
    """
    anc, tgt = Ion.ancilla, Ion.target
    pi = np.pi
    t1, t2, t3 = PREPARATION_ANGLES
    aux_flip = Pulse(tgt, PulseKind.red_sideband, T.g, T.e_aux, 2 * pi)
    pulses = [
        # ancilla preparation
        Pulse(anc, PulseKind.carrier, A.G, A.E, t1, _RY),
        Pulse(anc, PulseKind.raman_carrier, A.G, A.Gp, t2, _RY),
        Pulse(anc, PulseKind.carrier, A.Gp, A.Ep, t3, _RY),
        # C^{G'}(σy)
        Pulse(anc, PulseKind.blue_sideband, A.Gp, A.Ep, pi),
        Pulse(tgt, PulseKind.carrier, T.g, T.e, -pi / 2, _RX),
        aux_flip,
        Pulse(tgt, PulseKind.carrier, T.g, T.e, pi / 2, _RX),
        Pulse(anc, PulseKind.blue_sideband, A.Gp, A.Ep, pi),
        # C^{E}(σx)
        Pulse(anc, PulseKind.red_sideband, A.G, A.E, pi),
        Pulse(tgt, PulseKind.carrier, T.g, T.e, pi / 2, _RY),
        aux_flip,
        Pulse(tgt, PulseKind.carrier, T.g, T.e, -pi / 2, _RY),
        Pulse(anc, PulseKind.red_sideband, A.G, A.E, pi),
        # C^{E'}(-σz)
        Pulse(anc, PulseKind.red_sideband, A.Gp, A.Ep, pi),
        aux_flip,
        Pulse(anc, PulseKind.red_sideband, A.Gp, A.Ep, pi),
        # final π/2 rotations
        Pulse(anc, PulseKind.carrier, A.G, A.E, pi / 2, _RY),
        Pulse(anc, PulseKind.carrier, A.Gp, A.Ep, pi / 2, _RY),
        Pulse(anc, PulseKind.raman_carrier, A.G, A.Gp, pi / 2, _RY),
        Pulse(anc, PulseKind.carrier, A.E, A.Ep, pi / 2, _RY),
    ]
    return PulseProgram(tuple(pulses), "concurrence protocol")


def _fmt(x: float) -> str:
    return f"{x:.11e}"


def format_program(program: PulseProgram) -> str:
    """One pulse per line: ``ion kind lower upper theta phi``."""
    lines = []
    if program.label:
        lines.append(f"# {program.label}")
    for p in program:
        lines.append(f"{p.ion.value} {p.kind.value} {p.lower.name} {p.upper.name} {_fmt(p.theta)} {_fmt(p.phi)}")
    return "\n".join(lines) + "\n"


def parse_program(text: str, label: str | None = None) -> PulseProgram:
    """Inverse of :func:`format_program`. Blank lines and ``#`` comments are skipped;
    the first comment becomes the label unless one is given."""
    pulses = []
    found_label = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            if found_label is None:
                found_label = line[1:].strip()
            continue
        parts = line.split()
        if len(parts) != 6:
            raise ValueError(f"line {lineno}: expected 6 fields, got {len(parts)}")
        try:
            ion = Ion(parts[0])
            kind = PulseKind(parts[1])
            lower = level_by_name(ion, parts[2])
            upper = level_by_name(ion, parts[3])
            theta, phi = float(parts[4]), float(parts[5])
            pulses.append(Pulse(ion, kind, lower, upper, theta, phi))
        except ValueError as exc:
            raise ValueError(f"line {lineno}: {exc}") from None
    return PulseProgram(tuple(pulses), label if label is not None else (found_label or ""))


def program_unitary(program: Sequence[Pulse], scheme: IonLevelScheme) -> np.ndarray:
    """Dense unitary of a whole program on the ion space (used by tests and diagnostics)."""
    d = int(np.prod(scheme.dims))
    u = np.eye(d, dtype=complex)
    for pulse in program:
        op, targets = pulse_operator(pulse, scheme)
        u = np.stack([apply_operator(col, op, scheme.dims, targets) for col in u.T], axis=1)
    return u
