"""Electronic level scheme of the two 40Ca+ ions plus the truncated CM phonon mode."""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from ..linalg import StateVector
from ..gate_model import AncillaLevel

__all__ = ["Ion", "AncillaIonLevel", "TargetLevel", "IonLevelScheme", "level_by_name"]


class Ion(enum.Enum):
    ancilla = "ancilla"
    target = "target"


class AncillaIonLevel(enum.IntEnum):
    G = 0  # 4S1/2 m=-1/2
    Gp = 1  # 4S1/2 m=+1/2
    E = 2  # 3D3/2 m=+3/2
    Ep = 3  # 3D3/2 m=-3/2
    D5a = 4  # 3D5/2 m=+3/2
    D5b = 5  # 3D5/2 m=-3/2
    D5c = 6  # 3D5/2 m=+1/2
    D3aux = 7  # 3D3/2 m=+3/2, shelving slot for G during readout


class TargetLevel(enum.IntEnum):
    g = 0  # 4S1/2 m=-1/2
    e = 1  # 3D5/2 m=-1/2
    e_aux = 2  # auxiliary level for the 2π phase-flip pulse


BRIGHT_LEVELS = (AncillaIonLevel.G, AncillaIonLevel.Gp)

_LEVEL_TYPES = {Ion.ancilla: AncillaIonLevel, Ion.target: TargetLevel}


def level_by_name(ion: Ion, name: str):
    try:
        return _LEVEL_TYPES[ion][name]
    except KeyError:
        raise ValueError(f"unknown {ion.value} level {name!r}") from None


@dataclass(frozen=True)
class IonLevelScheme:
    """Hilbert-space layout ``ancilla (8) ⊗ target (3) ⊗ phonon (fock_cutoff + 1)``.

    ``fock_cutoff`` is the highest phonon number kept.  The protocol only ever
    populates n = 0 and n = 1, so the top level acts as a guard: population
    found there means the truncation is no longer faithful.
    """

    fock_cutoff: int = 2

    ANCILLA = 0
    TARGET = 1
    PHONON = 2

    def __post_init__(self):
        if int(self.fock_cutoff) < 2:
            raise ValueError(f"fock_cutoff must be at least 2, got {self.fock_cutoff}")

    @property
    def n_fock(self) -> int:
        return int(self.fock_cutoff) + 1

    @property
    def dims(self) -> tuple:
        return (len(AncillaIonLevel), len(TargetLevel), self.n_fock)

    def n_levels(self, ion: Ion) -> int:
        return len(_LEVEL_TYPES[ion])

    def factor(self, ion: Ion) -> int:
        return self.ANCILLA if ion is Ion.ancilla else self.TARGET

    def embed(self, chi, ancilla_level=AncillaIonLevel.G, phonon: int = 0) -> StateVector:
        """``|ancilla_level> ⊗ |χ> ⊗ |phonon>`` with the spectator qubit as a trailing factor.

        ``chi`` holds two-qubit amplitudes (gg, ge, eg, ee), target qubit first.
        Factor dims are ``(8, 3, n_fock, 2)``.
        """
        chi = np.asarray(chi, dtype=complex).reshape(2, 2)
        t = np.zeros((8, 3, self.n_fock, 2), dtype=complex)
        t[int(ancilla_level), :2, phonon, :] = chi
        return StateVector(self.dims + (2,), t)

    def gate_projection(self, state: StateVector) -> np.ndarray:
        """Restrict a pulse-level state to the gate-model space (4, 2, 2) at phonon n = 0.

        The result is unnormalised: its norm is the weight inside the logical
        subspace.
        """
        t = state.tensor()
        return np.ascontiguousarray(t[:4, :2, 0, ...]).reshape(-1)

    @staticmethod
    def gate_level(level: AncillaLevel) -> AncillaIonLevel:
        return AncillaIonLevel(int(level))
