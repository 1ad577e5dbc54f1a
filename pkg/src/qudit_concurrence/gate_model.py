"""Ideal gate-level model of the single-observable concurrence protocol.

The composite space is ``ancilla (4) ⊗ target qubit (2) ⊗ spectator qubit (2)``.
The protocol touches only the first two factors.  Qubit basis order is
``(g, e)``; ancilla order is ``(G, G', E, E')``.

Pauli operators follow the subspace convention used throughout the package:
for a level pair ``(J, K)``

    σx = |K><J| + |J><K|
    σy = -i (|K><J| - |J><K|)
    σz = |K><K| - |J><J|

so for a qubit (J = g, K = e) the ground state has ``<σz> = -1``.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .linalg import (
    TOL,
    DensityMatrix,
    LinalgError,
    StateVector,
    is_unitary,
    matrix_exponential,
    partial_trace,
)

__all__ = [
    "AncillaLevel",
    "Stage",
    "ProtocolError",
    "ProtocolState",
    "ProbVector",
    "BlochVector",
    "PAULI",
    "TETRAHEDRON",
    "PREPARATION_ANGLES",
    "subspace_pauli",
    "subspace_rotation",
    "initial_state",
    "prepare_ancilla",
    "controlled_unitary",
    "run_controlled_stage",
    "run_final_rotations",
    "run_protocol",
    "povm_elements",
    "ancilla_probabilities",
    "probabilities_from_bloch",
    "bloch_from_probabilities",
    "bloch_from_density",
    "squared_concurrence_from_probabilities",
    "concurrence_from_probabilities",
    "concurrence_oracle",
    "amplitude_concurrence",
    "wootters_concurrence",
    "mixed_state_bias",
    "mixed_state_difference",
]

ANCILLA, TARGET, SPECTATOR = 0, 1, 2
FACTOR_DIMS = (4, 2, 2)


class AncillaLevel(enum.IntEnum):
    G = 0
    Gp = 1
    E = 2
    Ep = 3


class Stage(enum.IntEnum):
    Initial = 0
    Prepared = 1
    Controlled = 2
    Final = 3


class ProtocolError(RuntimeError):
    """A protocol step was applied out of order or to an invalid input."""


_AXES = ("x", "y", "z")


def subspace_pauli(axis: str, j: int, k: int, dim: int) -> np.ndarray:
    """Pauli operator on span{|j>, |k>} inside a ``dim``-level space, zero elsewhere."""
    if axis not in _AXES:
        raise ValueError(f"axis must be one of {_AXES}, got {axis!r}")
    j, k = int(j), int(k)
    if j == k:
        raise ValueError("subspace Pauli needs two distinct levels")
    if not (0 <= j < dim and 0 <= k < dim):
        raise ValueError(f"levels ({j}, {k}) out of range for dimension {dim}")
    m = np.zeros((dim, dim), dtype=complex)
    if axis == "x":
        m[k, j] = m[j, k] = 1.0
    elif axis == "y":
        m[k, j] = -1j
        m[j, k] = 1j
    else:
        m[k, k] = 1.0
        m[j, j] = -1.0
    return m


def subspace_rotation(axis: str, j: int, k: int, theta: float, dim: int) -> np.ndarray:
    """``exp(-i θ/2 σ_axis^{jk})``; identity outside the two-level block."""
    return matrix_exponential(subspace_pauli(axis, j, k, dim), -0.5j * theta)


PAULI = {
    "i": np.eye(2, dtype=complex),
    "x": subspace_pauli("x", 0, 1, 2),
    "y": subspace_pauli("y", 0, 1, 2),
    "z": subspace_pauli("z", 0, 1, 2),
}
for _m in PAULI.values():
    _m.setflags(write=False)

# Sign pattern of (σx, σy, σz) in each of the four POVM elements, ancilla order.
TETRAHEDRON = np.array([[1, 1, 1], [1, -1, -1], [-1, 1, -1], [-1, -1, 1]], dtype=float)

# R_y(θ)|J> = cos(θ/2)|J> - sin(θ/2)|K>, so negative angles give + signs.
PREPARATION_ANGLES = (
    -2.0 * np.arcsin(1.0 / np.sqrt(6.0)),
    -2.0 * np.arcsin(np.sqrt(2.0 / 5.0)),
    np.pi / 2.0,
)

_PREPARATION_PAIRS = ((AncillaLevel.G, AncillaLevel.E), (AncillaLevel.G, AncillaLevel.Gp), (AncillaLevel.Gp, AncillaLevel.Ep))
_FINAL_PAIRS = (
    (AncillaLevel.G, AncillaLevel.E),
    (AncillaLevel.Gp, AncillaLevel.Ep),
    (AncillaLevel.G, AncillaLevel.Gp),
    (AncillaLevel.E, AncillaLevel.Ep),
)
CONTROLLED_OPERATIONS = (
    (AncillaLevel.Gp, PAULI["y"]),
    (AncillaLevel.E, PAULI["x"]),
    (AncillaLevel.Ep, -PAULI["z"]),
)


@dataclass(frozen=True)
class ProtocolState:
    state: StateVector
    stage: Stage = Stage.Initial

    def __post_init__(self):
        if self.state.factor_dims != FACTOR_DIMS:
            raise ProtocolError(f"protocol state must have factor dims {FACTOR_DIMS}, got {self.state.factor_dims}")
        if not self.state.is_normalized():
            raise ProtocolError(f"protocol state norm {self.state.norm()!r} deviates from 1")

    def ancilla_component(self, level: AncillaLevel) -> np.ndarray:
        """Unnormalised two-qubit vector attached to one ancilla level."""
        return self.state.tensor()[int(level)].reshape(-1)


@dataclass(frozen=True)
class ProbVector:
    p_g: float
    p_gp: float
    p_e: float
    p_ep: float

    def __post_init__(self):
        arr = self.as_array()
        if np.any(arr < -TOL.normalization) or np.any(arr > 1 + TOL.normalization):
            raise ValueError(f"probabilities outside [0, 1]: {arr}")
        if abs(arr.sum() - 1.0) > TOL.normalization:
            raise ValueError(f"probabilities sum to {arr.sum()!r}, not 1")

    @classmethod
    def from_array(cls, p: Sequence[float]) -> "ProbVector":
        p = np.asarray(p, dtype=float)
        if p.shape != (4,):
            raise ValueError(f"need four probabilities, got shape {p.shape}")
        return cls(*(float(x) for x in p))

    def as_array(self) -> np.ndarray:
        return np.array([self.p_g, self.p_gp, self.p_e, self.p_ep], dtype=float)


@dataclass(frozen=True)
class BlochVector:
    sx: float
    sy: float
    sz: float

    def as_array(self) -> np.ndarray:
        return np.array([self.sx, self.sy, self.sz], dtype=float)

    def norm(self) -> float:
        return float(np.linalg.norm(self.as_array()))

    @property
    def is_physical(self) -> bool:
        return self.norm() ** 2 <= 1.0 + TOL.normalization


def _require_stage(state: ProtocolState, stage: Stage) -> None:
    if state.stage != stage:
        raise ProtocolError(f"expected stage {stage.name}, got {state.stage.name}")


def _as_two_qubit(chi) -> np.ndarray:
    if isinstance(chi, StateVector):
        if chi.dim != 4:
            raise ValueError(f"expected a two-qubit state, got dims {chi.factor_dims}")
        chi = chi.amplitudes
    v = np.asarray(chi, dtype=complex).reshape(-1)
    if v.shape != (4,):
        raise ValueError(f"expected four amplitudes (gg, ge, eg, ee), got {v.size}")
    if abs(np.linalg.norm(v) - 1.0) > TOL.input_normalization:
        raise ValueError(f"two-qubit state is not normalised (norm {np.linalg.norm(v)!r})")
    return v


def initial_state(chi) -> ProtocolState:
    """``|G> ⊗ |χ>``; ``chi`` holds amplitudes in order (gg, ge, eg, ee), target qubit first."""
    v = _as_two_qubit(chi)
    anc = np.zeros(4, dtype=complex)
    anc[AncillaLevel.G] = 1.0
    return ProtocolState(StateVector(FACTOR_DIMS, np.kron(anc, v)), Stage.Initial)


def _rotate_ancilla(sv: StateVector, pair, theta: float) -> StateVector:
    return sv.apply(subspace_rotation("y", pair[0], pair[1], theta, 4), [ANCILLA])


def prepare_ancilla(state: ProtocolState) -> ProtocolState:
    """Three ancilla rotations taking |G> to (|G> + (|G'> + |E> - |E'>)/√3)/√2."""
    _require_stage(state, Stage.Initial)
    anc = state.state.marginal_probabilities(ANCILLA)
    if abs(anc[AncillaLevel.G] - 1.0) > TOL.structural:
        raise ProtocolError("ancilla preparation requires the ancilla in |G>")
    sv = state.state
    for pair, theta in zip(_PREPARATION_PAIRS, PREPARATION_ANGLES):
        sv = _rotate_ancilla(sv, pair, theta)
    return ProtocolState(sv, Stage.Prepared)


def controlled_unitary(state: ProtocolState, control: AncillaLevel, u: np.ndarray) -> ProtocolState:
    """Apply ``u`` to the target qubit on the branch where the ancilla is in ``control``."""
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2) or not is_unitary(u):
        raise ProtocolError("controlled operation needs a unitary 2x2 matrix")
    proj = np.zeros((4, 4), dtype=complex)
    proj[int(control), int(control)] = 1.0
    op = np.kron(proj, u) + np.kron(np.eye(4) - proj, np.eye(2))
    return ProtocolState(state.state.apply(op, [ANCILLA, TARGET]), state.stage)


def run_controlled_stage(state: ProtocolState) -> ProtocolState:
    """C^{G'}(σy), C^{E}(σx), C^{E'}(-σz)."""
    _require_stage(state, Stage.Prepared)
    for control, u in CONTROLLED_OPERATIONS:
        state = controlled_unitary(state, control, u)
    return ProtocolState(state.state, Stage.Controlled)


def run_final_rotations(state: ProtocolState) -> ProtocolState:
    """R_y(π/2) on (G,E), (G',E'), (G,G'), (E,E'), applied in that order."""
    _require_stage(state, Stage.Controlled)
    sv = state.state
    for pair in _FINAL_PAIRS:
        sv = _rotate_ancilla(sv, pair, np.pi / 2)
    return ProtocolState(sv, Stage.Final)


def run_protocol(chi) -> ProtocolState:
    """Full gate-level protocol on ``|G>|χ>``; returns the final-stage state."""
    return run_final_rotations(run_controlled_stage(prepare_ancilla(initial_state(chi))))


def povm_elements():
    """Return ``(Q, effects)``: the four operators Q_A and the POVM effects Q_A², ancilla order."""
    q_ops = []
    for signs in TETRAHEDRON:
        bloch_part = sum(s * PAULI[a] for s, a in zip(signs, _AXES))
        q_ops.append((PAULI["i"] + bloch_part / np.sqrt(3.0)) / (2.0 * np.sqrt(2.0)))
    return tuple(q_ops), tuple(q @ q for q in q_ops)


def ancilla_probabilities(state: ProtocolState) -> ProbVector:
    _require_stage(state, Stage.Final)
    p = state.state.marginal_probabilities(ANCILLA)
    return ProbVector.from_array(p / p.sum())


def probabilities_from_bloch(bloch: BlochVector) -> ProbVector:
    """Tetrahedral POVM outcome probabilities of a qubit with Bloch vector ``bloch``."""
    return ProbVector.from_array(0.25 * (1.0 + TETRAHEDRON @ bloch.as_array() / np.sqrt(3.0)))


def bloch_from_probabilities(p, exact: bool = True) -> BlochVector:
    """Linear inversion of the tetrahedral probabilities.

    With ``exact`` the probabilities must already sum to one (within 1e-9);
    otherwise they are renormalised first, which is what sampled frequencies need.
    """
    arr = p.as_array() if isinstance(p, ProbVector) else np.asarray(p, dtype=float)
    total = arr.sum()
    if exact and abs(total - 1.0) > TOL.input_normalization:
        raise ValueError(f"probabilities sum to {total!r}, not 1")
    if not exact:
        arr = arr / total
    s = np.sqrt(3.0) * TETRAHEDRON.T @ arr
    return BlochVector(*(float(x) for x in s))


def bloch_from_density(rho) -> BlochVector:
    m = rho if isinstance(rho, DensityMatrix) else DensityMatrix(rho)
    return BlochVector(*(m.expectation(PAULI[a]) for a in _AXES))


def squared_concurrence_from_probabilities(p) -> float:
    """``4 (1 - 3 Σ P_A²)`` without clamping."""
    arr = p.as_array() if isinstance(p, ProbVector) else np.asarray(p, dtype=float)
    return float(4.0 * (1.0 - 3.0 * np.sum(arr**2)))


def concurrence_from_probabilities(p) -> float:
    """Concurrence from the four ancilla populations; a negative radicand clamps to 0."""
    return float(np.sqrt(max(0.0, squared_concurrence_from_probabilities(p))))


def amplitude_concurrence(chi) -> float:
    """``2 |a d - b c|`` for ``a|gg> + b|ge> + c|eg> + d|ee>``."""
    a, b, c, d = _as_two_qubit(chi)
    return float(2.0 * abs(a * d - b * c))


def concurrence_oracle(chi) -> float:
    """Pure-state concurrence from the determinant of the reduced target-qubit state.

    Cross-checked against :func:`amplitude_concurrence`; disagreement beyond
    1e-10 raises.
    """
    v = _as_two_qubit(chi)
    v = v / np.linalg.norm(v)
    rho_q = partial_trace(np.outer(v, v.conj()), (2, 2), 0).matrix
    c = float(np.sqrt(max(0.0, 4.0 * np.linalg.det(rho_q).real)))
    c_amp = amplitude_concurrence(v)
    if abs(c - c_amp) > TOL.structural:
        raise LinalgError(f"concurrence oracles disagree: det route {c!r}, amplitude route {c_amp!r}")
    return c


_YY = np.kron(PAULI["y"], PAULI["y"])


def wootters_concurrence(rho) -> float:
    """Two-qubit mixed-state concurrence max(0, l1 - l2 - l3 - l4).

    The l_i are the singular values of sqrt(ρ) sqrt(ρ̃), which avoids taking
    square roots of the tiny eigenvalues of ρ ρ̃ for nearly pure states.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    if m.shape != (4, 4):
        raise ValueError(f"expected a 4x4 density matrix, got {m.shape}")
    w, v = np.linalg.eigh(m)
    sqrt_rho = (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T
    # sqrt(ρ̃) = YY sqrt(ρ)* YY; the trailing YY does not change singular values
    lam = np.linalg.svd(sqrt_rho @ _YY @ sqrt_rho.conj(), compute_uv=False)
    return float(max(0.0, lam[0] - lam[1:].sum()))


def _check_lambda(lam: float) -> None:
    if not 0.0 <= lam <= 1.0:
        raise ValueError(f"mixing weight must lie in [0, 1], got {lam!r}")


def mixed_state_bias(rho_prime, chi, lam: float) -> float:
    """Leading-order bias ``-2 λ (1 - P·P')`` of the protocol on ``λ ρ' + (1-λ)|χ><χ|``.

    ``P`` and ``P'`` are the target-qubit Bloch vectors of ``|χ>`` and ``ρ'``.
    The bias is (true C²) minus (protocol C²).  The expansion is first-order
    exact when ``ρ'`` is a pure product state; a mixed product ``ρ'`` adds a
    further first-order term to the true concurrence.
    """
    _check_lambda(lam)
    v = _as_two_qubit(chi)
    p_chi = bloch_from_density(partial_trace(np.outer(v, v.conj()), (2, 2), 0))
    p_prime = bloch_from_density(partial_trace(rho_prime, (2, 2), 0))
    return float(-2.0 * lam * (1.0 - p_chi.as_array() @ p_prime.as_array()))


def mixed_state_difference(rho_prime, chi, lam: float) -> float:
    """Actual (true C²) - (protocol C²) for the mixture ``λ ρ' + (1-λ)|χ><χ|``.

    The protocol value is what the ancilla populations report when the
    mixture is fed in, i.e. ``4 det`` of the mixture's reduced target state;
    the true value is the mixed-state (Wootters) concurrence squared.
    """
    _check_lambda(lam)
    v = _as_two_qubit(chi)
    rp = rho_prime.matrix if isinstance(rho_prime, DensityMatrix) else np.asarray(rho_prime, dtype=complex)
    rho = DensityMatrix(lam * rp + (1.0 - lam) * np.outer(v, v.conj()))
    bloch = bloch_from_density(partial_trace(rho, (2, 2), 0))
    reported = squared_concurrence_from_probabilities(probabilities_from_bloch(bloch))
    return wootters_concurrence(rho) ** 2 - reported
