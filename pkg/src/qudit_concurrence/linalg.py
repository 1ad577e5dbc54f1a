"""Dense complex linear algebra on small composite Hilbert spaces.

Everything here works on plain ``numpy`` arrays.  The two container types,
:class:`StateVector` and :class:`DensityMatrix`, only add the tensor-factor
bookkeeping and validation on construction; they are frozen and their arrays
are marked read-only, so they can be shared freely between threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg

__all__ = [
    "TOL",
    "Tolerances",
    "LinalgError",
    "StateVector",
    "DensityMatrix",
    "kron",
    "kron_all",
    "matrix_exponential",
    "partial_trace",
    "apply_operator",
    "is_hermitian",
    "is_unitary",
    "phase_insensitive_overlap",
    "basis_vector",
]


@dataclass(frozen=True)
class Tolerances:
    structural: float = 1e-10
    normalization: float = 1e-12
    min_eigenvalue: float = -1e-10
    input_normalization: float = 1e-9
    max_dim: int = 4096


TOL = Tolerances()


class LinalgError(ValueError):
    """Raised on shape mismatches and violated structural preconditions."""


def _frozen(a, dtype=complex) -> np.ndarray:
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


def is_hermitian(m: np.ndarray, atol: float = TOL.structural) -> bool:
    m = np.asarray(m)
    return m.ndim == 2 and m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, rtol=0, atol=atol)


def is_unitary(m: np.ndarray, atol: float = TOL.structural) -> bool:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return np.max(np.abs(m.conj().T @ m - np.eye(m.shape[0]))) < atol


def kron(a: np.ndarray, b: np.ndarray, max_dim: int = TOL.max_dim) -> np.ndarray:
    """Kronecker product ``a ⊗ b``; fails if either side of the result exceeds ``max_dim``."""
    a = np.atleast_1d(np.asarray(a))
    b = np.atleast_1d(np.asarray(b))
    if a.size == 0 or b.size == 0:
        raise LinalgError("kron of an empty matrix")
    rows = a.shape[0] * b.shape[0]
    cols = (a.shape[1] if a.ndim > 1 else 1) * (b.shape[1] if b.ndim > 1 else 1)
    if rows > max_dim or cols > max_dim:
        raise LinalgError(f"kron result {rows}x{cols} exceeds maximum dimension {max_dim}")
    return np.kron(a, b)


def kron_all(*ops: np.ndarray, max_dim: int = TOL.max_dim) -> np.ndarray:
    """Left-folded Kronecker product of several factors."""
    if not ops:
        raise LinalgError("kron_all needs at least one factor")
    return reduce(lambda x, y: kron(x, y, max_dim=max_dim), ops)


def matrix_exponential(h: np.ndarray, scale: complex = 1.0) -> np.ndarray:
    """Return ``exp(scale * h)`` for a Hermitian matrix ``h``.

    Uses scaling and squaring with a Padé approximant (``scipy.linalg.expm``).
    With a purely imaginary ``scale`` the result is unitary.
    """
    h = np.asarray(h, dtype=complex)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise LinalgError(f"matrix_exponential needs a square matrix, got shape {h.shape}")
    if not is_hermitian(h):
        raise LinalgError("matrix_exponential expects a Hermitian generator")
    return scipy.linalg.expm(complex(scale) * h)


def partial_trace(rho, factor_dims: Sequence[int], keep) -> "DensityMatrix":
    """Trace out every factor except ``keep`` (an index or a sequence of indices).

    Kept factors stay in their original order.
    """
    matrix = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho, dtype=complex)
    dims = [int(d) for d in factor_dims]
    total = int(np.prod(dims))
    if matrix.shape != (total, total):
        raise LinalgError(f"density matrix of shape {matrix.shape} does not match factor dims {dims}")
    keep_idx = [keep] if np.isscalar(keep) else list(keep)
    n = len(dims)
    if not keep_idx or any(not 0 <= k < n for k in keep_idx) or len(set(keep_idx)) != len(keep_idx):
        raise LinalgError(f"invalid kept factor(s) {keep!r} for {n} factors")
    keep_idx = sorted(keep_idx)
    traced = [i for i in range(n) if i not in keep_idx]

    t = matrix.reshape(dims + dims)
    # einsum labels: row index i -> letter i, column index i -> letter n + i
    letters = [chr(ord("a") + i) for i in range(2 * n)]
    for i in traced:
        letters[n + i] = letters[i]
    out = "".join(letters[i] for i in keep_idx) + "".join(letters[n + i] for i in keep_idx)
    reduced = np.einsum("".join(letters) + "->" + out, t)
    d = int(np.prod([dims[i] for i in keep_idx]))
    return DensityMatrix(reduced.reshape(d, d))


def apply_operator(amplitudes: np.ndarray, op: np.ndarray, factor_dims: Sequence[int], targets: Sequence[int]) -> np.ndarray:
    """Apply ``op`` to the listed tensor factors of a state vector, identity elsewhere.

    ``op`` acts on the factors in the order given by ``targets``, which need not be
    contiguous or sorted.
    """
    dims = tuple(int(d) for d in factor_dims)
    targets = tuple(targets)
    sub = tuple(dims[t] for t in targets)
    d = int(np.prod(sub))
    if op.shape != (d, d):
        raise LinalgError(f"operator shape {op.shape} does not match target factors {sub}")
    psi = np.asarray(amplitudes, dtype=complex).reshape(dims)
    op_t = np.asarray(op).reshape(sub + sub)
    k = len(targets)
    out = np.tensordot(op_t, psi, axes=(list(range(k, 2 * k)), list(targets)))
    out = np.moveaxis(out, list(range(k)), list(targets))
    return out.reshape(-1)


def phase_insensitive_overlap(a, b) -> float:
    """``|<a|b>|`` for two state vectors (global phase quotiented out)."""
    va = a.amplitudes if isinstance(a, StateVector) else np.asarray(a)
    vb = b.amplitudes if isinstance(b, StateVector) else np.asarray(b)
    return float(abs(np.vdot(va, vb)))


def basis_vector(dim: int, index: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


@dataclass(frozen=True)
class StateVector:
    """Pure state on a tensor product with explicit factor dimensions."""

    factor_dims: tuple
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        dims = tuple(int(d) for d in self.factor_dims)
        if not dims or any(d < 1 for d in dims):
            raise LinalgError(f"factor dimensions must be positive, got {self.factor_dims}")
        amps = _frozen(np.ravel(self.amplitudes))
        if amps.size != int(np.prod(dims)):
            raise LinalgError(f"{amps.size} amplitudes do not fit factor dims {dims}")
        object.__setattr__(self, "factor_dims", dims)
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def product(cls, *factors) -> "StateVector":
        vecs = [np.ravel(np.asarray(f, dtype=complex)) for f in factors]
        return cls(tuple(v.size for v in vecs), kron_all(*vecs))

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, atol: float = TOL.normalization) -> bool:
        return abs(self.norm() - 1.0) < atol

    def tensor(self) -> np.ndarray:
        return self.amplitudes.reshape(self.factor_dims)

    def apply(self, op: np.ndarray, targets: Sequence[int]) -> "StateVector":
        return StateVector(self.factor_dims, apply_operator(self.amplitudes, op, self.factor_dims, targets))

    def density_matrix(self) -> "DensityMatrix":
        return DensityMatrix(np.outer(self.amplitudes, self.amplitudes.conj()))

    def reduced(self, keep) -> "DensityMatrix":
        return partial_trace(self.density_matrix(), self.factor_dims, keep)

    def marginal_probabilities(self, factor: int) -> np.ndarray:
        """Occupation probabilities of the basis states of one factor."""
        t = np.abs(self.tensor()) ** 2
        axes = tuple(i for i in range(len(self.factor_dims)) if i != factor)
        return t.sum(axis=axes)


@dataclass(frozen=True)
class DensityMatrix:
    """Validated density matrix: Hermitian, unit trace, positive semidefinite."""

    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = _frozen(self.matrix)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
            raise LinalgError(f"density matrix must be square, got shape {m.shape}")
        if not np.allclose(m, m.conj().T, rtol=0, atol=TOL.normalization):
            raise LinalgError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > TOL.normalization:
            raise LinalgError(f"density matrix trace {np.trace(m).real!r} != 1")
        if np.linalg.eigvalsh(m).min() < TOL.min_eigenvalue:
            raise LinalgError("density matrix has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def expectation(self, op: np.ndarray) -> float:
        return float(np.trace(self.matrix @ op).real)
