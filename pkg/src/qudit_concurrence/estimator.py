"""Finite-shot estimation of the ancilla distribution, Bloch vector and concurrence.

Two estimators of the squared concurrence are provided.  ``plugin`` puts the
observed frequencies straight into ``4 (1 - 3 Σ P²)`` and is biased, since
``E[Σ n_A² / N²] = Σ P² + (1 - Σ P²) / N``.  ``unbiased_sum_of_squares``
replaces ``Σ P²`` by ``Σ n_A (n_A - 1) / (N (N - 1))``, whose expectation is
exactly ``Σ P²``.

Standard errors come from the delta method on the multinomial covariance
``(diag(p) - p pᵀ) / N``, or optionally from a parametric bootstrap.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .gate_model import TETRAHEDRON, BlochVector, ProbVector

__all__ = [
    "Method",
    "ShotRecord",
    "Estimate",
    "BlochEstimate",
    "sample_counts",
    "estimate_concurrence",
    "estimate_bloch",
]


class Method(str, enum.Enum):
    plugin = "plugin"
    unbiased_sum_of_squares = "unbiased_sum_of_squares"


@dataclass(frozen=True)
class ShotRecord:
    counts: tuple
    shots: int
    seed: int | None = None

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) != 4 or any(c < 0 for c in counts):
            raise ValueError(f"need four non-negative counts, got {self.counts}")
        if sum(counts) != self.shots:
            raise ValueError(f"counts sum to {sum(counts)}, expected {self.shots} shots")
        object.__setattr__(self, "counts", counts)

    @property
    def frequencies(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.shots


@dataclass(frozen=True)
class Estimate:
    """Concurrence estimate.

    ``value``/``std_error`` refer to C.  ``c_squared_raw`` is the estimator of
    C² before clamping, which is what averages to the truth for the unbiased
    method; ``c_squared`` is clamped to [0, 4].
    """

    value: float
    std_error: float
    method: Method
    c_squared: float
    c_squared_raw: float
    c_squared_std_error: float
    clamped: bool

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "method": self.method.value,
            "c_squared": self.c_squared,
            "c_squared_raw": self.c_squared_raw,
            "c_squared_std_error": self.c_squared_std_error,
            "clamped": self.clamped,
        }


@dataclass(frozen=True)
class BlochEstimate:
    bloch: BlochVector
    std_errors: tuple
    physical: bool


def sample_counts(p, shots: int, seed=None) -> ShotRecord:
    """One multinomial draw of ``shots`` outcomes; same (p, shots, seed) gives the same record."""
    if shots < 1:
        raise ValueError("shots must be at least 1")
    arr = p.as_array() if isinstance(p, ProbVector) else np.asarray(p, dtype=float)
    arr = np.clip(arr, 0.0, None)
    arr = arr / arr.sum()
    counts = np.random.default_rng(seed).multinomial(int(shots), arr)
    return ShotRecord(tuple(int(c) for c in counts), int(shots), seed)


def _sum_of_squares(counts: np.ndarray, shots: int, method: Method) -> float:
    if method is Method.plugin:
        return float(np.sum((counts / shots) ** 2))
    return float(np.sum(counts * (counts - 1.0)) / (shots * (shots - 1.0)))


def _delta_variance_c2(p: np.ndarray, shots: int) -> float:
    # Var(Σ p̂²) ≈ 4 (Σ p³ - (Σ p²)²) / N, and C² = 4 - 12 Σ p²
    var_s = 4.0 * (np.sum(p**3) - np.sum(p**2) ** 2) / shots
    return 144.0 * max(var_s, 0.0)


def _c_std_error(c2: float, c2_se: float) -> float:
    if c2 > 0.0:
        return c2_se / (2.0 * np.sqrt(c2))
    # C = sqrt(C²) has no finite derivative at 0; report the natural scale instead
    return float(np.sqrt(c2_se))


def estimate_concurrence(rec: ShotRecord, method=Method.plugin, bootstrap: int = 0, seed=None) -> Estimate:
    """Concurrence from outcome counts.

    With ``bootstrap > 0`` the standard errors are the spread of that many
    parametric resamples drawn from the observed frequencies (seeded by
    ``seed``) instead of the delta method.
    """
    method = Method(method)
    shots = rec.shots
    if method is Method.unbiased_sum_of_squares and shots < 2:
        raise ValueError("the unbiased estimator needs at least 2 shots")
    counts = np.asarray(rec.counts, dtype=float)
    c2_raw = 4.0 * (1.0 - 3.0 * _sum_of_squares(counts, shots, method))
    c2 = float(np.clip(c2_raw, 0.0, 4.0))
    value = float(np.sqrt(c2))

    if bootstrap > 0:
        rng = np.random.default_rng(seed)
        resampled = rng.multinomial(shots, rec.frequencies, size=int(bootstrap)).astype(float)
        c2_boot = np.array([4.0 * (1.0 - 3.0 * _sum_of_squares(row, shots, method)) for row in resampled])
        c2_boot = np.clip(c2_boot, 0.0, 4.0)
        c2_se = float(np.std(c2_boot, ddof=1))
        c_se = float(np.std(np.sqrt(c2_boot), ddof=1))
    else:
        c2_se = float(np.sqrt(_delta_variance_c2(rec.frequencies, shots)))
        c_se = _c_std_error(c2, c2_se)
    return Estimate(value, c_se, method, c2, float(c2_raw), c2_se, bool(c2_raw != c2))


_BLOCH_MAP = np.sqrt(3.0) * TETRAHEDRON.T


def estimate_bloch(rec: ShotRecord) -> BlochEstimate:
    """Linear inversion of the observed frequencies; never projected onto the Bloch ball."""
    if rec.shots < 1:
        raise ValueError("shots must be at least 1")
    p = rec.frequencies
    s = _BLOCH_MAP @ p
    cov = _BLOCH_MAP @ (np.diag(p) - np.outer(p, p)) @ _BLOCH_MAP.T / rec.shots
    errors = tuple(float(x) for x in np.sqrt(np.clip(np.diag(cov), 0.0, None)))
    bloch = BlochVector(*(float(x) for x in s))
    return BlochEstimate(bloch, errors, bloch.is_physical)
