"""Quantum-state and simplex value types shared by every other module.

All types are frozen dataclasses wrapping read-only numpy arrays, so they can
be shared freely between threads.
"""

from __future__ import annotations

import enum
from dataclasses import InitVar, dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import (
    InvalidNoise,
    InvalidSigns,
    NonRealDiagonal,
    NotHermitian,
    NotNormalized,
    NotPositiveSemidefinite,
    TooShort,
    ValidationError,
)

INPUT_TOL = 1e-9
INTERNAL_TOL = 1e-12
ETA_SUM_BOUND = 0.9


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


class UpdateMode(enum.Enum):
    """Which single-step update law to use."""

    PAPER_SECOND_ORDER = "paper_second_order"
    EXACT_PRODUCT = "exact_product"

    @classmethod
    def parse(cls, value: Union[str, "UpdateMode"]) -> "UpdateMode":
        if isinstance(value, cls):
            return value
        key = str(value).strip().replace("-", "_")
        aliases = {
            "paper_second_order": cls.PAPER_SECOND_ORDER,
            "papersecondorder": cls.PAPER_SECOND_ORDER,
            "paper": cls.PAPER_SECOND_ORDER,
            "second_order": cls.PAPER_SECOND_ORDER,
            "exact_product": cls.EXACT_PRODUCT,
            "exactproduct": cls.EXACT_PRODUCT,
            "exact": cls.EXACT_PRODUCT,
        }
        try:
            return aliases[key.lower()]
        except KeyError:
            raise ValidationError(f"unknown update mode {value!r}") from None


@dataclass(frozen=True)
class StateVector:
    """Normalized amplitudes of the microsystem out-state in the measurement basis."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.ndim != 1 or amps.size < 2:
            raise TooShort(f"a state needs at least 2 amplitudes, got shape {amps.shape}")
        if not np.all(np.isfinite(amps)):
            raise ValidationError("amplitudes must be finite")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > INPUT_TOL:
            raise NotNormalized(f"sum of |psi_j|^2 is {norm!r}, expected 1")
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def n(self) -> int:
        return self.amplitudes.size

    @property
    def is_real(self) -> bool:
        return bool(np.all(self.amplitudes.imag == 0.0))

    @property
    def probabilities(self) -> "SimplexPoint":
        return SimplexPoint(np.abs(self.amplitudes) ** 2)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive semidefinite n x n matrix.

    Real input is kept real (the fast path used when the state vector is real).
    ``require_psd=False`` skips only the eigenvalue check; the second-order
    update law can leave the PSD cone by O(eta^2) and uses it.
    """

    entries: np.ndarray
    require_psd: InitVar[bool] = True

    def __post_init__(self, require_psd: bool):
        m = np.asarray(self.entries)
        if not (np.issubdtype(m.dtype, np.floating) or np.issubdtype(m.dtype, np.complexfloating)):
            m = m.astype(float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValidationError(f"density matrix must be square, got shape {m.shape}")
        if m.shape[0] < 2:
            raise TooShort("density matrix dimension must be at least 2")
        if not np.all(np.isfinite(m)):
            raise ValidationError("density matrix entries must be finite")
        if np.max(np.abs(m - m.conj().T)) > INTERNAL_TOL:
            raise NotHermitian("density matrix is not Hermitian")
        tr = np.trace(m)
        if abs(tr - 1.0) > INPUT_TOL:
            raise NotNormalized(f"trace is {tr!r}, expected 1")
        if require_psd:
            lam = float(np.linalg.eigvalsh(m)[0])
            if lam < -INPUT_TOL:
                raise NotPositiveSemidefinite(f"smallest eigenvalue {lam!r} < 0")
        object.__setattr__(self, "entries", _frozen(m))

    @property
    def n(self) -> int:
        return self.entries.shape[0]

    def offdiag_frobenius(self) -> float:
        off = self.entries - np.diag(np.diag(self.entries))
        return float(np.sqrt(np.sum(np.abs(off) ** 2)))


@dataclass(frozen=True)
class SimplexPoint:
    probabilities: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probabilities, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise TooShort(f"simplex point needs at least 2 coordinates, got shape {p.shape}")
        if not np.all(np.isfinite(p)) or np.any(p < 0.0):
            raise ValidationError("probabilities must be finite and nonnegative")
        total = float(np.sum(p))
        if abs(total - 1.0) > INPUT_TOL:
            raise NotNormalized(f"probabilities sum to {total!r}, expected 1")
        object.__setattr__(self, "probabilities", _frozen(p))

    @property
    def n(self) -> int:
        return self.probabilities.size

    def __iter__(self):
        return iter(self.probabilities.tolist())

    def __len__(self):
        return self.n


@dataclass(frozen=True)
class EpsilonDraw:
    """Sign configuration: shape (n,) for one step or (n, X) for a full table."""

    signs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.signs)
        if s.ndim not in (1, 2) or s.size == 0:
            raise InvalidSigns(f"signs must be a vector or an n x X table, got shape {s.shape}")
        if not np.all((s == 1) | (s == -1)):
            raise InvalidSigns("every sign must be exactly +1 or -1")
        object.__setattr__(self, "signs", _frozen(s.astype(np.int8)))

    @property
    def n(self) -> int:
        return self.signs.shape[0]

    def pattern(self) -> str:
        """``"+-"``-style string, channels first then steps."""
        flat = self.signs.T.ravel() if self.signs.ndim == 2 else self.signs
        return "".join("+" if v > 0 else "-" for v in flat)


@dataclass(frozen=True)
class NoiseSchedule:
    """Coupling strengths eta[l, x] for channel l and step x (1-based steps).

    A schedule with a single column applies the same couplings at every step.
    """

    table: np.ndarray
    constant: bool = field(default=False)

    def __post_init__(self):
        t = np.asarray(self.table, dtype=float)
        if t.ndim == 1:
            t = t[:, None]
        if t.ndim != 2 or t.shape[0] < 2 or t.shape[1] < 1:
            raise InvalidNoise(f"eta table must be n x X with n >= 2, got shape {t.shape}")
        if not np.all(np.isfinite(t)):
            raise InvalidNoise("eta values must be finite")
        if np.any(t <= 0.0) or np.any(t >= 1.0):
            raise InvalidNoise("every eta must satisfy 0 < eta < 1")
        col_sums = t.sum(axis=0)
        worst = int(np.argmax(col_sums))
        if col_sums[worst] > ETA_SUM_BOUND + 1e-15:
            raise InvalidNoise(
                f"sum_l eta = {col_sums[worst]:.6g} > {ETA_SUM_BOUND} at step {worst + 1}"
            )
        object.__setattr__(self, "constant", bool(self.constant or t.shape[1] == 1))
        object.__setattr__(self, "table", _frozen(t))

    @classmethod
    def uniform(cls, eta: float, n: int) -> "NoiseSchedule":
        return cls(np.full((n, 1), float(eta)), constant=True)

    @classmethod
    def per_channel(cls, eta: Sequence[float]) -> "NoiseSchedule":
        return cls(np.asarray(eta, dtype=float)[:, None], constant=True)

    @classmethod
    def from_table(cls, table) -> "NoiseSchedule":
        return cls(np.asarray(table, dtype=float), constant=False)

    @property
    def n(self) -> int:
        return self.table.shape[0]

    @property
    def steps(self) -> int | None:
        """Number of tabulated steps, or None when the schedule is constant."""
        return None if self.constant else self.table.shape[1]

    def at(self, step: int) -> np.ndarray:
        """Couplings used in step ``step`` (1-based)."""
        if step < 1:
            raise ValueError("steps are numbered from 1")
        if self.constant:
            return self.table[:, 0]
        if step > self.table.shape[1]:
            raise InvalidNoise(f"schedule covers {self.table.shape[1]} steps, step {step} requested")
        return self.table[:, step - 1]

    def covers(self, steps: int) -> bool:
        return self.constant or self.table.shape[1] >= steps


def new_state_vector(amplitudes: Sequence[complex]) -> StateVector:
    return StateVector(np.asarray(amplitudes, dtype=complex))


def density_from_state(psi: StateVector) -> DensityMatrix:
    """Pure-state density matrix rho_jk = psi_j conj(psi_k)."""
    a = psi.amplitudes
    if psi.is_real:
        a = a.real
    return DensityMatrix(np.outer(a, a.conj()))


def _probabilities(p) -> np.ndarray:
    if isinstance(p, SimplexPoint):
        return p.probabilities
    return np.asarray(p, dtype=float)


def entropy(p: Union[SimplexPoint, Sequence[float]]) -> float:
    """Shannon entropy -sum p ln p with 0 ln 0 = 0."""
    q = _probabilities(p)
    nz = q[q > 0.0]
    return float(-np.sum(nz * np.log(nz)))


def diagonal(rho: DensityMatrix) -> SimplexPoint:
    d = np.diag(rho.entries)
    if np.iscomplexobj(d):
        if np.any(np.abs(d.imag) > INTERNAL_TOL):
            raise NonRealDiagonal("density matrix has a non-real diagonal entry")
        d = d.real
    return SimplexPoint(np.clip(d, 0.0, None) if np.all(d > -INTERNAL_TOL) else d)
