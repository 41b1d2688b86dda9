"""Closed-form two-state model.

With two channels, anti-correlated signs and a common coupling eta, a
configuration is summarized by X1, the number of '+' signs on channel 1. The
ensemble over X1 is a two-component binomial mixture; for large X it becomes a
two-Gaussian profile in the pointer variable z = (X1 - X/2) / (X eta).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np
from scipy import special, stats

from .errors import GridTooNarrow, ValidationError
from .seeding import walk_generator

MAX_STEPS = 10**6
GRID_MASS_TOL = 1e-6


@dataclass(frozen=True)
class TwoStateParams:
    psi2: float
    eta: float
    steps: int

    def __post_init__(self):
        if not 0.0 < self.psi2 < 1.0:
            raise ValidationError("psi2 = |psi_1|^2 must lie in (0, 1)")
        if not 0.0 < self.eta < 1.0:
            raise ValidationError("eta must lie in (0, 1)")
        if int(self.steps) != self.steps or self.steps < 0:
            raise ValidationError("steps must be a nonnegative integer")
        object.__setattr__(self, "steps", int(self.steps))

    @property
    def weights(self) -> tuple[float, float]:
        return self.psi2, 1.0 - self.psi2

    @property
    def z_width(self) -> float:
        """Z = 2 X eta^2."""
        return 2.0 * self.steps * self.eta**2


@dataclass(frozen=True)
class BinomialEnsemble:
    x1: np.ndarray
    prob: np.ndarray
    p1: np.ndarray
    p2: np.ndarray

    def rows(self):
        return zip(self.x1.tolist(), self.prob.tolist(), self.p1.tolist(), self.p2.tolist())


@dataclass(frozen=True)
class PointerProfile:
    z: np.ndarray
    q: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    width: float

    def mass(self) -> float:
        return float(np.trapezoid(self.q, self.z))


class PeakShape(enum.Enum):
    FUSED = "fused"
    SEPARATING = "separating"
    DISTINCT = "distinct"


def _posterior(w1: float, w2: float, d: np.ndarray, eta: float) -> tuple[np.ndarray, np.ndarray]:
    # p1 = w1 r^d / (w1 r^d + w2), r = (1+eta)/(1-eta), d = X1 - X2
    logr = math.log1p(eta) - math.log1p(-eta)
    with np.errstate(over="ignore"):
        p1 = w1 / (w1 + w2 * np.exp(-d * logr))
        p2 = w2 / (w2 + w1 * np.exp(d * logr))
    return p1, p2


def binomial_ensemble(params: TwoStateParams) -> BinomialEnsemble:
    """P(X1, X - X1) and the diagonal (p1, p2) for every X1 = 0..X."""
    x = params.steps
    if x > MAX_STEPS:
        raise ValidationError(f"steps must be at most {MAX_STEPS}")
    w1, w2 = params.weights
    eta = params.eta
    x1 = np.arange(x + 1)
    prob = w1 * stats.binom.pmf(x1, x, 0.5 * (1.0 + eta)) + w2 * stats.binom.pmf(x1, x, 0.5 * (1.0 - eta))
    p1, p2 = _posterior(w1, w2, (2 * x1 - x).astype(float), eta)
    return BinomialEnsemble(x1=x1, prob=prob, p1=p1, p2=p2)


def separation_sum(params: TwoStateParams) -> float:
    """Literal ensemble average of sqrt(p1 p2) over the binomial mixture."""
    ens = binomial_ensemble(params)
    return math.fsum((ens.prob * np.sqrt(ens.p1 * ens.p2)).tolist())


def separation_indicator(params: TwoStateParams) -> tuple[float, float]:
    """(exact, asymptotic) mean geometric mean of p1 and p2.

    The binomial average telescopes to |psi1||psi2| (1 - eta^2)^(X/2); the
    Gaussian limit gives |psi1||psi2| exp(-X eta^2 / 2).
    """
    w1, w2 = params.weights
    amp = math.sqrt(w1 * w2)
    x, eta = params.steps, params.eta
    exact = amp * math.exp(0.5 * x * math.log1p(-eta * eta))
    asymptotic = amp * math.exp(-0.5 * x * eta * eta)
    return exact, asymptotic


def pointer_coordinate(x1, steps: int, eta: float):
    return (np.asarray(x1, dtype=float) - 0.5 * steps) / (steps * eta)


def pointer_cdf(z, psi2: float, width: float) -> np.ndarray:
    """CDF of the two-Gaussian pointer density with Z = ``width``."""
    z = np.asarray(z, dtype=float)
    s = math.sqrt(width)
    return psi2 * 0.5 * special.erfc(-s * (z - 0.5)) + (1.0 - psi2) * 0.5 * special.erfc(-s * (z + 0.5))


def _missing_mass_1d(lo: float, hi: float, psi2: float, width: float) -> float:
    return float(pointer_cdf(lo, psi2, width) + 1.0 - pointer_cdf(hi, psi2, width))


def gaussian_pair(z: np.ndarray, psi2: float, width: float) -> tuple[np.ndarray, np.ndarray]:
    norm = math.sqrt(width / math.pi)
    q1 = norm * psi2 * np.exp(-width * (z - 0.5) ** 2)
    q2 = norm * (1.0 - psi2) * np.exp(-width * (z + 0.5) ** 2)
    return q1, q2


def pointer_profile(
    params: TwoStateParams,
    lo: float = -2.0,
    hi: float = 2.0,
    points: int = 4001,
) -> PointerProfile:
    width = params.z_width
    if width <= 0.0:
        raise ValidationError("pointer profile needs Z = 2 X eta^2 > 0")
    if lo > -1.5 or hi < 1.5:
        raise ValidationError("grid must span at least [-1.5, 1.5]")
    missing = _missing_mass_1d(lo, hi, params.psi2, width)
    if missing > GRID_MASS_TOL:
        raise GridTooNarrow(f"grid [{lo}, {hi}] misses {missing:.3g} of the probability mass")
    z = np.linspace(lo, hi, points)
    q1, q2 = gaussian_pair(z, params.psi2, width)
    q = q1 + q2
    with np.errstate(invalid="ignore", divide="ignore"):
        # log-space ratio keeps p1, p2 defined where both Gaussians underflow
        log_ratio = math.log((1.0 - params.psi2) / params.psi2) + width * ((z - 0.5) ** 2 - (z + 0.5) ** 2)
    p1 = special.expit(-log_ratio)
    p2 = special.expit(log_ratio)
    return PointerProfile(z=z, q=q, q1=q1, q2=q2, p1=p1, p2=p2, width=width)


def local_maxima(profile: PointerProfile) -> np.ndarray:
    q = profile.q
    inner = (q[1:-1] > q[:-2]) & (q[1:-1] >= q[2:])
    return profile.z[1:-1][inner]


def peak_separation_diagnosis(params: TwoStateParams) -> PeakShape:
    """Fused below X = eta^-2 / 4, distinct above 10 eta^-2, separating in between."""
    scaled = params.steps * params.eta * params.eta
    if scaled < 0.25:
        return PeakShape.FUSED
    if scaled <= 10.0:
        return PeakShape.SEPARATING
    return PeakShape.DISTINCT


def simulate_walks(
    psi2: float,
    eta: float,
    walks: int,
    seed: int,
    collapse_tol: float = 1e-6,
    max_steps: int = 100_000,
) -> np.ndarray:
    """Sequential two-state walks; returns the corner (0 or 1, -1 unresolved) of each.

    P(eps_1 = +1 | past) = (1 + eta (2 p1 - 1)) / 2, and each step multiplies the
    odds p1 / p2 by (1+eta)/(1-eta) or its inverse. Walk i uses stream (seed, i).
    """
    logr = math.log1p(eta) - math.log1p(-eta)
    logit_tol = math.log((1.0 - collapse_tol) / collapse_tol)
    out = np.full(walks, -1, dtype=np.int64)
    for i in range(walks):
        gen = walk_generator(seed, i, stream=2)
        logit = math.log(psi2 / (1.0 - psi2))
        x = 0
        while x < max_steps:
            u = gen.random(1024)
            for v in u.tolist():
                p1 = 1.0 / (1.0 + math.exp(-logit))
                logit += logr if v < 0.5 * (1.0 + eta * (2.0 * p1 - 1.0)) else -logr
                x += 1
                if abs(logit) >= logit_tol or x >= max_steps:
                    break
            if abs(logit) >= logit_tol:
                out[i] = 0 if logit > 0 else 1
                break
    return out
