"""Correlations induced between stochastic signs and between two pointers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import GridTooNarrow, ValidationError
from .two_state import GRID_MASS_TOL, gaussian_pair, pointer_cdf

SIGN_PAIRS = ((1, 1), (1, -1), (-1, 1), (-1, -1))


@dataclass(frozen=True)
class PairDistribution:
    """One-step joint law of (eps_11, eps_21), ordered as ``SIGN_PAIRS``."""

    psi2: float
    eta: float
    probabilities: np.ndarray

    def probability(self, e1: int, e2: int) -> float:
        return float(self.probabilities[SIGN_PAIRS.index((e1, e2))])

    @property
    def marginals(self) -> tuple[float, float]:
        """(<eps_11>, <eps_21>)."""
        p = self.probabilities
        return float(p[0] + p[1] - p[2] - p[3]), float(p[0] - p[1] + p[2] - p[3])

    @property
    def correlation(self) -> float:
        p = self.probabilities
        return float((p[0] + p[3]) - (p[1] + p[2]))


@dataclass(frozen=True)
class TwoPointerProfile:
    z: np.ndarray
    u: np.ndarray
    q: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    p1: np.ndarray
    p2: np.ndarray
    psi2: float
    z_width: float
    u_width: float

    def mass(self) -> float:
        return float(np.trapezoid(np.trapezoid(self.q, self.u, axis=1), self.z))

    def marginal_z(self) -> np.ndarray:
        return np.trapezoid(self.q, self.u, axis=1)


def pair_distribution(psi2: float, eta: float) -> PairDistribution:
    """P(e1, e2) = (1 + eta (|psi1|^2 - |psi2|^2)(e1 + e2) + eta^2 e1 e2) / 4."""
    if not 0.0 < psi2 < 1.0:
        raise ValidationError("psi2 must lie in (0, 1)")
    if not 0.0 < eta < 1.0:
        raise ValidationError("eta must lie in (0, 1)")
    bias = eta * (2.0 * psi2 - 1.0)
    probs = np.array([0.25 * (1.0 + bias * (e1 + e2) + eta * eta * e1 * e2) for e1, e2 in SIGN_PAIRS])
    return PairDistribution(psi2=psi2, eta=eta, probabilities=probs)


def _unit_gaussians(x: np.ndarray, width: float) -> tuple[np.ndarray, np.ndarray]:
    # normalized Gaussians centred at +1/2 and -1/2 with variance 1/(2 width)
    g1, _ = gaussian_pair(x, 1.0, width)
    _, g2 = gaussian_pair(x, 0.0, width)
    return g1, g2


def two_pointer_profile(
    psi2: float,
    z_width: float,
    u_width: float,
    lo: float = -2.0,
    hi: float = 2.0,
    points: int = 801,
) -> TwoPointerProfile:
    """Product-Gaussian mixture for two pointers read out from independent sign sets."""
    if not 0.0 <= psi2 <= 1.0:
        raise ValidationError("psi2 must lie in [0, 1]")
    if z_width <= 0.0 or u_width <= 0.0:
        raise ValidationError("Z and U must be positive")
    missing = 0.0
    for w in (z_width, u_width):
        missing += float(pointer_cdf(lo, psi2, w) + 1.0 - pointer_cdf(hi, psi2, w))
    if missing > GRID_MASS_TOL:
        raise GridTooNarrow(f"grid [{lo}, {hi}]^2 misses {missing:.3g} of the probability mass")
    z = np.linspace(lo, hi, points)
    u = np.linspace(lo, hi, points)
    a1, a2 = _unit_gaussians(z, z_width)
    b1, b2 = _unit_gaussians(u, u_width)
    q1 = psi2 * a1[:, None] * b1[None, :]
    q2 = (1.0 - psi2) * a2[:, None] * b2[None, :]
    zz = z[:, None]
    uu = u[None, :]
    with np.errstate(divide="ignore"):
        log_ratio = (
            math.log1p(-psi2) - math.log(psi2) if 0.0 < psi2 < 1.0 else (math.inf if psi2 == 0.0 else -math.inf)
        )
    log_ratio = log_ratio - 2.0 * z_width * zz - 2.0 * u_width * uu
    return TwoPointerProfile(
        z=z,
        u=u,
        q=q1 + q2,
        q1=q1,
        q2=q2,
        p1=special.expit(-log_ratio),
        p2=special.expit(log_ratio),
        psi2=psi2,
        z_width=z_width,
        u_width=u_width,
    )


def quadrant_masses(psi2: float, z_width: float, u_width: float) -> dict[str, float]:
    """Exact masses of the four sign quadrants from the Gaussian error function."""
    # P(z > 0) for the component centred at +1/2 is erfc(-sqrt(Z)/2)/2
    zp = 0.5 * special.erfc(-0.5 * math.sqrt(z_width))
    up = 0.5 * special.erfc(-0.5 * math.sqrt(u_width))
    zm, um = 1.0 - zp, 1.0 - up
    w1, w2 = psi2, 1.0 - psi2
    return {
        "++": w1 * zp * up + w2 * zm * um,
        "+-": w1 * zp * um + w2 * zm * up,
        "-+": w1 * zm * up + w2 * zp * um,
        "--": w1 * zm * um + w2 * zp * up,
    }


def _signed_quadrature(f: np.ndarray, x: np.ndarray, axis: int) -> np.ndarray:
    # Simpson on each half-line separately so the sign jump at 0 sits on an endpoint
    pos = x >= 0.0
    neg = x <= 0.0
    fp = np.compress(pos, f, axis=axis)
    fn = np.compress(neg, f, axis=axis)
    return integrate.simpson(fp, x=x[pos], axis=axis) - integrate.simpson(fn, x=x[neg], axis=axis)


def pointer_sign_correlation(profile: TwoPointerProfile, method: str = "erf") -> float:
    """<sign(z) sign(u)> under q; sign(0) = 0.

    ``method="erf"`` integrates each Gaussian quadrant in closed form;
    ``method="grid"`` uses Simpson quadrature on the profile grid.
    """
    if method == "erf":
        m = quadrant_masses(profile.psi2, profile.z_width, profile.u_width)
        return (m["++"] + m["--"]) - (m["+-"] + m["-+"])
    if method == "grid":
        inner = _signed_quadrature(profile.q, profile.u, axis=1)
        return float(_signed_quadrature(inner, profile.z, axis=0))
    raise ValueError(f"unknown method {method!r}")
