"""One stochastic mapping step on the microsystem density matrix.

Channel indices are 0-based throughout. Every public function here has a
batched kernel underneath (leading axes are batch axes) which the walker and
the enumeration oracle call directly, so a single step and the same step taken
inside an ensemble run perform identical floating-point operations.

Sums over channels are written as explicit left-to-right loops; numpy reductions
may reorder additions depending on array shape, which would break bit-exact
reproducibility between batch sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .core_state import (
    DensityMatrix,
    EpsilonDraw,
    SimplexPoint,
    UpdateMode,
    _probabilities,
)
from .errors import DegenerateDenominator, DimensionTooLarge, InvalidSigns

DENOMINATOR_FLOOR = 1e-12
MAX_EXPECTATION_DIM = 20

Signs = Union[EpsilonDraw, np.ndarray, list, tuple]


def _as_signs(epsilon: Signs) -> np.ndarray:
    if isinstance(epsilon, EpsilonDraw):
        s = epsilon.signs
    else:
        s = np.asarray(epsilon)
        if not np.all((s == 1) | (s == -1)):
            raise InvalidSigns("every sign must be exactly +1 or -1")
    return s.astype(float)


def _rowsum(x: np.ndarray) -> np.ndarray:
    acc = x[..., 0].copy()
    for l in range(1, x.shape[-1]):
        acc = acc + x[..., l]
    return acc


def sign_patterns(n: int) -> np.ndarray:
    """All 2**n sign vectors, channel 0 most significant, '+' before '-'."""
    idx = np.arange(2**n)[:, None]
    bits = (idx >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return (1 - 2 * bits).astype(np.int8)


def _pattern_block(n: int, start: int, stop: int) -> np.ndarray:
    idx = np.arange(start, stop)[:, None]
    bits = (idx >> np.arange(n - 1, -1, -1)[None, :]) & 1
    return (1 - 2 * bits).astype(float)


# ---------------------------------------------------------------------------
# batched kernels
# ---------------------------------------------------------------------------

def enhancement_factors_batch(eps: np.ndarray, eta: np.ndarray) -> np.ndarray:
    """B_j = prod_l (1 + eta_l (2 delta_lj - 1) eps_l) for every channel j."""
    a = eta * eps
    plus = 1.0 + a
    minus = 1.0 - a
    n = eps.shape[-1]
    out = np.empty(np.broadcast_shapes(eps.shape, np.shape(eta)))
    for j in range(n):
        acc = plus[..., j].copy()
        for l in range(n):
            if l != j:
                acc = acc * minus[..., l]
        out[..., j] = acc
    return out


def step_probability_batch(p: np.ndarray, eta: np.ndarray, eps: np.ndarray, mode: UpdateMode) -> np.ndarray:
    n = eps.shape[-1]
    scale = 0.5**n
    if mode is UpdateMode.PAPER_SECOND_ORDER:
        return scale * (1.0 + _rowsum((2.0 * p - 1.0) * eta * eps))
    return scale * _rowsum(p * enhancement_factors_batch(eps, eta))


def conditional_sign_draw(p: np.ndarray, eta: np.ndarray, u: np.ndarray, mode: UpdateMode) -> np.ndarray:
    """Exact sequential sampling of one step's signs from uniforms ``u``.

    Channel k is drawn from its conditional given channels < k. Both laws have
    closed-form prefix marginals (the unseen signs average out), so one uniform
    per channel suffices: eps_k = +1 iff u_k < P(eps_k = +1 | prefix).
    """
    n = p.shape[-1]
    eps = np.empty(u.shape)
    if mode is UpdateMode.PAPER_SECOND_ORDER:
        a = (2.0 * p - 1.0) * eta
        c = np.zeros(u.shape[:-1])
        for k in range(n):
            prob_plus = 0.5 * (1.0 + c + a[..., k]) / (1.0 + c)
            e = np.where(u[..., k] < prob_plus, 1.0, -1.0)
            eps[..., k] = e
            c = c + a[..., k] * e
        return eps
    w = np.array(p, dtype=float, copy=True)
    w = np.broadcast_to(w, u.shape).copy()
    for k in range(n):
        up = 1.0 - eta[k] * np.ones(n)
        up[k] = 1.0 + eta[k]
        down = 2.0 - up
        num = _rowsum(w * up)
        den = _rowsum(w)
        prob_plus = 0.5 * num / den
        e = np.where(u[..., k] < prob_plus, 1.0, -1.0)
        eps[..., k] = e
        w = w * np.where(e[..., None] > 0, up, down)
    return eps


def update_diagonal_batch(p: np.ndarray, eps: np.ndarray, eta: np.ndarray, mode: UpdateMode) -> np.ndarray:
    a = eta * eps
    if mode is UpdateMode.PAPER_SECOND_ORDER:
        s = _rowsum(a)
        denom = 1.0 + 2.0 * _rowsum(p * a) - s
        if np.any(denom <= DENOMINATOR_FLOOR):
            raise DegenerateDenominator("update denominator is not positive; eta bound bypassed?")
        g = (1.0 + 2.0 * a) - s[..., None]
        return p * g / denom[..., None]
    b = enhancement_factors_batch(eps, eta)
    w = p * b
    return w / _rowsum(w)[..., None]


def update_rho_batch(rho: np.ndarray, eps: np.ndarray, eta: np.ndarray, mode: UpdateMode) -> np.ndarray:
    n = rho.shape[-1]
    diag = np.real(np.einsum("...jj->...j", rho))
    a = eta * eps
    if mode is UpdateMode.PAPER_SECOND_ORDER:
        s = _rowsum(a)
        denom = 1.0 + 2.0 * _rowsum(diag * a) - s
        if np.any(denom <= DENOMINATOR_FLOOR):
            raise DegenerateDenominator("update denominator is not positive; eta bound bypassed?")
        fac = (1.0 + (a[..., :, None] + a[..., None, :])) - s[..., None, None]
        eta2 = eta * eta
        decay = 1.0 - 0.5 * (eta2[:, None] + eta2[None, :])
        decay[np.diag_indices(n)] = 1.0
        return rho * (fac * decay) / denom[..., None, None]
    b = enhancement_factors_batch(eps, eta)
    sq = np.sqrt(b[..., :, None] * b[..., None, :])
    return sq * rho / _rowsum(diag * b)[..., None, None]


def _entropy_rows(p: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(p > 0.0, p * np.log(np.where(p > 0.0, p, 1.0)), 0.0)
    return -_rowsum(t)


# ---------------------------------------------------------------------------
# public single-step API
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepOutcome:
    epsilon: EpsilonDraw
    rho_after: DensityMatrix
    probability: float


@dataclass(frozen=True)
class StepMoments:
    """Exact probability-weighted moments of one step."""

    mean_delta: np.ndarray
    diag_covariance: np.ndarray
    mean_entropy_change: float
    total_probability: float


def enhancement_factor(j: int, epsilon: Signs, eta) -> float:
    """Single-step enhancement factor B_j for channel ``j``."""
    eps = _as_signs(epsilon)
    return float(enhancement_factors_batch(eps, np.asarray(eta, dtype=float))[j])


def step_probability(p, eta, epsilon: Signs, mode: UpdateMode = UpdateMode.PAPER_SECOND_ORDER) -> float:
    """Probability of the sign vector ``epsilon`` given the current diagonal ``p``."""
    return float(step_probability_batch(_probabilities(p), np.asarray(eta, dtype=float), _as_signs(epsilon), mode))


def sample_step(p, eta, mode: UpdateMode, rng: np.random.Generator) -> EpsilonDraw:
    q = _probabilities(p)
    u = rng.random((1, q.size))
    eps = conditional_sign_draw(q[None, :], np.asarray(eta, dtype=float), u, mode)[0]
    return EpsilonDraw(eps.astype(np.int8))


def apply_step(rho: DensityMatrix, epsilon: Signs, eta, mode: UpdateMode = UpdateMode.PAPER_SECOND_ORDER) -> DensityMatrix:
    """Update ``rho`` for one realized sign vector.

    PAPER_SECOND_ORDER is the second-order recursion; its output is Hermitian
    with unit trace but may carry an O(eta^2) negative eigenvalue, so PSD is
    only enforced for EXACT_PRODUCT.
    """
    eps = _as_signs(epsilon)
    new = update_rho_batch(rho.entries, eps, np.asarray(eta, dtype=float), mode)
    new = 0.5 * (new + new.conj().T)
    return DensityMatrix(new, require_psd=mode is UpdateMode.EXACT_PRODUCT)


def take_step(rho: DensityMatrix, eta, mode: UpdateMode, rng: np.random.Generator) -> StepOutcome:
    p = np.real(np.diag(rho.entries))
    eps = sample_step(p, eta, mode, rng)
    return StepOutcome(
        epsilon=eps,
        rho_after=apply_step(rho, eps, eta, mode),
        probability=step_probability(p, eta, eps, mode),
    )


def one_step_expectation(rho: DensityMatrix, eta, mode: UpdateMode = UpdateMode.PAPER_SECOND_ORDER) -> StepMoments:
    """Enumerate all 2**n sign vectors and return exact one-step moments."""
    n = rho.n
    if n > MAX_EXPECTATION_DIM:
        raise DimensionTooLarge(f"n = {n} exceeds {MAX_EXPECTATION_DIM} for exact enumeration")
    eta = np.asarray(eta, dtype=float)
    r0 = rho.entries
    p0 = np.real(np.diag(r0))
    s0 = float(_entropy_rows(p0[None, :])[0])
    mean_delta = np.zeros_like(r0, dtype=complex if np.iscomplexobj(r0) else float)
    cov = np.zeros((n, n))
    ds = 0.0
    total = 0.0
    block = 4096
    for start in range(0, 2**n, block):
        eps = _pattern_block(n, start, min(2**n, start + block))
        prob = step_probability_batch(p0, eta, eps, mode)
        new = update_rho_batch(np.broadcast_to(r0, (eps.shape[0], n, n)), eps, eta, mode)
        delta = new - r0
        mean_delta = mean_delta + np.tensordot(prob, delta, axes=1)
        dp = np.real(np.einsum("bjj->bj", delta))
        cov = cov + np.einsum("b,bj,bk->jk", prob, dp, dp)
        ds += float(np.dot(prob, _entropy_rows(np.real(np.einsum("bjj->bj", new))) - s0))
        total += float(prob.sum())
    return StepMoments(mean_delta=mean_delta, diag_covariance=cov, mean_entropy_change=ds, total_probability=total)
