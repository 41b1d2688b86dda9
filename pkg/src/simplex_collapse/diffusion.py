"""Continuum limit of the simplex walk.

Per step, the diagonal has zero drift and covariance

    C_jk = 4 p_j p_k (delta_jk eta_j^2 - p_j eta_j^2 - p_k eta_k^2 + sum_l p_l^2 eta_l^2).

The diffusion equation with this coefficient is exercised through its sample
paths: Euler-Maruyama with one SDE unit of X per discrete step. C factors
exactly as L L^T with L_jl = 2 p_j (delta_jl - p_l) eta_l, which is the
first-order response of the discrete update to its signs; that factor is the
default, and an eigendecomposition of C is available for cross-checking.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy import special

from .core_state import (
    NoiseSchedule,
    SimplexPoint,
    StateVector,
    UpdateMode,
    _probabilities,
    density_from_state,
)
from .errors import StepTooLarge, ValidationError
from .mapping import _entropy_rows, _rowsum
from .seeding import SDE_STREAM, WALK_STREAM, walk_seed_sequence
from .walker import BLOCK_SIZE, WalkConfig, _mean_se, run_ensemble

NORMAL_CHUNK = 256
RAW_LOW = -0.1
RAW_HIGH = 1.1
EIG_CLAMP = 1e-10
NOISE_MODES = ("independent", "common")


@dataclass(frozen=True)
class DriftCovariance:
    drift: np.ndarray
    covariance: np.ndarray


def _eta_vector(eta, n: int) -> np.ndarray:
    e = np.asarray(eta, dtype=float)
    if e.ndim == 0:
        e = np.full(n, float(e))
    if e.shape != (n,):
        raise ValidationError(f"eta must be a scalar or have {n} entries")
    return e


def drift_covariance(p, eta) -> DriftCovariance:
    """Zero drift and the per-step covariance of the diagonal."""
    q = _probabilities(p)
    e = _eta_vector(eta, q.size)
    v2 = (q * e) ** 2
    tot = math.fsum(v2.tolist())
    pe2 = q * e * e
    inner = np.diag(e * e) - pe2[:, None] - pe2[None, :] + tot
    cov = 4.0 * np.outer(q, q) * inner
    return DriftCovariance(drift=np.zeros(q.size), covariance=cov)


def entropy_production(p, eta) -> float:
    """Leading-order mean entropy change per step, -sum_j eta_j^2 p_j (1 - p_j)."""
    q = _probabilities(p)
    e = _eta_vector(eta, q.size)
    return -math.fsum((e * e * q * (1.0 - q)).tolist())


def covariance_factor(p, eta, method: str = "structured") -> np.ndarray:
    """A matrix L with L L^T = C and columns summing to zero.

    ``"structured"`` returns L_jl = 2 p_j (delta_jl - p_l) eta_l. ``"eigh"``
    diagonalizes C after projecting out the all-ones direction and clamps
    eigenvalues in (-1e-10, 0], and those negligible against the largest, to zero.
    """
    q = _probabilities(p)
    e = _eta_vector(eta, q.size)
    n = q.size
    if method == "structured":
        return 2.0 * q[:, None] * (np.eye(n) - q[None, :]) * e[None, :]
    if method == "eigh":
        c = drift_covariance(q, e).covariance
        proj = np.eye(n) - np.full((n, n), 1.0 / n)
        c = proj @ c @ proj
        w, vecs = np.linalg.eigh(0.5 * (c + c.T))
        if np.any(w < -EIG_CLAMP):
            raise ValidationError("covariance is not positive semidefinite on the tangent space")
        # round-off leaves the all-ones direction with a tiny eigenvalue; drop it
        w = np.where(w > 1e-12 * max(float(w[-1]), 0.0), w, 0.0)
        return vecs * np.sqrt(w)[None, :]
    raise ValueError(f"unknown factorization {method!r}")


def _increment_batch(p: np.ndarray, eta: np.ndarray, xi: np.ndarray, scale: float) -> np.ndarray:
    # (L xi)_j = 2 p_j (eta_j xi_j - sum_l p_l eta_l xi_l), scaled by sqrt(dX)
    ex = eta * xi
    mean = _rowsum(p * ex)
    return (2.0 * scale) * p * (ex - mean[..., None])


def _project(raw: np.ndarray) -> np.ndarray:
    if np.any(raw < RAW_LOW) or np.any(raw > RAW_HIGH):
        raise StepTooLarge("an SDE coordinate left [-0.1, 1.1]; use a smaller dX")
    c = np.clip(raw, 0.0, 1.0)
    return c / _rowsum(c)[..., None]


def sde_step(p, eta, dx: float, rng: np.random.Generator, method: str = "structured") -> SimplexPoint:
    """One Euler-Maruyama step p' = p + L xi sqrt(dX), clipped and renormalized."""
    if not dx > 0.0:
        raise ValidationError("dX must be positive")
    q = _probabilities(p)
    e = _eta_vector(eta, q.size)
    if np.max(q) >= 1.0:
        return SimplexPoint(q)
    xi = rng.standard_normal(q.size)
    if method == "structured":
        raw = q + _increment_batch(q, e, xi, math.sqrt(dx))
    else:
        raw = q + covariance_factor(q, e, method) @ xi * math.sqrt(dx)
    return SimplexPoint(_project(raw))


@dataclass(frozen=True)
class SdeEnsemble:
    """Checkpoint aggregates of SDE paths; arrays are indexed [checkpoint, ...]."""

    paths: int
    corner_counts: np.ndarray
    unresolved: int
    checkpoints: tuple
    mean_p: np.ndarray
    se_p: np.ndarray
    mean_entropy: np.ndarray
    se_entropy: np.ndarray

    @property
    def corner_frequencies(self) -> np.ndarray:
        return self.corner_counts / self.paths

    @property
    def corner_se(self) -> np.ndarray:
        f = self.corner_frequencies
        return np.sqrt(f * (1.0 - f) / self.paths)


def _sde_block(
    p0: np.ndarray,
    eta: NoiseSchedule,
    dx: float,
    steps: int,
    tol: float,
    checkpoints: tuple,
    seeds: Sequence[np.random.SeedSequence],
    noise: str = "independent",
):
    b = len(seeds)
    n = p0.size
    k = len(checkpoints)
    full = np.tile(p0, (b, 1))
    corner = np.full(b, -1, dtype=np.int64)
    ck_p = np.empty((k, b, n))
    ck_s = np.empty((k, b))
    ci = 0

    def record(i: int):
        ck_p[i] = full
        ck_s[i] = _entropy_rows(full)

    if np.max(p0) >= 1.0 - tol:
        corner[:] = int(np.argmax(p0))
        for i in range(k):
            record(i)
        return corner, ck_p, ck_s

    gens = [np.random.Generator(np.random.Philox(s)) for s in seeds]
    active = np.arange(b)
    p = full.copy()
    buf = np.empty((b, 0, n))
    pos = 0
    scale = math.sqrt(dx)
    if ci < k and checkpoints[ci] == 0:
        record(ci)
        ci += 1
    for x in range(1, steps + 1):
        if not active.size:
            break
        if pos == buf.shape[1]:
            if noise == "common":
                # same uniforms as the discrete walk; u < P(+) there means a large xi here
                u = np.stack([gens[i].random((NORMAL_CHUNK, n)) for i in active])
                buf = -special.ndtri(u + 2.0**-54)
            else:
                buf = np.stack([gens[i].standard_normal((NORMAL_CHUNK, n)) for i in active])
            pos = 0
        t = x * dx
        col = eta.at(max(1, math.ceil(t - 1e-9)))
        p = _project(p + _increment_batch(p, col, buf[:, pos], scale))
        pos += 1
        done = np.max(p, axis=1) >= 1.0 - tol
        at_ck = ci < k and checkpoints[ci] <= t + 1e-9 * dx
        if at_ck or done.any():
            full[active] = p
        if done.any():
            corner[active[done]] = np.argmax(p[done], axis=1)
            keep = ~done
            active = active[keep]
            p = p[keep]
            buf = buf[keep]
        while ci < k and checkpoints[ci] <= t + 1e-9 * dx:
            record(ci)
            ci += 1
    while ci < k:
        record(ci)
        ci += 1
    return corner, ck_p, ck_s


def run_sde_ensemble(
    psi: StateVector,
    eta: NoiseSchedule,
    paths: int,
    master_seed: int,
    max_x: int,
    dx: float = 1.0,
    collapse_tol: float = 1e-6,
    checkpoints: Sequence[int] = (),
    threads: int = 1,
    noise: str = "independent",
) -> SdeEnsemble:
    """Euler-Maruyama paths from |psi|^2, frozen once within ``collapse_tol`` of a corner.

    With ``noise="independent"`` path ``i`` draws normals from its own stream
    keyed by ``(master_seed, i)`` on a tag separate from the discrete walks.
    With ``noise="common"`` it instead reads the uniforms of discrete walk
    ``i`` and maps them through the inverse normal CDF, so the two ensembles
    share their randomness step by step (each is still exactly distributed).
    """
    if noise not in NOISE_MODES:
        raise ValidationError(f"noise must be one of {NOISE_MODES}")
    if paths < 1:
        raise ValidationError("paths must be at least 1")
    if not dx > 0.0:
        raise ValidationError("dX must be positive")
    if eta.n != psi.n:
        raise ValidationError(f"eta has {eta.n} channels but psi has {psi.n}")
    cps = tuple(int(c) for c in checkpoints)
    if list(cps) != sorted(set(cps)) or (cps and (cps[0] < 0 or cps[-1] > max_x)):
        raise ValidationError("checkpoints must be strictly increasing within [0, max_x]")
    steps = int(math.ceil(max_x / dx - 1e-9))
    if not eta.covers(int(math.ceil(max_x))):
        raise ValidationError("eta table does not cover the requested X range")
    p0 = np.real(np.diag(density_from_state(psi).entries)).copy()

    def work(start: int):
        ids = range(start, min(paths, start + BLOCK_SIZE))
        tag = WALK_STREAM if noise == "common" else SDE_STREAM
        seeds = [walk_seed_sequence(master_seed, i, tag) for i in ids]
        return _sde_block(p0, eta, dx, steps, collapse_tol, cps, seeds, noise)

    starts = list(range(0, paths, BLOCK_SIZE))
    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(work, starts))
    else:
        blocks = [work(s) for s in starts]

    n = psi.n
    corner = np.concatenate([blk[0] for blk in blocks])
    ck_p = np.concatenate([blk[1] for blk in blocks], axis=1)
    ck_s = np.concatenate([blk[2] for blk in blocks], axis=1)
    k = len(cps)
    mean_p = np.empty((k, n))
    se_p = np.empty((k, n))
    mean_s = np.empty(k)
    se_s = np.empty(k)
    for ci in range(k):
        for j in range(n):
            mean_p[ci, j], se_p[ci, j] = _mean_se(ck_p[ci, :, j])
        mean_s[ci], se_s[ci] = _mean_se(ck_s[ci])
    resolved = corner >= 0
    return SdeEnsemble(
        paths=paths,
        corner_counts=np.bincount(corner[resolved], minlength=n).astype(np.int64),
        unresolved=int(paths - resolved.sum()),
        checkpoints=cps,
        mean_p=mean_p,
        se_p=se_p,
        mean_entropy=mean_s,
        se_entropy=se_s,
    )


@dataclass(frozen=True)
class ContinuumComparison:
    checkpoints: tuple
    discrete_entropy: np.ndarray
    discrete_se: np.ndarray
    sde_entropy: np.ndarray
    sde_se: np.ndarray
    relative_difference: np.ndarray
    discrete_frequencies: np.ndarray
    sde_frequencies: np.ndarray
    sde_frequency_se: np.ndarray
    frequency_distance: float
    discrete_unresolved: int
    sde_unresolved: int

    @property
    def max_relative_difference(self) -> float:
        return float(np.max(self.relative_difference))


def compare_discrete_continuum(
    psi: StateVector,
    eta: float,
    x_max: int,
    walks: int,
    seed: int,
    checkpoints: Optional[Sequence[int]] = None,
    max_steps: Optional[int] = None,
    collapse_tol: float = 1e-6,
    mode: UpdateMode = UpdateMode.PAPER_SECOND_ORDER,
    threads: int = 1,
    noise: str = "common",
) -> ContinuumComparison:
    """Run matched discrete and SDE ensembles and compare them.

    Entropy curves are compared at ``checkpoints`` (default: ten equal spacings
    up to ``x_max``). Both ensembles then keep running to ``max_steps``
    (default 50 / eta^2) so that corner frequencies are estimated from
    fixation rather than from the truncated paths.

    By default the SDE paths reuse the discrete walks' uniforms (common random
    numbers), which cancels most of the sampling noise in the entropy
    difference without changing either ensemble's law.
    """
    if psi.n not in (2, 3):
        raise ValidationError("the comparison harness supports n = 2 or 3")
    if not 0.0 < eta < 1.0:
        raise ValidationError("eta must lie in (0, 1)")
    if checkpoints is None:
        checkpoints = tuple(int(round(x_max * i / 10)) for i in range(11))
    cps = tuple(int(c) for c in checkpoints)
    if max_steps is None:
        max_steps = max(x_max, int(math.ceil(50.0 / (eta * eta))))
    sched = NoiseSchedule.uniform(eta, psi.n)
    disc = run_ensemble(
        WalkConfig(psi=psi, eta=sched, mode=mode, collapse_tol=collapse_tol, max_steps=max_steps, checkpoints=cps),
        walks,
        seed,
        threads=threads,
    )
    sde = run_sde_ensemble(
        psi, sched, walks, seed, max_x=max_steps, collapse_tol=collapse_tol, checkpoints=cps, threads=threads,
        noise=noise,
    )
    ref = np.maximum(np.abs(disc.mean_entropy), np.abs(sde.mean_entropy))
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(ref > 0.0, np.abs(disc.mean_entropy - sde.mean_entropy) / ref, 0.0)
    return ContinuumComparison(
        checkpoints=cps,
        discrete_entropy=disc.mean_entropy,
        discrete_se=disc.se_entropy,
        sde_entropy=sde.mean_entropy,
        sde_se=sde.se_entropy,
        relative_difference=rel,
        discrete_frequencies=disc.corner_frequencies,
        sde_frequencies=sde.corner_frequencies,
        sde_frequency_se=sde.corner_se,
        frequency_distance=float(np.max(np.abs(disc.corner_frequencies - sde.corner_frequencies))),
        discrete_unresolved=disc.unresolved,
        sde_unresolved=sde.unresolved,
    )
