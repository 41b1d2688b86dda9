"""Single measurement realizations and ensembles of them.

A walk repeatedly samples a sign vector and applies the mapping step until one
diagonal entry is within ``collapse_tol`` of 1 (the walk has fixed on a corner)
or ``max_steps`` is reached.

Ensembles are processed in fixed blocks of ``BLOCK_SIZE`` consecutive walk ids.
Inside a block all active walks advance together as numpy arrays; each walk
reads only its own random stream, so results are bit-identical whatever the
number of worker threads.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .core_state import (
    NoiseSchedule,
    SimplexPoint,
    StateVector,
    UpdateMode,
    _probabilities,
    density_from_state,
)
from .errors import ValidationError
from .mapping import (
    _entropy_rows,
    _rowsum,
    conditional_sign_draw,
    update_diagonal_batch,
    update_rho_batch,
)
from .seeding import WALK_STREAM, walk_seed_sequence

BLOCK_SIZE = 1024
UNIFORM_CHUNK = 256


@dataclass(frozen=True)
class WalkConfig:
    psi: StateVector
    eta: NoiseSchedule
    mode: UpdateMode = UpdateMode.PAPER_SECOND_ORDER
    collapse_tol: float = 1e-6
    max_steps: int = 100_000
    checkpoints: tuple = ()
    track_offdiag: bool = False

    def __post_init__(self):
        if not 0.0 < self.collapse_tol < 0.5:
            raise ValidationError("collapse_tol must lie in (0, 0.5)")
        if int(self.max_steps) != self.max_steps or self.max_steps < 1:
            raise ValidationError("max_steps must be a positive integer")
        cps = tuple(int(c) for c in self.checkpoints)
        if list(cps) != sorted(set(cps)):
            raise ValidationError("checkpoints must be strictly increasing")
        if cps and (cps[0] < 0 or cps[-1] > self.max_steps):
            raise ValidationError("checkpoints must lie in [0, max_steps]")
        if self.eta.n != self.psi.n:
            raise ValidationError(f"eta has {self.eta.n} channels but psi has {self.psi.n}")
        if not self.eta.covers(self.max_steps):
            raise ValidationError("eta table does not cover max_steps")
        object.__setattr__(self, "checkpoints", cps)
        object.__setattr__(self, "mode", UpdateMode.parse(self.mode))


@dataclass(frozen=True)
class TrajectoryPoint:
    step: int
    p: SimplexPoint
    entropy: float
    offdiag: float


@dataclass(frozen=True)
class WalkResult:
    final_corner: Optional[int]
    steps_taken: int
    trajectory: tuple
    final_p: SimplexPoint


@dataclass(frozen=True)
class EnsembleStats:
    """Checkpoint aggregates over an ensemble; arrays are indexed [checkpoint, ...]."""

    walks: int
    corner_counts: np.ndarray
    unresolved: int
    checkpoints: tuple
    mean_p: np.ndarray
    se_p: np.ndarray
    mean_entropy: np.ndarray
    se_entropy: np.ndarray
    mean_offdiag: np.ndarray
    se_offdiag: np.ndarray
    mean_steps: float
    walk_results: tuple = field(default=(), repr=False)

    @property
    def corner_frequencies(self) -> np.ndarray:
        return self.corner_counts / self.walks

    @property
    def corner_se(self) -> np.ndarray:
        f = self.corner_frequencies
        return np.sqrt(f * (1.0 - f) / self.walks)


@dataclass
class _Block:
    corner: np.ndarray
    steps: np.ndarray
    final_p: np.ndarray
    ck_p: np.ndarray
    ck_entropy: np.ndarray
    ck_offdiag: np.ndarray


def detect_collapse(p, collapse_tol: float) -> Optional[int]:
    """Index m with p_m >= 1 - collapse_tol, else None."""
    q = _probabilities(p)
    m = int(np.argmax(q))
    return m if q[m] >= 1.0 - collapse_tol else None


def _offdiag_norm(rho: np.ndarray) -> np.ndarray:
    n = rho.shape[-1]
    sq = np.abs(rho) ** 2
    sq[..., np.arange(n), np.arange(n)] = 0.0
    return np.sqrt(_rowsum(sq.reshape(sq.shape[:-2] + (n * n,))))


def _offdiag_untracked(p: np.ndarray, mode: UpdateMode) -> np.ndarray:
    # exact-product walks from a pure state stay pure: |rho_jk| = sqrt(p_j p_k)
    if mode is UpdateMode.EXACT_PRODUCT:
        return np.sqrt(np.clip(1.0 - _rowsum(p * p), 0.0, None))
    return np.full(p.shape[:-1], np.nan)


def _run_block(config: WalkConfig, seeds: Sequence[np.random.SeedSequence]) -> _Block:
    n = config.psi.n
    b = len(seeds)
    tol = config.collapse_tol
    mode = config.mode
    track = config.track_offdiag
    cps = config.checkpoints
    k = len(cps)

    rho0 = density_from_state(config.psi).entries
    p0 = np.real(np.diag(rho0)).copy()

    full_p = np.tile(p0, (b, 1))
    full_rho = np.tile(rho0, (b, 1, 1)) if track else None
    corner = np.full(b, -1, dtype=np.int64)
    steps = np.zeros(b, dtype=np.int64)
    ck_p = np.empty((k, b, n))
    ck_s = np.empty((k, b))
    ck_o = np.empty((k, b))

    def record(ci: int):
        ck_p[ci] = full_p
        ck_s[ci] = _entropy_rows(full_p)
        ck_o[ci] = _offdiag_norm(full_rho) if track else _offdiag_untracked(full_p, mode)

    m0 = int(np.argmax(p0))
    if p0[m0] >= 1.0 - tol:
        corner[:] = m0
        for ci in range(k):
            record(ci)
        return _Block(corner, steps, full_p, ck_p, ck_s, ck_o)

    gens = [np.random.Generator(np.random.Philox(s)) for s in seeds]
    active = np.arange(b)
    p = full_p.copy()
    rho = full_rho.copy() if track else None
    buf = np.empty((b, 0, n))
    pos = 0
    ci = 0
    if ci < k and cps[ci] == 0:
        record(ci)
        ci += 1

    x = 0
    while active.size and x < config.max_steps:
        if pos == buf.shape[1]:
            buf = np.stack([gens[i].random((UNIFORM_CHUNK, n)) for i in active])
            pos = 0
        x += 1
        eta = config.eta.at(x)
        eps = conditional_sign_draw(p, eta, buf[:, pos], mode)
        pos += 1
        if track:
            rho = update_rho_batch(rho, eps, eta, mode)
            p = np.real(np.einsum("bjj->bj", rho)).copy()
        else:
            p = update_diagonal_batch(p, eps, eta, mode)

        done = np.max(p, axis=1) >= 1.0 - tol
        at_checkpoint = ci < k and cps[ci] == x
        if at_checkpoint or done.any() or x == config.max_steps:
            full_p[active] = p
            if track:
                full_rho[active] = rho
        if done.any():
            fin = active[done]
            corner[fin] = np.argmax(p[done], axis=1)
            steps[fin] = x
            keep = ~done
            active = active[keep]
            p = p[keep]
            buf = buf[keep]
            if track:
                rho = rho[keep]
        if at_checkpoint:
            record(ci)
            ci += 1

    steps[active] = x
    while ci < k:
        record(ci)
        ci += 1
    return _Block(corner, steps, full_p, ck_p, ck_s, ck_o)


def _walk_result(config: WalkConfig, blk: _Block, i: int) -> WalkResult:
    steps = int(blk.steps[i])
    traj = tuple(
        TrajectoryPoint(
            step=c,
            p=SimplexPoint(blk.ck_p[ci, i]),
            entropy=float(blk.ck_entropy[ci, i]),
            offdiag=float(blk.ck_offdiag[ci, i]),
        )
        for ci, c in enumerate(config.checkpoints)
        if c <= steps
    )
    c = int(blk.corner[i])
    return WalkResult(
        final_corner=None if c < 0 else c,
        steps_taken=steps,
        trajectory=traj,
        final_p=SimplexPoint(blk.final_p[i]),
    )


def run_walk(config: WalkConfig, seed: int) -> WalkResult:
    """One realization; uses the same stream as walk 0 of ``run_ensemble(config, ., seed)``."""
    blk = _run_block(config, [walk_seed_sequence(seed, 0, WALK_STREAM)])
    return _walk_result(config, blk, 0)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    w = values.size
    if w == 0 or np.any(np.isnan(values)):
        return float("nan"), float("nan")
    mean = math.fsum(values.tolist()) / w
    if w < 2:
        return mean, float("nan")
    var = math.fsum(((values - mean) ** 2).tolist()) / (w - 1)
    return mean, math.sqrt(var / w)


def run_ensemble(
    config: WalkConfig,
    walks: int,
    master_seed: int,
    threads: int = 1,
    keep_walks: bool = False,
) -> EnsembleStats:
    """Run ``walks`` independent realizations and aggregate checkpoint statistics.

    Walk ``i`` uses the stream keyed by ``(master_seed, i)``. Aggregation runs in
    walk-id order with exactly rounded sums, so the output does not depend on
    ``threads``.
    """
    if walks < 1:
        raise ValidationError("walks must be at least 1")
    starts = list(range(0, walks, BLOCK_SIZE))

    def work(start: int) -> _Block:
        ids = range(start, min(walks, start + BLOCK_SIZE))
        return _run_block(config, [walk_seed_sequence(master_seed, i, WALK_STREAM) for i in ids])

    if threads > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            blocks = list(pool.map(work, starts))
    else:
        blocks = [work(s) for s in starts]

    n = config.psi.n
    corner = np.concatenate([blk.corner for blk in blocks])
    steps = np.concatenate([blk.steps for blk in blocks])
    ck_p = np.concatenate([blk.ck_p for blk in blocks], axis=1)
    ck_s = np.concatenate([blk.ck_entropy for blk in blocks], axis=1)
    ck_o = np.concatenate([blk.ck_offdiag for blk in blocks], axis=1)
    k = len(config.checkpoints)

    mean_p = np.empty((k, n))
    se_p = np.empty((k, n))
    mean_s = np.empty(k)
    se_s = np.empty(k)
    mean_o = np.empty(k)
    se_o = np.empty(k)
    for ci in range(k):
        for j in range(n):
            mean_p[ci, j], se_p[ci, j] = _mean_se(ck_p[ci, :, j])
        mean_s[ci], se_s[ci] = _mean_se(ck_s[ci])
        mean_o[ci], se_o[ci] = _mean_se(ck_o[ci])

    resolved = corner >= 0
    counts = np.bincount(corner[resolved], minlength=n).astype(np.int64)
    kept: tuple = ()
    if keep_walks:
        kept = tuple(
            _walk_result(config, blk, i) for blk in blocks for i in range(blk.corner.size)
        )
    return EnsembleStats(
        walks=walks,
        corner_counts=counts,
        unresolved=int(walks - resolved.sum()),
        checkpoints=config.checkpoints,
        mean_p=mean_p,
        se_p=se_p,
        mean_entropy=mean_s,
        se_entropy=se_s,
        mean_offdiag=mean_o,
        se_offdiag=se_o,
        mean_steps=math.fsum(steps.tolist()) / walks,
        walk_results=kept,
    )
