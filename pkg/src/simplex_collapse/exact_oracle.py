"""Brute-force enumeration over every sign configuration.

The enumeration walks the configuration tree depth-first, one step per level,
expanding a whole batch of prefixes at once with the same kernels the walker
uses. Each prefix carries its running density matrix and its chain-rule
probability, so memory stays bounded by the batch size.

``product_form_configuration`` evaluates a single configuration directly from
the full-table enhancement factors, which is an independent route to the same
numbers in EXACT_PRODUCT mode.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .core_state import NoiseSchedule, StateVector, UpdateMode, density_from_state
from .errors import DimensionTooLarge, NonPositiveInput, ValidationError
from .mapping import (
    _entropy_rows,
    sign_patterns,
    step_probability_batch,
    update_rho_batch,
)

MAX_SIGNS = 24
KEEP_LEAVES_MAX_SIGNS = 16
CHUNK_NODES = 1 << 13


@dataclass(frozen=True)
class EnumerationReport:
    """Exact results over all 2**(n*steps) sign configurations.

    Leaf arrays are ordered with step 1 most significant and, inside a step,
    channel 0 most significant, '+' before '-'. They are ``None`` when the
    enumeration was run with ``keep_leaves=False``.
    """

    n: int
    steps: int
    mode: UpdateMode
    mean_rho: np.ndarray
    mean_entropy: np.ndarray
    total_probability: float
    min_probability: float
    probabilities: Optional[np.ndarray] = None
    final_rho: Optional[np.ndarray] = None

    @property
    def configurations(self) -> int:
        return 2 ** (self.n * self.steps)

    @property
    def mean_diagonal(self) -> np.ndarray:
        return np.real(np.diag(self.mean_rho[-1]))

    def patterns(self) -> np.ndarray:
        """Sign tables, shape (configurations, n, steps)."""
        n, x = self.n, self.steps
        idx = np.arange(self.configurations)[:, None]
        bits = (idx >> np.arange(n * x - 1, -1, -1)[None, :]) & 1
        signs = (1 - 2 * bits).astype(np.int8).reshape(-1, x, n)
        return np.transpose(signs, (0, 2, 1))

    def pattern_strings(self) -> list[str]:
        n, x = self.n, self.steps
        out = []
        for i in range(self.configurations):
            bits = format(i, f"0{n * x}b") if n * x else ""
            out.append(bits.replace("0", "+").replace("1", "-"))
        return out


def _fsum_arrays(parts: list[np.ndarray]) -> np.ndarray:
    stacked = np.stack(parts)
    flat = stacked.reshape(len(parts), -1)
    if np.iscomplexobj(flat):
        re = [math.fsum(flat[:, i].real.tolist()) for i in range(flat.shape[1])]
        im = [math.fsum(flat[:, i].imag.tolist()) for i in range(flat.shape[1])]
        res = np.array(re) + 1j * np.array(im)
    else:
        res = np.array([math.fsum(flat[:, i].tolist()) for i in range(flat.shape[1])])
    return res.reshape(stacked.shape[1:])


def enumerate_configurations(
    psi: StateVector,
    eta: NoiseSchedule,
    steps: int,
    mode: UpdateMode = UpdateMode.PAPER_SECOND_ORDER,
    keep_leaves: Optional[bool] = None,
) -> EnumerationReport:
    n = psi.n
    if eta.n != n:
        raise ValidationError(f"eta has {eta.n} channels but psi has {n}")
    if steps < 0:
        raise ValidationError("steps must be nonnegative")
    if n * steps > MAX_SIGNS:
        raise DimensionTooLarge(f"n*X = {n * steps} exceeds {MAX_SIGNS}")
    if not eta.covers(steps):
        raise ValidationError("eta table does not cover the requested steps")
    mode = UpdateMode.parse(mode)
    if keep_leaves is None:
        keep_leaves = n * steps <= KEEP_LEAVES_MAX_SIGNS

    rho0 = density_from_state(psi).entries
    p0 = np.real(np.diag(rho0))
    sums_rho: list[list[np.ndarray]] = [[rho0.copy()]] + [[] for _ in range(steps)]
    sums_s: list[list[float]] = [[float(_entropy_rows(p0[None])[0])]] + [[] for _ in range(steps)]
    leaves = 2 ** (n * steps)
    leaf_prob = np.empty(leaves) if keep_leaves else None
    leaf_rho = np.empty((leaves, n, n), dtype=rho0.dtype) if keep_leaves else None
    if steps == 0 and keep_leaves:
        leaf_prob[0] = 1.0
        leaf_rho[0] = rho0

    pats = sign_patterns(n).astype(float)
    npat = pats.shape[0]
    total_parts: list[float] = []
    min_prob = 1.0
    stack = [(0, rho0[None], np.ones(1), np.zeros(1, dtype=np.int64))] if steps else []
    while stack:
        depth, rho, prob, idx = stack.pop()
        x = depth + 1
        col = eta.at(x)
        p = np.real(np.einsum("bjj->bj", rho))
        eps = np.broadcast_to(pats, (rho.shape[0], npat, n))
        step_p = step_probability_batch(p[:, None, :], col, eps, mode)
        new = update_rho_batch(np.broadcast_to(rho[:, None], (rho.shape[0], npat, n, n)), eps, col, mode)
        new_prob = (prob[:, None] * step_p).ravel()
        new_rho = new.reshape(-1, n, n)
        new_idx = (idx[:, None] * npat + np.arange(npat)[None, :]).ravel()

        sums_rho[x].append(np.tensordot(new_prob, new_rho, axes=1))
        sums_s[x].append(float(np.dot(new_prob, _entropy_rows(np.real(np.einsum("bjj->bj", new_rho))))))

        if x < steps:
            chunks = [
                (x, new_rho[i : i + CHUNK_NODES], new_prob[i : i + CHUNK_NODES], new_idx[i : i + CHUNK_NODES])
                for i in range(0, new_prob.size, CHUNK_NODES)
            ]
            stack.extend(reversed(chunks))
        else:
            total_parts.append(math.fsum(new_prob.tolist()))
            min_prob = min(min_prob, float(new_prob.min()))
            if keep_leaves:
                leaf_prob[new_idx] = new_prob
                leaf_rho[new_idx] = new_rho

    mean_rho = np.stack([_fsum_arrays(parts) for parts in sums_rho])
    mean_s = np.array([math.fsum(parts) for parts in sums_s])
    total = math.fsum(total_parts) if steps else 1.0
    return EnumerationReport(
        n=n,
        steps=steps,
        mode=mode,
        mean_rho=mean_rho,
        mean_entropy=mean_s,
        total_probability=total,
        min_probability=min_prob,
        probabilities=leaf_prob,
        final_rho=leaf_rho,
    )


def decoherence_factor(eta: NoiseSchedule, j: int, k: int, steps: int) -> float:
    """Predicted mean attenuation of rho_jk after ``steps`` steps (second-order law)."""
    if j == k:
        raise ValidationError("decoherence factor needs j != k")
    out = 1.0
    for x in range(1, steps + 1):
        col = eta.at(x)
        out *= 1.0 - 0.5 * col[j] ** 2 - 0.5 * col[k] ** 2
    return out


def exact_product_offdiag_factor(eta: NoiseSchedule, steps: int) -> float:
    """Mean attenuation of rho_12 for n = 2 under the exact product law."""
    if eta.n != 2:
        raise ValidationError("closed form holds for n = 2 only")
    out = 1.0
    for x in range(1, steps + 1):
        e1, e2 = eta.at(x)
        out *= math.sqrt((1.0 - e1 * e1) * (1.0 - e2 * e2))
    return out


def product_form_configuration(psi: StateVector, eta_table, signs) -> tuple[float, np.ndarray]:
    """Probability and final state of one full sign table from the product-form weights.

    ``eta_table`` and ``signs`` are n x X arrays (channel, step).
    """
    eta_table = np.asarray(eta_table, dtype=float)
    signs = np.asarray(signs, dtype=float)
    n, x = signs.shape
    b = np.ones(n)
    for j in range(n):
        for s in range(x):
            for l in range(n):
                b[j] *= 1.0 + eta_table[l, s] * (2.0 * (l == j) - 1.0) * signs[l, s]
    amp = psi.amplitudes
    w = np.abs(amp) ** 2
    norm = float(np.sum(w * b))
    prob = 2.0 ** (-n * x) * norm
    rho = np.sqrt(np.outer(b, b)) * np.outer(amp, amp.conj()) / norm
    return prob, rho


class SoftPhotonCheck(NamedTuple):
    lhs: float
    rhs: float
    rel_error: float


def soft_photon_identity(a: Sequence[float]) -> SoftPhotonCheck:
    """Permutation sum of 1/(a_i1 (a_i1+a_i2) ... (a_i1+...+a_im)) against 1/prod(a)."""
    vals = [float(v) for v in a]
    if not 1 <= len(vals) <= 8:
        raise ValidationError("identity check supports 1 <= m <= 8")
    if any(not (v > 0.0) or not math.isfinite(v) for v in vals):
        raise NonPositiveInput("all entries must be positive and finite")
    terms = []
    for perm in itertools.permutations(vals):
        acc = 0.0
        denom = 1.0
        for v in perm:
            acc += v
            denom *= acc
        terms.append(1.0 / denom)
    lhs = math.fsum(terms)
    rhs = 1.0 / math.prod(vals)
    return SoftPhotonCheck(lhs, rhs, abs(lhs - rhs) / rhs)
