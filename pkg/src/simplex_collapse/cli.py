"""Command-line runner: JSON config in, CSV series and JSON summaries out.

    simplex-collapse <subcommand> --config PATH [--seed N] [--out DIR] [--threads K]

Exit status is 0 on success, 2 when the configuration or an input fails
validation, and 3 when a run hits a runtime limit.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Optional, Sequence

import numpy as np

from . import __version__
from .core_state import NoiseSchedule, StateVector, UpdateMode, entropy
from .correlations import pair_distribution, pointer_sign_correlation, two_pointer_profile
from .diffusion import compare_discrete_continuum
from .errors import (
    ConfigIoError,
    ConfigSyntaxError,
    ConfigValidationError,
    DegenerateDenominator,
    GridTooNarrow,
    LimitError,
    SimplexCollapseError,
    StepTooLarge,
    ValidationError,
)
from .exact_oracle import enumerate_configurations
from .two_state import (
    TwoStateParams,
    binomial_ensemble,
    local_maxima,
    peak_separation_diagnosis,
    pointer_profile,
    separation_indicator,
    separation_sum,
)
from .walker import WalkConfig, run_ensemble, run_walk

EXPERIMENTS = ("walk", "ensemble", "enumerate", "two-state", "correlations", "diffusion-compare")
THREADS_ENV = "SIMPLEX_COLLAPSE_THREADS"
ENUMERATION_CSV_MAX_SIGNS = 20

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_LIMIT = 3

_KEYS = {
    "kind",
    "psi",
    "eta",
    "mode",
    "walks",
    "max_steps",
    "checkpoints",
    "collapse_tol",
    "master_seed",
    "output",
    "track_offdiag",
    "steps",
    "x_max",
    "z_width",
    "u_width",
    "grid",
}
_GRID_KEYS = {"lo", "hi", "points"}


@dataclass(frozen=True)
class Grid:
    lo: float = -2.0
    hi: float = 2.0
    points: int = 4001


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    psi: StateVector
    eta: NoiseSchedule
    mode: UpdateMode = UpdateMode.PAPER_SECOND_ORDER
    walks: int = 1000
    max_steps: int = 100_000
    checkpoints: tuple = ()
    collapse_tol: float = 1e-6
    master_seed: int = 0
    output: str = "out"
    track_offdiag: bool = False
    steps: Optional[int] = None
    x_max: Optional[int] = None
    z_width: Optional[float] = None
    u_width: Optional[float] = None
    grid: Grid = field(default_factory=Grid)
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def echo(self) -> dict:
        """Normalized config for summaries; excludes the output location."""
        out = {
            "kind": self.kind,
            "psi": [[float(a.real), float(a.imag)] for a in self.psi.amplitudes],
            "eta": self.raw.get("eta"),
            "mode": self.mode.value,
            "walks": self.walks,
            "max_steps": self.max_steps,
            "checkpoints": list(self.checkpoints),
            "collapse_tol": self.collapse_tol,
            "master_seed": self.master_seed,
            "track_offdiag": self.track_offdiag,
        }
        for key in ("steps", "x_max", "z_width", "u_width"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.kind in ("two-state", "correlations"):
            out["grid"] = {"lo": self.grid.lo, "hi": self.grid.hi, "points": self.grid.points}
        return out


# ---------------------------------------------------------------------------
# config parsing
# ---------------------------------------------------------------------------

def _int(value: Any, pointer: str, minimum: int = 0) -> int:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
        raise ConfigValidationError("expected an integer", pointer)
    if value < minimum:
        raise ConfigValidationError(f"must be at least {minimum}", pointer)
    return int(value)


def _float(value: Any, pointer: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
        raise ConfigValidationError("expected a finite number", pointer)
    return float(value)


def _psi(value: Any) -> StateVector:
    if not isinstance(value, list):
        raise ConfigValidationError("expected a list of [re, im] pairs", "/psi")
    amps = []
    for i, pair in enumerate(value):
        ptr = f"/psi/{i}"
        if not isinstance(pair, list) or len(pair) != 2:
            raise ConfigValidationError("expected an [re, im] pair", ptr)
        amps.append(complex(_float(pair[0], f"{ptr}/0"), _float(pair[1], f"{ptr}/1")))
    try:
        return StateVector(np.asarray(amps, dtype=complex))
    except ValidationError as exc:
        raise ConfigValidationError(str(exc), "/psi") from exc


def _eta(value: Any, n: int, base: Path) -> NoiseSchedule:
    try:
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return NoiseSchedule.uniform(float(value), n)
        if isinstance(value, list):
            vals = [_float(v, f"/eta/{i}") for i, v in enumerate(value)]
            if len(vals) != n:
                raise ConfigValidationError(f"expected {n} per-channel couplings, got {len(vals)}", "/eta")
            return NoiseSchedule.per_channel(vals)
        if isinstance(value, str):
            path = Path(value)
            if not path.is_absolute():
                path = base / path
            try:
                table = np.load(path) if path.suffix == ".npy" else np.loadtxt(path, delimiter=",", ndmin=2)
            except (OSError, ValueError) as exc:
                raise ConfigValidationError(f"cannot read eta table {str(path)!r}: {exc}", "/eta") from exc
            if table.shape[0] != n:
                raise ConfigValidationError(f"eta table has {table.shape[0]} rows, psi has {n} channels", "/eta")
            return NoiseSchedule.from_table(table)
    except ValidationError as exc:
        raise ConfigValidationError(str(exc), "/eta") from exc
    raise ConfigValidationError("expected a number, a per-channel list or a table path", "/eta")


def config_from_dict(data: Any, kind: Optional[str] = None, base: Path = Path(".")) -> ExperimentConfig:
    """Validate a decoded JSON document; errors carry a JSON pointer."""
    if not isinstance(data, dict):
        raise ConfigValidationError("top level must be a JSON object", "")
    for key in data:
        if key not in _KEYS:
            raise ConfigValidationError("unknown key", f"/{key}")
    cfg_kind = data.get("kind", kind)
    if cfg_kind not in EXPERIMENTS:
        raise ConfigValidationError(f"kind must be one of {', '.join(EXPERIMENTS)}", "/kind")
    if kind is not None and cfg_kind != kind:
        raise ConfigValidationError(f"config is for {cfg_kind!r}, not {kind!r}", "/kind")
    for key in ("psi", "eta"):
        if key not in data:
            raise ConfigValidationError("required key is missing", f"/{key}")
    psi = _psi(data["psi"])
    eta = _eta(data["eta"], psi.n, base)
    kw: dict[str, Any] = {}
    if "mode" in data:
        try:
            kw["mode"] = UpdateMode.parse(data["mode"])
        except ValidationError as exc:
            raise ConfigValidationError(str(exc), "/mode") from exc
    for key, minimum in (("walks", 1), ("max_steps", 1), ("master_seed", 0), ("steps", 0), ("x_max", 1)):
        if key in data:
            kw[key] = _int(data[key], f"/{key}", minimum)
    for key in ("collapse_tol", "z_width", "u_width"):
        if key in data:
            kw[key] = _float(data[key], f"/{key}")
    if "collapse_tol" in kw and not 0.0 < kw["collapse_tol"] < 0.5:
        raise ConfigValidationError("must lie in (0, 0.5)", "/collapse_tol")
    for key in ("z_width", "u_width"):
        if key in kw and kw[key] <= 0.0:
            raise ConfigValidationError("must be positive", f"/{key}")
    if "checkpoints" in data:
        cps = data["checkpoints"]
        if not isinstance(cps, list):
            raise ConfigValidationError("expected a list of step numbers", "/checkpoints")
        vals = tuple(_int(c, f"/checkpoints/{i}") for i, c in enumerate(cps))
        if list(vals) != sorted(set(vals)):
            raise ConfigValidationError("must be strictly increasing", "/checkpoints")
        kw["checkpoints"] = vals
    if "output" in data:
        if not isinstance(data["output"], str):
            raise ConfigValidationError("expected a directory path", "/output")
        kw["output"] = data["output"]
    if "track_offdiag" in data:
        if not isinstance(data["track_offdiag"], bool):
            raise ConfigValidationError("expected true or false", "/track_offdiag")
        kw["track_offdiag"] = data["track_offdiag"]
    if "grid" in data:
        g = data["grid"]
        if not isinstance(g, dict):
            raise ConfigValidationError("expected an object with lo, hi, points", "/grid")
        for key in g:
            if key not in _GRID_KEYS:
                raise ConfigValidationError("unknown key", f"/grid/{key}")
        grid = Grid(
            lo=_float(g.get("lo", -2.0), "/grid/lo"),
            hi=_float(g.get("hi", 2.0), "/grid/hi"),
            points=_int(g.get("points", 4001), "/grid/points", 3),
        )
        if not grid.lo < grid.hi:
            raise ConfigValidationError("lo must be below hi", "/grid")
        kw["grid"] = grid

    cfg = ExperimentConfig(kind=cfg_kind, psi=psi, eta=eta, raw=dict(data), **kw)
    _check_kind(cfg)
    return cfg


def _check_kind(cfg: ExperimentConfig) -> None:
    kind = cfg.kind
    if kind in ("walk", "ensemble"):
        try:
            _walk_config(cfg)
        except ValidationError as exc:
            raise ConfigValidationError(str(exc), "/checkpoints" if "checkpoint" in str(exc) else "/eta") from exc
    if kind == "enumerate" and cfg.steps is None:
        raise ConfigValidationError("enumerate needs the number of steps", "/steps")
    if kind in ("two-state", "correlations"):
        if cfg.psi.n != 2:
            raise ConfigValidationError(f"{kind} needs two channels", "/psi")
        if not cfg.eta.constant or not np.all(cfg.eta.table == cfg.eta.table[0, 0]):
            raise ConfigValidationError(f"{kind} needs a scalar eta", "/eta")
    if kind == "two-state" and cfg.steps is None:
        raise ConfigValidationError("two-state needs the number of steps", "/steps")
    if kind == "correlations":
        for key in ("z_width", "u_width"):
            if getattr(cfg, key) is None:
                raise ConfigValidationError("correlations needs both pointer widths", f"/{key}")
    if kind == "diffusion-compare":
        if cfg.x_max is None:
            raise ConfigValidationError("diffusion-compare needs x_max", "/x_max")
        if cfg.psi.n not in (2, 3):
            raise ConfigValidationError("diffusion-compare supports 2 or 3 channels", "/psi")
        if not cfg.eta.constant or not np.all(cfg.eta.table == cfg.eta.table[0, 0]):
            raise ConfigValidationError("diffusion-compare needs a scalar eta", "/eta")


def parse_config(path, kind: Optional[str] = None) -> ExperimentConfig:
    """Load and validate a UTF-8 JSON config file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ConfigIoError(f"cannot read {str(path)!r}: {exc}", "") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigSyntaxError(f"invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}", "") from exc
    return config_from_dict(data, kind=kind, base=path.parent)


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------

def fmt(x: float) -> str:
    """17 significant digits, enough to round-trip a double."""
    return format(float(x), ".17g")


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(c if isinstance(c, str) else (str(c) if isinstance(c, (int, np.integer)) else fmt(c)) for c in row))
            fh.write("\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(_jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

def _walk_config(cfg: ExperimentConfig) -> WalkConfig:
    return WalkConfig(
        psi=cfg.psi,
        eta=cfg.eta,
        mode=cfg.mode,
        collapse_tol=cfg.collapse_tol,
        max_steps=cfg.max_steps,
        checkpoints=cfg.checkpoints,
        track_offdiag=cfg.track_offdiag,
    )


def _p_header(n: int) -> list[str]:
    return [f"p_{j + 1}" for j in range(n)]


def _trajectory_rows(walk_id: int, result):
    for pt in result.trajectory:
        yield [walk_id, pt.step, *pt.p.probabilities.tolist(), pt.entropy, pt.offdiag]


def _run_walk(cfg: ExperimentConfig, out: Path, threads: int):
    res = run_walk(_walk_config(cfg), cfg.master_seed)
    n = cfg.psi.n
    _write_csv(out / "trajectory.csv", ["walk_id", "step", *_p_header(n), "entropy", "offdiag_frobenius"], _trajectory_rows(0, res))
    corner = res.final_corner
    summary = {
        "final_corner": corner,
        "steps_taken": res.steps_taken,
        "final_p": res.final_p.probabilities,
        "final_entropy": entropy(res.final_p),
    }
    line = f"walk: corner {summary['final_corner']} after {res.steps_taken} steps"
    return ["trajectory.csv"], summary, line


def _run_ensemble(cfg: ExperimentConfig, out: Path, threads: int):
    stats = run_ensemble(_walk_config(cfg), cfg.walks, cfg.master_seed, threads=threads, keep_walks=True)
    n = cfg.psi.n

    def rows():
        for i, res in enumerate(stats.walk_results):
            yield from _trajectory_rows(i, res)

    _write_csv(out / "trajectory.csv", ["walk_id", "step", *_p_header(n), "entropy", "offdiag_frobenius"], rows())
    k = len(cfg.checkpoints)
    summary = {
        "walks": stats.walks,
        "corner_counts": stats.corner_counts,
        "corner_frequencies": stats.corner_frequencies,
        "corner_frequency_se": stats.corner_se,
        "unresolved": stats.unresolved,
        "mean_steps": stats.mean_steps,
        "checkpoints": list(stats.checkpoints),
        "mean_p": stats.mean_p,
        "mean_entropy": stats.mean_entropy,
        "se_entropy": stats.se_entropy,
        "final_mean_entropy": stats.mean_entropy[-1] if k else None,
    }
    if cfg.track_offdiag or cfg.mode is UpdateMode.EXACT_PRODUCT:
        summary["mean_offdiag_frobenius"] = stats.mean_offdiag
    freqs = " ".join(f"{f:.4f}" for f in stats.corner_frequencies)
    line = f"ensemble: {stats.walks} walks, corner frequencies {freqs}, unresolved {stats.unresolved}"
    return ["trajectory.csv"], summary, line


def _run_enumerate(cfg: ExperimentConfig, out: Path, threads: int):
    n, x = cfg.psi.n, cfg.steps
    keep = n * x <= ENUMERATION_CSV_MAX_SIGNS
    rep = enumerate_configurations(cfg.psi, cfg.eta, x, cfg.mode, keep_leaves=keep)
    files = []
    if keep:
        pats = rep.pattern_strings()
        diag = np.real(np.einsum("bjj->bj", rep.final_rho))

        def rows():
            for i in range(rep.configurations):
                yield [pats[i], rep.probabilities[i], *diag[i].tolist()]

        _write_csv(out / "enumeration.csv", ["epsilon_pattern", "probability", *_p_header(n)], rows())
        files.append("enumeration.csv")
    r = rep.mean_rho[-1]
    offdiag = [
        {"j": j + 1, "k": k + 1, "re": float(np.real(r[j, k])), "im": float(np.imag(r[j, k]))}
        for j in range(n)
        for k in range(j + 1, n)
    ]
    summary = {
        "configurations": rep.configurations,
        "total_probability": rep.total_probability,
        "min_probability": rep.min_probability,
        "mean_diagonal": rep.mean_diagonal,
        "mean_offdiagonal": offdiag,
        "mean_entropy": rep.mean_entropy,
        "final_mean_entropy": rep.mean_entropy[-1],
        "leaves_written": keep,
    }
    line = f"enumerate: {rep.configurations} configurations, total probability {rep.total_probability:.6g}"
    return files, summary, line


def _run_two_state(cfg: ExperimentConfig, out: Path, threads: int):
    psi2 = float(abs(cfg.psi.amplitudes[0]) ** 2)
    eta = float(cfg.eta.table[0, 0])
    params = TwoStateParams(psi2=psi2, eta=eta, steps=cfg.steps)
    ens = binomial_ensemble(params)
    _write_csv(out / "twostate.csv", ["X1", "P", "p1"], ([x1, pr, p1] for x1, pr, p1, _ in ens.rows()))
    files = ["twostate.csv"]
    exact, asym = separation_indicator(params)
    summary = {
        "psi2": psi2,
        "eta": eta,
        "steps": cfg.steps,
        "total_probability": math.fsum(ens.prob.tolist()),
        "separation_sum": separation_sum(params),
        "separation_closed_form": exact,
        "separation_asymptotic": asym,
        "peak_shape": peak_separation_diagnosis(params).value,
        "z_width": params.z_width,
    }
    if params.z_width > 0.0:
        g = cfg.grid
        prof = pointer_profile(params, lo=g.lo, hi=g.hi, points=g.points)
        _write_csv(
            out / "pointer.csv",
            ["z", "q", "q1", "q2", "p1"],
            zip(prof.z.tolist(), prof.q.tolist(), prof.q1.tolist(), prof.q2.tolist(), prof.p1.tolist()),
        )
        files.append("pointer.csv")
        summary["pointer_mass"] = prof.mass()
        summary["pointer_maxima"] = local_maxima(prof)
    line = f"two-state: X = {cfg.steps}, separation {exact:.6g}, peaks {summary['peak_shape']}"
    return files, summary, line


def _run_correlations(cfg: ExperimentConfig, out: Path, threads: int):
    psi2 = float(abs(cfg.psi.amplitudes[0]) ** 2)
    eta = float(cfg.eta.table[0, 0])
    pair = pair_distribution(psi2, eta)
    g = cfg.grid
    prof = two_pointer_profile(psi2, cfg.z_width, cfg.u_width, lo=g.lo, hi=g.hi, points=min(g.points, 1201))
    sc = pointer_sign_correlation(prof)
    summary = {
        "psi2": psi2,
        "eta": eta,
        "pair_probabilities": {"++": pair.probabilities[0], "+-": pair.probabilities[1], "-+": pair.probabilities[2], "--": pair.probabilities[3]},
        "sign_marginals": list(pair.marginals),
        "sign_correlation": pair.correlation,
        "z_width": cfg.z_width,
        "u_width": cfg.u_width,
        "pointer_sign_correlation": sc,
        "pointer_sign_correlation_grid": pointer_sign_correlation(prof, method="grid"),
        "pointer_mass": prof.mass(),
    }
    line = f"correlations: sign correlation {pair.correlation:.6g}, pointer sign correlation {sc:.6g}"
    return [], summary, line


def _run_diffusion(cfg: ExperimentConfig, out: Path, threads: int):
    eta = float(cfg.eta.table[0, 0])
    cps = cfg.checkpoints or None
    if cps is not None and cps[-1] > cfg.x_max:
        raise ValidationError("checkpoints must not exceed x_max")
    rep = compare_discrete_continuum(
        cfg.psi,
        eta,
        cfg.x_max,
        cfg.walks,
        cfg.master_seed,
        checkpoints=cps,
        max_steps=cfg.raw.get("max_steps"),
        collapse_tol=cfg.collapse_tol,
        mode=cfg.mode,
        threads=threads,
    )
    _write_csv(
        out / "diffusion.csv",
        ["step", "discrete_entropy", "discrete_se", "sde_entropy", "sde_se", "relative_difference"],
        zip(rep.checkpoints, rep.discrete_entropy.tolist(), rep.discrete_se.tolist(), rep.sde_entropy.tolist(), rep.sde_se.tolist(), rep.relative_difference.tolist()),
    )
    summary = {
        "walks": cfg.walks,
        "checkpoints": list(rep.checkpoints),
        "max_relative_difference": rep.max_relative_difference,
        "discrete_corner_frequencies": rep.discrete_frequencies,
        "sde_corner_frequencies": rep.sde_frequencies,
        "corner_frequencies": rep.sde_frequencies,
        "corner_frequency_se": rep.sde_frequency_se,
        "frequency_distance": rep.frequency_distance,
        "discrete_unresolved": rep.discrete_unresolved,
        "sde_unresolved": rep.sde_unresolved,
        "final_mean_entropy": rep.sde_entropy[-1],
        "final_mean_entropy_discrete": rep.discrete_entropy[-1],
    }
    line = f"diffusion-compare: max relative entropy difference {rep.max_relative_difference:.6g}"
    return ["diffusion.csv"], summary, line


_RUNNERS = {
    "walk": _run_walk,
    "ensemble": _run_ensemble,
    "enumerate": _run_enumerate,
    "two-state": _run_two_state,
    "correlations": _run_correlations,
    "diffusion-compare": _run_diffusion,
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def run(config: ExperimentConfig, out: Optional[Path] = None, threads: int = 1) -> tuple[int, list[Path]]:
    """Run one experiment and write its files; returns (exit status, paths written)."""
    out = Path(out if out is not None else config.output)
    out.mkdir(parents=True, exist_ok=True)
    started = _now()
    files, summary, line = _RUNNERS[config.kind](config, out, threads)
    summary = {"config": config.echo(), **summary}
    _write_json(out / "summary.json", summary)
    files = [*files, "summary.json"]
    manifest = {
        "artifact_version": __version__,
        "config": config.echo(),
        "output": str(out),
        "started": started,
        "finished": _now(),
        "threads": threads,
        "seeds": {"master_seed": config.master_seed},
        "files": [{"name": f, "sha256": _sha256(out / f), "bytes": (out / f).stat().st_size} for f in files],
    }
    _write_json(out / "manifest.json", manifest)
    print(line)
    return EXIT_OK, [out / f for f in files] + [out / "manifest.json"]


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (LimitError, StepTooLarge, DegenerateDenominator)):
        return EXIT_LIMIT
    if isinstance(exc, (ValidationError, GridTooNarrow)) or isinstance(exc, SimplexCollapseError):
        return EXIT_VALIDATION
    return 1


def _threads(arg: Optional[int]) -> int:
    if arg is not None:
        return arg
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            val = int(env)
        except ValueError:
            raise ConfigValidationError(f"{THREADS_ENV} must be a positive integer", "") from None
        if val >= 1:
            return val
        raise ConfigValidationError(f"{THREADS_ENV} must be a positive integer", "")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simplex-collapse", description="Measurement-as-random-walk experiments.")
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--out", default=None, help="output directory (overrides config)")
        p.add_argument("--threads", type=int, default=None, help=f"worker threads (default ${THREADS_ENV} or 1)")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config, kind=args.experiment)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigValidationError("seed must be nonnegative", "/master_seed")
            raw = dict(cfg.raw, master_seed=args.seed)
            cfg = config_from_dict(raw, kind=args.experiment, base=Path(args.config).parent)
        threads = _threads(args.threads)
        if threads < 1:
            raise ConfigValidationError("--threads must be at least 1", "")
        status, _ = run(cfg, out=Path(args.out) if args.out else None, threads=threads)
        return status
    except SimplexCollapseError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
