import csv
import json
import math

import numpy as np
import pytest

from simplex_collapse.cli import EXIT_LIMIT, EXIT_OK, EXIT_VALIDATION, _threads, fmt, main, parse_config
from simplex_collapse.core_state import UpdateMode
from simplex_collapse.errors import ConfigIoError, ConfigSyntaxError, ConfigValidationError

PSI36 = [[0.6, 0.0], [0.8, 0.0]]


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj) if not isinstance(obj, str) else obj, encoding="utf-8")
    return path


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def manifest_hashes(out):
    m = json.loads((out / "manifest.json").read_text())
    return {f["name"]: f["sha256"] for f in m["files"]}


class TestParseConfig:
    def test_defaults(self, tmp_path):
        cfg = parse_config(write(tmp_path, "c.json", {"kind": "ensemble", "psi": PSI36, "eta": 0.05}))
        assert cfg.collapse_tol == 1e-6
        assert cfg.mode is UpdateMode.PAPER_SECOND_ORDER
        assert cfg.psi.n == 2

    def test_not_normalized(self, tmp_path):
        with pytest.raises(ConfigValidationError) as info:
            parse_config(write(tmp_path, "c.json", {"kind": "ensemble", "psi": [[0.5, 0], [0.5, 0]], "eta": 0.05}))
        assert info.value.pointer == "/psi"
        assert "expected 1" in info.value.reason

    def test_eta_bound(self, tmp_path):
        with pytest.raises(ConfigValidationError) as info:
            parse_config(write(tmp_path, "c.json", {"kind": "ensemble", "psi": PSI36, "eta": 0.6}))
        assert info.value.pointer == "/eta"
        assert "0.9" in info.value.reason

    def test_unknown_key(self, tmp_path):
        with pytest.raises(ConfigValidationError) as info:
            parse_config(write(tmp_path, "c.json", {"kind": "walk", "psi": PSI36, "eta": 0.05, "walkz": 3}))
        assert info.value.pointer == "/walkz"

    def test_nested_pointer(self, tmp_path):
        with pytest.raises(ConfigValidationError) as info:
            parse_config(write(tmp_path, "c.json", {"kind": "walk", "psi": [[0.6, 0], [0.8, "x"]], "eta": 0.05}))
        assert info.value.pointer == "/psi/1/1"

    def test_syntax_error(self, tmp_path):
        with pytest.raises(ConfigSyntaxError):
            parse_config(write(tmp_path, "c.json", "{not json"))

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigIoError):
            parse_config(tmp_path / "absent.json")

    def test_eta_table_file(self, tmp_path):
        np.savetxt(tmp_path / "eta.csv", np.array([[0.1, 0.2, 0.1], [0.05, 0.1, 0.3]]), delimiter=",")
        cfg = parse_config(write(tmp_path, "c.json", {"kind": "enumerate", "psi": PSI36, "eta": "eta.csv", "steps": 3}))
        assert cfg.eta.steps == 3
        np.testing.assert_array_equal(cfg.eta.at(3), [0.1, 0.3])

    def test_kind_mismatch(self, tmp_path):
        with pytest.raises(ConfigValidationError):
            parse_config(write(tmp_path, "c.json", {"kind": "walk", "psi": PSI36, "eta": 0.05}), kind="ensemble")


class TestRuns:
    def test_enumerate(self, tmp_path):
        cfg = write(tmp_path, "c.json", {"psi": PSI36, "eta": 0.1, "steps": 1, "mode": "ExactProduct"})
        out = tmp_path / "out"
        assert main(["enumerate", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        rows = read_csv(out / "enumeration.csv")
        assert [r["epsilon_pattern"] for r in rows] == ["++", "+-", "-+", "--"]
        probs = [float(r["probability"]) for r in rows]
        assert math.fsum(probs) == pytest.approx(1.0, abs=1e-12)
        np.testing.assert_allclose(probs, [0.2475, 0.2385, 0.2665, 0.2475], atol=1e-15)
        summary = json.loads((out / "summary.json").read_text())
        assert summary["config"]["mode"] == "exact_product"

    def test_ensemble_bookkeeping(self, tmp_path):
        cfg = write(tmp_path, "c.json", {"psi": PSI36, "eta": 0.1, "walks": 100, "checkpoints": [0, 50, 200, 600]})
        out = tmp_path / "out"
        assert main(["ensemble", "--config", str(cfg), "--out", str(out), "--seed", "3"]) == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        rows = read_csv(out / "trajectory.csv")
        assert sum(summary["corner_counts"]) + summary["unresolved"] == 100
        assert summary["config"]["master_seed"] == 3
        assert "corner_frequency_se" in summary and "final_mean_entropy" in summary
        per_walk = {}
        for r in rows:
            per_walk[r["walk_id"]] = per_walk.get(r["walk_id"], 0) + 1
        assert len(rows) == sum(per_walk.values()) and len(per_walk) == 100
        assert list(rows[0]) == ["walk_id", "step", "p_1", "p_2", "entropy", "offdiag_frobenius"]

    def test_rerun_and_threads_give_identical_checksums(self, tmp_path, monkeypatch):
        cfg = write(tmp_path, "c.json", {"psi": [[0.5, 0], [0.5, 0], [0.5, 0], [0.5, 0]], "eta": 0.1, "walks": 1100, "checkpoints": [0, 10, 100]})
        a, b, c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        assert main(["ensemble", "--config", str(cfg), "--out", str(a), "--threads", "1"]) == EXIT_OK
        assert main(["ensemble", "--config", str(cfg), "--out", str(b), "--threads", "4"]) == EXIT_OK
        monkeypatch.setenv("SIMPLEX_COLLAPSE_THREADS", "2")
        assert main(["ensemble", "--config", str(cfg), "--out", str(c)]) == EXIT_OK
        assert manifest_hashes(a) == manifest_hashes(b) == manifest_hashes(c)
        assert json.loads((c / "manifest.json").read_text())["threads"] == 2

    def test_walk(self, tmp_path):
        cfg = write(tmp_path, "c.json", {"psi": PSI36, "eta": 0.05, "checkpoints": [0, 5]})
        out = tmp_path / "out"
        assert main(["walk", "--config", str(cfg), "--out", str(out), "--seed", "42"]) == EXIT_OK
        assert len(read_csv(out / "trajectory.csv")) == 2

    def test_two_state(self, tmp_path):
        cfg = write(tmp_path, "c.json", {"psi": PSI36, "eta": 0.05, "steps": 2000})
        out = tmp_path / "out"
        assert main(["two-state", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        rows = read_csv(out / "twostate.csv")
        assert list(rows[0]) == ["X1", "P", "p1"] and len(rows) == 2001
        assert list(read_csv(out / "pointer.csv")[0]) == ["z", "q", "q1", "q2", "p1"]
        summary = json.loads((out / "summary.json").read_text())
        assert summary["separation_sum"] == pytest.approx(summary["separation_closed_form"], abs=1e-12)

    def test_correlations(self, tmp_path):
        cfg = write(tmp_path, "c.json", {"psi": PSI36, "eta": 0.1, "z_width": 400, "u_width": 400})
        out = tmp_path / "out"
        assert main(["correlations", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / "summary.json").read_text())
        assert summary["sign_correlation"] == pytest.approx(0.01, abs=1e-15)
        assert summary["pointer_sign_correlation"] >= 1 - 1e-6

    def test_diffusion_compare(self, tmp_path):
        cfg = write(tmp_path, "c.json", {"psi": PSI36, "eta": 0.1, "walks": 200, "x_max": 100, "checkpoints": [0, 50, 100]})
        out = tmp_path / "out"
        assert main(["diffusion-compare", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert len(read_csv(out / "diffusion.csv")) == 3

    def test_validation_exit_code(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", {"psi": [[0.5, 0], [0.5, 0]], "eta": 0.05})
        assert main(["ensemble", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_VALIDATION
        assert "cli.Validation" in capsys.readouterr().err

    def test_limit_exit_code(self, tmp_path, capsys):
        cfg = write(tmp_path, "c.json", {"psi": PSI36, "eta": 0.1, "steps": 13})
        assert main(["enumerate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_LIMIT
        assert "DimensionTooLarge" in capsys.readouterr().err

    def test_bad_thread_env(self, monkeypatch):
        monkeypatch.setenv("SIMPLEX_COLLAPSE_THREADS", "many")
        with pytest.raises(ConfigValidationError):
            _threads(None)
        assert _threads(3) == 3


@pytest.mark.parametrize("x", [0.1, 1 / 3, math.pi * 1e-300, 2.0**-1074, 1e308, 0.36 * 1.21 / 0.954])
def test_float_format_round_trips(x):
    assert float(fmt(x)) == x
