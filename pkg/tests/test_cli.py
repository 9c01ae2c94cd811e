import math
import os

import numpy as np
import pytest

from spinchaos import MU_0, angle_grid, qm_pdown
from spinchaos.cli import main
from spinchaos.config import DEFAULTS
from spinchaos.fileio import read_manifest, read_outcomes_csv

TINY = "n_angles = 11\nn_runs = 3\n"


@pytest.fixture
def tiny_cfg(tmp_path):
    path = tmp_path / "tiny.cfg"
    path.write_text(TINY)
    return str(path)


def _read(path):
    with open(path, "rb") as fh:
        return fh.read()


class TestSimulate:
    def test_writes_grid_and_manifest(self, tiny_cfg, tmp_path):
        out = str(tmp_path / "run")
        assert main(["simulate", "--config", tiny_cfg, "--out", out]) == 0
        lines = _read(os.path.join(out, "outcomes.csv")).splitlines()
        assert lines[0] == b"theta_index,run_index,down,unsettled"
        assert len(lines) == 1 + 11 * 3
        manifest = read_manifest(os.path.join(out, "manifest.json"))
        assert manifest["n_angles"] == 11
        assert manifest["master_seed"] == DEFAULTS["master_seed"]
        assert len(manifest["perturbations"]) == 3
        assert "outcomes.csv" in manifest["files"]

    def test_byte_identical_reruns(self, tiny_cfg, tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        main(["simulate", "--config", tiny_cfg, "--out", out1])
        main(["simulate", "--config", tiny_cfg, "--out", out2])
        assert _read(os.path.join(out1, "outcomes.csv")) == \
            _read(os.path.join(out2, "outcomes.csv"))

    def test_worker_count_does_not_change_bytes(self, tiny_cfg, tmp_path):
        outs = []
        for w in ("1", "2", "8"):
            out = str(tmp_path / f"w{w}")
            main(["simulate", "--config", tiny_cfg, "--out", out,
                  "--workers", w])
            outs.append(_read(os.path.join(out, "outcomes.csv")))
        assert outs[0] == outs[1] == outs[2]

    def test_seed_override(self, tiny_cfg, tmp_path):
        out1, out2 = str(tmp_path / "a"), str(tmp_path / "b")
        main(["simulate", "--config", tiny_cfg, "--out", out1, "--seed", "1"])
        main(["simulate", "--config", tiny_cfg, "--out", out2, "--seed", "2"])
        assert _read(os.path.join(out1, "outcomes.csv")) != \
            _read(os.path.join(out2, "outcomes.csv"))

    def test_bad_config_exit_code(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("dt_ratio = 0.1\n")
        assert main(["simulate", "--config", str(bad),
                     "--out", str(tmp_path / "x")]) == 2


class TestField:
    def test_single_point_at_center(self, tmp_path):
        out = str(tmp_path / "f")
        assert main(["field", "--out", out, "--x-min", "0", "--nx", "1",
                     "--z-min", "0", "--nz", "1"]) == 0
        rows = _read(os.path.join(out, "field.csv")).decode().splitlines()
        assert rows[0] == "x,z,Bx,Bz"
        x, z, bx, bz = (float(v) for v in rows[1].split(","))
        assert (x, z, bx) == (0.0, 0.0, 0.0)
        expected = MU_0 * DEFAULTS["loop_current"] / (2 * DEFAULTS["loop_radius"])
        assert bz == pytest.approx(expected, rel=1e-12)

    def test_transit_row_changes_sign(self, tmp_path):
        out = str(tmp_path / "f")
        main(["field", "--out", out, "--x-min", "-0.2", "--x-max", "0",
              "--nx", "81", "--z-min", "0.05", "--nz", "1"])
        data = np.loadtxt(os.path.join(out, "field.csv"), delimiter=",",
                          skiprows=1)
        bz = data[:, 3]
        assert bz[0] < 0 < bz[-1]

    def test_mirror_antisymmetry(self, tmp_path):
        out = str(tmp_path / "f")
        main(["field", "--out", out, "--x-min", "-0.08", "--x-max", "0.08",
              "--nx", "17", "--z-min", "0.03", "--nz", "1"])
        data = np.loadtxt(os.path.join(out, "field.csv"), delimiter=",",
                          skiprows=1)
        bx = data[:, 2]
        # linspace interior points mirror only to one ulp, hence the atol
        np.testing.assert_allclose(bx, -bx[::-1], rtol=0, atol=1e-18)


def _write_outcomes(path, outcomes):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("theta_index,run_index,down,unsettled\n")
        for i in range(outcomes.shape[0]):
            for r in range(outcomes.shape[1]):
                fh.write(f"{i},{r},{int(outcomes[i, r])},0\n")


class TestAnalyze:
    def test_thresholded_reference_outcomes(self, tmp_path):
        # all runs equal to the sharp step indicator(qm_pdown > 1/2):
        # smoothing turns the step into a ramp whose gap to the smooth
        # reference is large and frozen (0.18579, measured via the
        # pipeline); Bernoulli-sampled outcomes below show the intended
        # close-agreement case
        out = str(tmp_path / "a")
        os.makedirs(out)
        angles = angle_grid(1001)
        step = (qm_pdown(angles) > 0.5).astype(np.int8)
        _write_outcomes(os.path.join(out, "outcomes.csv"),
                        np.tile(step[:, None], (1, 5)))
        assert main(["analyze", "--out", out]) == 0
        metrics = read_manifest(os.path.join(out, "metrics.json"))
        assert metrics["rmse_smoothed"] == pytest.approx(0.18579, abs=2e-4)

    def test_bernoulli_outcomes_track_reference(self, tmp_path):
        out = str(tmp_path / "b")
        os.makedirs(out)
        angles = angle_grid(1001)
        rng = np.random.default_rng(42)
        outcomes = (rng.random((1001, 100)) < qm_pdown(angles)[:, None])
        _write_outcomes(os.path.join(out, "outcomes.csv"),
                        outcomes.astype(np.int8))
        assert main(["analyze", "--out", out]) == 0
        metrics = read_manifest(os.path.join(out, "metrics.json"))
        assert metrics["rmse_smoothed"] < 0.05
        assert metrics["d_f"]["smooth_w75"] <= metrics["d_f"]["smooth_w25"] \
            <= metrics["d_f"]["raw"]
        assert os.path.exists(os.path.join(out, "pdown_smooth_w75.csv"))
        assert os.path.exists(os.path.join(out, "dimensions.txt"))

    def test_missing_outcomes_is_io_error(self, tmp_path):
        out = str(tmp_path / "m")
        os.makedirs(out)
        assert main(["analyze", "--out", out]) == 4

    def test_empty_outcomes_rejected(self, tmp_path):
        out = str(tmp_path / "e")
        os.makedirs(out)
        with open(os.path.join(out, "outcomes.csv"), "w") as fh:
            fh.write("theta_index,run_index,down,unsettled\n")
        assert main(["analyze", "--out", out]) == 4


class TestPlot:
    def test_reference_only_single_polyline(self, tmp_path):
        out = str(tmp_path / "p")
        assert main(["plot", "--out", out]) == 0
        svg = _read(os.path.join(out, "pdown.svg")).decode()
        assert svg.count("<polyline") == 1
        assert ">QM</text>" in svg

    def test_two_series_with_labels(self, tmp_path, tiny_cfg):
        run = str(tmp_path / "run")
        main(["simulate", "--config", tiny_cfg, "--out", run])
        main(["analyze", "--config", tiny_cfg, "--out", run])
        out = str(tmp_path / "p")
        assert main(["plot", "--out", out,
                     os.path.join(run, "pdown_raw.csv")]) == 0
        svg = _read(os.path.join(out, "pdown.svg")).decode()
        assert svg.count("<polyline") == 2
        assert ">QM</text>" in svg
        assert ">simulation</text>" in svg

    def test_byte_deterministic(self, tmp_path):
        out1, out2 = str(tmp_path / "p1"), str(tmp_path / "p2")
        main(["plot", "--out", out1])
        main(["plot", "--out", out2])
        assert _read(os.path.join(out1, "pdown.svg")) == \
            _read(os.path.join(out2, "pdown.svg"))


class TestCalibrateAndReport:
    def test_calibrate_writes_log(self, tmp_path):
        cfg = tmp_path / "cal.cfg"
        cfg.write_text("n_angles = 11\nn_runs = 2\n")
        out = str(tmp_path / "cal")
        assert main(["calibrate", "--config", str(cfg), "--out", out,
                     "--points", "2", "--runs", "1", "--span", "1"]) == 0
        log = _read(os.path.join(out, "calibration.csv")).decode().splitlines()
        assert log[0] == "stage,damping,inertia,objective"
        assert len(log) == 1 + 2 * 4  # two stages of a 2x2 grid
        assert os.path.exists(os.path.join(out, "calibration_best.txt"))

    def test_report_summarizes_run(self, tmp_path, tiny_cfg, capsys):
        out = str(tmp_path / "run")
        main(["simulate", "--config", tiny_cfg, "--out", out])
        main(["analyze", "--config", tiny_cfg, "--out", out])
        assert main(["report", "--config", tiny_cfg, "--out", out]) == 0
        text = capsys.readouterr().out
        assert "rmse_smoothed" in text
        assert "11 angles x 3 runs" in text
        assert os.path.exists(os.path.join(out, "report.txt"))

    def test_report_without_run_is_io_error(self, tmp_path):
        assert main(["report", "--out", str(tmp_path / "nope")]) == 4
