"""CLI: config validation, subcommands, outputs, and manifest round-trips."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from levyq.cli import (
    EXIT_CERTIFICATION,
    EXIT_CONFIG,
    EXIT_OK,
    load_config,
    main,
)

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def base_config(**overrides):
    cfg = {
        "model": {
            "kind": "mg1",
            "lambda": "1/4",
            "job": {"family": "uniform", "params": {"lo": 1, "hi": 5}},
        },
        "grid": {"delta": "1/10", "m": 15},
        "initial": {"dirac": 1},
        "horizon": {"t_end": 1, "snapshot_times": [0.5, 1]},
        "bound_mode": "refined",
        "queries": [{"time": 1, "threshold": 5, "slack": 0.1}],
    }
    cfg.update(overrides)
    return cfg


def write_config(tmp_path, cfg, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


class TestConfigParsing:
    def test_rational_strings(self, tmp_path):
        cfg = load_config(write_config(tmp_path, base_config()))
        assert cfg.grid.m_delta == 150
        assert cfg.grid.delta == pytest.approx(0.1)
        assert cfg.horizon_steps == 10
        assert cfg.snapshot_steps == [0, 5, 10]

    def test_non_multiple_rejected(self, tmp_path):
        cfg = base_config(grid={"delta": "1/10", "m": 15.03})
        with pytest.raises(Exception, match="multiple"):
            load_config(write_config(tmp_path, cfg))

    def test_near_multiple_floats_accepted(self, tmp_path):
        cfg = base_config(grid={"delta": 0.1, "m": 15.000000000001})
        parsed = load_config(write_config(tmp_path, cfg))
        assert parsed.grid.m_delta == 150

    def test_snapshot_off_grid_rejected(self, tmp_path):
        cfg = base_config(horizon={"t_end": 1, "snapshot_times": [0.55]})
        with pytest.raises(Exception, match="multiple"):
            load_config(write_config(tmp_path, cfg))

    def test_unknown_family(self, tmp_path):
        cfg = base_config()
        cfg["model"]["job"] = {"family": "zeta", "params": {}}
        assert main(["solve", write_config(tmp_path, cfg)]) == EXIT_CONFIG

    def test_invalid_json_reports_location(self, tmp_path, capsys):
        path = tmp_path / "bad.json"
        path.write_text("{\n  broken\n}")
        assert main(["solve", str(path)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert "bad.json:2" in err

    def test_missing_file(self):
        assert main(["solve", "/nonexistent/config.json"]) == EXIT_CONFIG


class TestSolveCommand:
    def test_writes_outputs(self, tmp_path, capsys):
        path = write_config(tmp_path, base_config())
        out = tmp_path / "out"
        assert main(["solve", path, "--out", str(out)]) == EXIT_OK
        assert (out / "ledger.csv").exists()
        assert (out / "manifest.json").exists()
        assert (out / "density_t1.csv").exists()
        printed = capsys.readouterr().out
        assert "P(Q=0)" in printed
        assert "P(Q > 5)" in printed

    def test_density_csv_roundtrip(self, tmp_path):
        path = write_config(tmp_path, base_config())
        out = tmp_path / "out"
        main(["solve", path, "--out", str(out)])
        with (out / "density_t1.csv").open() as f:
            rows = list(csv.DictReader(f))
        # atom row plus one row per interval
        assert len(rows) == 1 + 150
        assert rows[0]["density"] == ""
        total = float(rows[0]["mass"]) + sum(float(r["mass"]) for r in rows[1:])
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_ledger_csv_consistent(self, tmp_path):
        path = write_config(tmp_path, base_config())
        out = tmp_path / "out"
        main(["solve", path, "--out", str(out)])
        with (out / "ledger.csv").open() as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 11  # step 0 plus 10 steps
        cum = [float(r["cumulative"]) for r in rows]
        assert all(b >= a for a, b in zip(cum, cum[1:]))
        parts = sum(
            float(rows[k][c])
            for k in range(1, 11)
            for c in ("jump_aggregation", "jump_cut", "truncation_weighted", "slack")
        )
        assert cum[-1] == pytest.approx(cum[0] + parts, rel=1e-12)

    def test_manifest_roundtrip_bit_identical(self, tmp_path):
        path = write_config(tmp_path, base_config())
        out1 = tmp_path / "o1"
        out2 = tmp_path / "o2"
        assert main(["solve", path, "--out", str(out1)]) == EXIT_OK
        manifest = out1 / "manifest.json"
        assert main(["solve", str(manifest), "--out", str(out2)]) == EXIT_OK
        d1 = json.loads(manifest.read_text())["outputs"]
        d2 = json.loads((out2 / "manifest.json").read_text())["outputs"]
        assert d1 == d2

    def test_heavy_tail_mg1_refused(self, tmp_path, capsys):
        cfg = base_config()
        cfg["model"]["job"] = {"family": "pareto", "params": {"x_min": 1, "alpha": 0.9}}
        assert main(["solve", write_config(tmp_path, cfg)]) == EXIT_CERTIFICATION
        assert "mean" in capsys.readouterr().err

    def test_bound_mode_flag(self, tmp_path):
        path = write_config(tmp_path, base_config())
        out_b = tmp_path / "basic"
        out_r = tmp_path / "refined"
        main(["solve", path, "--out", str(out_b), "--bound-mode", "basic"])
        main(["solve", path, "--out", str(out_r), "--bound-mode", "refined"])
        def final(out):
            with (out / "ledger.csv").open() as f:
                return float(list(csv.DictReader(f))[-1]["cumulative"])
        assert final(out_r) <= final(out_b) + 1e-15


class TestMatrixCommand:
    def test_dense_dump_matches_kernel(self, tmp_path):
        import levyq

        cfg = base_config()
        path = write_config(tmp_path, cfg)
        out = tmp_path / "out"
        assert main(["matrix", path, "--out", str(out)]) == EXIT_OK
        data = np.genfromtxt(out / "matrix.csv", delimiter=",", skip_header=1)
        dense_csv = data[:, 1:]
        parsed = load_config(path)
        kern = levyq.build_kernel(parsed.spec, parsed.grid)
        assert np.max(np.abs(dense_csv - kern.dense())) < 1e-12

    def test_large_grid_refused(self, tmp_path):
        cfg = base_config(grid={"delta": "1/500", "m": 50})
        assert main(["matrix", write_config(tmp_path, cfg)]) == EXIT_CONFIG

    def test_absorbing_variant_matrix_only(self, tmp_path):
        cfg = base_config()
        cfg["model"] = {
            "kind": "spectrally_negative",
            "lambda": 0.5,
            "job": {"family": "pareto", "params": {"x_min": 1, "alpha": 1.5}},
            "absorbing_zero": True,
        }
        path = write_config(tmp_path, cfg)
        # the sink dynamics carry no certificate, only the kernel dump works
        assert main(["solve", path, "--out", str(tmp_path / "s")]) == EXIT_CERTIFICATION
        assert main(["matrix", path, "--out", str(tmp_path / "m")]) == EXIT_OK


class TestValidateCommand:
    def test_small_run_passes(self, tmp_path, capsys):
        cfg = base_config(
            validation={"enabled": True, "n_paths": 20000, "seed": 42},
            horizon={"t_end": 1, "snapshot_times": [1]},
        )
        path = write_config(tmp_path, cfg)
        out = tmp_path / "out"
        code = main(["validate", path, "--out", str(out)])
        printed = capsys.readouterr().out
        assert (out / "validation.csv").exists()
        with (out / "validation.csv").open() as f:
            rows = list(csv.DictReader(f))
        assert len(rows) == 1
        assert rows[0]["status"] in ("pass", "fail")
        assert code in (EXIT_OK, 4)
        assert "empirical" in printed


class TestShippedConfigs:
    """The checked-in example files parse and run at reduced resolution."""

    @pytest.mark.parametrize(
        "name", ["mg1_uniform.json", "mg1_erlang_heavy.json", "specneg_pareto.json"]
    )
    def test_reduced_resolution_run(self, name, tmp_path):
        raw = json.loads((CONFIG_DIR / name).read_text())
        raw["grid"]["delta"] = "1/4"
        raw["horizon"]["t_end"] = 2
        raw["horizon"]["snapshot_times"] = [1, 2]
        raw["queries"] = []
        raw.pop("output", None)
        path = write_config(tmp_path, raw, name)
        out = tmp_path / "out"
        assert main(["solve", str(path), "--out", str(out)]) == EXIT_OK
        with (out / "ledger.csv").open() as f:
            rows = list(csv.DictReader(f))
        assert float(rows[-1]["cumulative"]) > 0.0
