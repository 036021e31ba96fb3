import json

import numpy as np
import pytest

from pressure_lab import acceptance
from pressure_lab.acceptance import select_criteria, verify_all, write_csv
from pressure_lab.cli import EXIT_FAILED, EXIT_NUMERICAL, EXIT_OK, EXIT_USAGE, main
from pressure_lab.config import DEFAULT_TOLERANCES, ExperimentConfig, quick_config
from pressure_lab.errors import ConfigurationError
from pressure_lab.spectral_core import load_field


def _write_config(tmp_path, **changes):
    cfg = quick_config(output_dir=str(tmp_path / "out"), **changes)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg.as_dict()))
    return path


class TestConfig:
    def test_defaults_valid(self):
        cfg = ExperimentConfig()
        assert cfg.geometry == "both" and cfg.tol("jump") == DEFAULT_TOLERANCES["jump"]

    @pytest.mark.parametrize("changes, field", [
        ({"gamma_list": [0.7]}, "gamma_list[0]"),
        ({"gamma_list": []}, "gamma_list"),
        ({"seeds": [-1]}, "seeds[0]"),
        ({"grid_n": 100}, "grid_n"),
        ({"J_max": 9}, "J_max"),
        ({"delta": 0.5}, "delta"),
        ({"geometry": "sphere"}, "geometry"),
        ({"borderline_J": [3]}, "borderline_J[0]"),
        ({"tolerances": {"jump": -1.0}}, "tolerances.jump"),
        ({"tolerances": {"nonsense": 1.0}}, "tolerances.nonsense"),
    ])
    def test_validation_names_field(self, changes, field):
        with pytest.raises(ConfigurationError, match=field.replace("[", r"\[").replace("]", r"\]")):
            ExperimentConfig().replace(**changes)

    def test_unknown_top_level_field(self):
        with pytest.raises(ConfigurationError, match="colour"):
            ExperimentConfig.from_dict({"colour": "blue"})

    def test_partial_tolerances_merge(self):
        cfg = ExperimentConfig.from_dict({"tolerances": {"jump": 1e-3}})
        assert cfg.tol("jump") == 1e-3 and cfg.tol("flat_inverse") == DEFAULT_TOLERANCES["flat_inverse"]

    def test_round_trip(self, tmp_path):
        path = _write_config(tmp_path)
        assert ExperimentConfig.load(path) == quick_config(output_dir=str(tmp_path / "out"))

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(ConfigurationError):
            ExperimentConfig.load(path)

    def test_quick_config(self):
        cfg = quick_config()
        assert cfg.grid_n == 256 and cfg.J_max == 6 and cfg.seeds == [0]


class TestSelection:
    def test_default_is_everything(self):
        assert select_criteria() == [f"A{i}" for i in range(1, 11)]

    def test_module_and_keys(self):
        assert select_criteria("symbols") == ["A8"]
        assert select_criteria("a4, A2") == ["A2", "A4"]

    def test_geometry(self):
        assert "A6" not in select_criteria(geometry="torus")
        assert "A1" not in select_criteria(geometry="disk")

    def test_unknown(self):
        with pytest.raises(ConfigurationError):
            select_criteria("A11")


class TestCsv:
    def test_float_repr(self, tmp_path):
        write_csv(tmp_path / "t.csv", ("a", "b"), [(1, 0.1), (2, np.float64(1 / 3))])
        assert (tmp_path / "t.csv").read_text() == "a,b\n1,0.1\n2,0.3333333333333333\n"


class TestPartialReport:
    def test_error_recorded_and_others_run(self, tmp_path, monkeypatch):
        def boom(cfg):
            raise FloatingPointError("injected")

        monkeypatch.setattr(acceptance, "criterion_A6", boom)
        cfg = quick_config(output_dir=str(tmp_path))
        crits = verify_all(cfg, ["A4", "A6"])
        assert crits.errors == ["A6"]
        assert [c.key for c in crits] == ["A4", "A6"] and crits[0].passed
        disk = json.loads((tmp_path / "report_disk.json").read_text())
        assert "injected" in disk["criteria"]["A6"]["summary"]
        periodic = json.loads((tmp_path / "report_periodic.json").read_text())
        assert periodic["criteria"]["A4"]["passed"]
        assert periodic["provenance"]["config"]["grid_n"] == 256


class TestCli:
    def test_bad_gamma_exit_code(self, tmp_path, capsys):
        path = _write_config(tmp_path)
        data = json.loads(path.read_text())
        data["gamma_list"] = [0.7]
        path.write_text(json.dumps(data))
        assert main(["verify-all", "--config", str(path)]) == EXIT_USAGE
        assert "gamma_list[0]" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert main(["verify-all", "--config", str(tmp_path / "nope.json")]) == EXIT_USAGE

    def test_synth_solve_norms(self, tmp_path, capsys):
        path = _write_config(tmp_path)
        u_path = tmp_path / "u.bin"
        assert main(["synth", "--config", str(path), "--out", str(u_path)]) == EXIT_OK
        assert load_field(u_path).n == 256
        capsys.readouterr()
        p_path = tmp_path / "p.bin"
        assert main(["solve-torus", "--field", str(u_path), "--out", str(p_path)]) == EXIT_OK
        rec = json.loads(capsys.readouterr().out)
        assert rec["n"] == 256 and rec["p_sup"] > 0
        assert main(["norms", "--field", str(u_path), "--s", "0.25"]) == EXIT_OK
        assert float(capsys.readouterr().out) > 0
        assert main(["norms", "--field", str(p_path), "--s", "0.5", "--all", "--json"]) == EXIT_OK
        rec = json.loads(capsys.readouterr().out)
        assert {"zygmund_norm", "loglip_norm", "holder_norm"} <= set(rec)

    def test_solve_disk(self, tmp_path, capsys):
        path = _write_config(tmp_path, disk_n=32)
        assert main(["solve-disk", "--config", str(path), "--J", "3"]) == EXIT_OK
        rec = json.loads(capsys.readouterr().out)
        assert rec["solve_residual"] <= 1e-9

    def test_split(self, tmp_path, capsys):
        path = _write_config(tmp_path)
        assert main(["split", "--config", str(path)]) == EXIT_OK
        rec = json.loads(capsys.readouterr().out)
        assert rec["identity_defect"] <= 1e-10
        assert (tmp_path / "out" / "blocks_0.25_0.csv").exists()

    def test_symbols(self, tmp_path, capsys):
        path = _write_config(tmp_path, symbol_n=32)
        assert main(["symbols", "--config", str(path)]) == EXIT_OK
        rec = json.loads(capsys.readouterr().out)
        assert rec["remainder_slope"] < 0 and (tmp_path / "out" / "remainder.csv").exists()

    def test_verify_only(self, tmp_path, capsys):
        path = _write_config(tmp_path)
        assert main(["verify-all", "--config", str(path), "--only", "A4"]) == EXIT_OK
        out = capsys.readouterr().out
        assert out.startswith("A4 PASS")
        assert (tmp_path / "out" / "report_periodic.json").exists()

    def test_verify_unknown_only(self, tmp_path):
        path = _write_config(tmp_path)
        assert main(["verify-all", "--config", str(path), "--only", "A42"]) == EXIT_USAGE

    def test_verify_error_exit(self, tmp_path, monkeypatch):
        def boom(cfg):
            raise FloatingPointError("injected")

        monkeypatch.setattr(acceptance, "criterion_A4", boom)
        path = _write_config(tmp_path)
        assert main(["verify-all", "--config", str(path), "--only", "A4"]) == EXIT_NUMERICAL

    def test_verify_undocumented_failure(self, tmp_path, monkeypatch):
        real = acceptance.criterion_A4

        def failing(cfg):
            c, a = real(cfg)
            c.passed = False
            return c, a

        monkeypatch.setattr(acceptance, "criterion_A4", failing)
        path = _write_config(tmp_path)
        assert main(["verify-all", "--config", str(path), "--only", "A4"]) == EXIT_FAILED
