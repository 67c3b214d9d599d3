"""Config parsing, experiment commands, output formats and exit codes."""

import json

import numpy as np
import pytest

from induction_sbp.cli import (
    EXIT_BOUND,
    EXIT_CONFIG,
    ConfigError,
    cmd_converge,
    cmd_run,
    cmd_stability,
    config_to_dict,
    load_config,
    main,
    parse_config,
    save_config,
)

BASE = {
    "schema_version": 1,
    "scheme": "sbp2",
    "grid": {"nx": 10, "ny": 10},
    "domain": [-1.0, 1.0, -1.0, 1.0],
    "velocity": {"kind": "rotation"},
    "initial": "gaussian_hump",
    "boundary": "zero",
    "final_time": 0.2,
    "dt": {"rule": "fixed", "value": 0.05},
    "output_dir": "out",
    "experiment": {"kind": "run", "snapshot_times": [0.1]},
}


def write_config(tmp_path, **overrides):
    data = json.loads(json.dumps(BASE))
    for key, value in overrides.items():
        if isinstance(value, dict) and isinstance(data.get(key), dict):
            data[key].update(value)
        else:
            data[key] = value
    path = tmp_path / "config.json"
    path.write_text(json.dumps(data))
    return path


class TestConfigParsing:
    def test_roundtrip_is_idempotent(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        out = tmp_path / "resaved.json"
        save_config(cfg, out)
        cfg2 = load_config(out)
        assert config_to_dict(cfg) == config_to_dict(cfg2)

    @pytest.mark.parametrize(
        "overrides,needle",
        [
            ({"schema_version": 2}, "schema_version"),
            ({"scheme": "sbp6"}, "scheme"),
            ({"grid": {"nx": 3}}, "grid"),
            ({"domain": [1.0, -1.0, 0.0, 1.0]}, "domain"),
            ({"velocity": {"kind": "vortex"}}, "velocity"),
            ({"boundary": "sticky"}, "boundary"),
            ({"final_time": -2.0}, "final_time"),
            ({"dt": {"rule": "fixed", "value": -0.1}}, "dt.value"),
            ({"dt": {"rule": "weird"}}, "dt.rule"),
            ({"experiment": {"kind": "nope"}}, "experiment.kind"),
        ],
    )
    def test_invalid_fields_name_their_path(self, tmp_path, overrides, needle):
        with pytest.raises(ConfigError, match=needle.replace(".", r"\.")):
            load_config(write_config(tmp_path, **overrides))

    def test_converge_requires_doubling_grids(self, tmp_path):
        path = write_config(tmp_path, experiment={"kind": "converge", "grids": [8, 24]})
        with pytest.raises(ConfigError, match="doubling"):
            load_config(path)

    def test_converge_requires_rotation(self, tmp_path):
        path = write_config(
            tmp_path,
            velocity={"kind": "constant", "a": 1.0, "b": 0.0},
            experiment={"kind": "converge", "grids": [8, 16]},
        )
        with pytest.raises(ConfigError, match="rotation"):
            load_config(path)

    def test_stability_requires_zero_boundary(self, tmp_path):
        path = write_config(
            tmp_path,
            boundary="exact",
            experiment={"kind": "stability", "dts": [0.1]},
        )
        with pytest.raises(ConfigError, match="zero boundary"):
            load_config(path)

    def test_min_grid_depends_on_scheme(self):
        data = json.loads(json.dumps(BASE))
        data["scheme"] = "sbp4"
        data["grid"] = {"nx": 11, "ny": 11}
        with pytest.raises(ConfigError, match="minimum"):
            parse_config(data)

    def test_bad_json_reported(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(ConfigError, match="JSON"):
            load_config(path)


class TestRunCommand:
    def test_outputs_and_snapshots(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        out = tmp_path / "out"
        assert cmd_run(cfg, out, quiet=True) == 0
        names = {p.name for p in out.iterdir()}
        assert {"field_initial.csv", "field_final.csv", "diagnostics.csv",
                "snapshots_index.csv", "field_t0.1.csv"} <= names
        diag = (out / "diagnostics.csv").read_text().splitlines()
        assert diag[0] == "n,t,energy,growth,div_norm"
        assert len(diag) == 2 + 4  # header + initial row + 4 steps
        index = (out / "snapshots_index.csv").read_text().splitlines()
        assert index[1].split(",")[2] == "field_t0.1.csv"

    def test_zero_final_time_final_equals_initial(self, tmp_path):
        cfg = load_config(write_config(tmp_path, final_time=0.0, experiment={"kind": "run", "snapshot_times": []}))
        out = tmp_path / "out"
        cmd_run(cfg, out, quiet=True)
        assert (out / "field_initial.csv").read_bytes() == (out / "field_final.csv").read_bytes()

    def test_zero_velocity_preserves_field(self, tmp_path):
        cfg = load_config(write_config(tmp_path, velocity={"kind": "constant", "a": 0.0, "b": 0.0},
                                       experiment={"kind": "run", "snapshot_times": []}))
        out = tmp_path / "out"
        cmd_run(cfg, out, quiet=True)
        initial = np.loadtxt(out / "field_initial.csv", delimiter=",", skiprows=1)
        final = np.loadtxt(out / "field_final.csv", delimiter=",", skiprows=1)
        assert np.abs(initial - final).max() <= 1e-12

    def test_deterministic_reruns(self, tmp_path):
        cfg = load_config(write_config(tmp_path))
        out1, out2 = tmp_path / "a", tmp_path / "b"
        cmd_run(cfg, out1, quiet=True)
        cmd_run(cfg, out2, quiet=True)
        for name in ("field_final.csv", "diagnostics.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()


class TestConvergeCommand:
    def test_table_with_rates(self, tmp_path):
        cfg = load_config(write_config(
            tmp_path,
            final_time=0.3,
            dt={"rule": "scaled", "power": 2.0, "constant": 1.0},
            experiment={"kind": "converge", "grids": [8, 16]},
        ))
        out = tmp_path / "out"
        assert cmd_converge(cfg, out, quiet=True) == 0
        lines = (out / "convergence.csv").read_text().splitlines()
        assert lines[0] == "grid,error_percent,rate"
        assert lines[1].startswith("8x8,") and lines[1].endswith(",")
        assert lines[2].startswith("16x16,")
        assert float(lines[2].split(",")[2]) > 0.5  # refinement helps
        assert (out / "convergence.txt").exists()

    def test_single_grid_row_has_no_rate(self, tmp_path):
        cfg = load_config(write_config(
            tmp_path,
            final_time=0.1,
            experiment={"kind": "converge", "grids": [8]},
        ))
        out = tmp_path / "out"
        assert cmd_converge(cfg, out, quiet=True) == 0
        lines = (out / "convergence.csv").read_text().splitlines()
        assert len(lines) == 2
        assert lines[1].endswith(",")


class TestStabilityCommand:
    def test_zero_velocity_growth_is_one(self, tmp_path):
        cfg = load_config(write_config(
            tmp_path,
            velocity={"kind": "constant", "a": 0.0, "b": 0.0},
            final_time=0.5,
            experiment={"kind": "stability", "dts": [0.1, 0.25]},
        ))
        out = tmp_path / "out"
        assert cmd_stability(cfg, out, quiet=True) == 0
        rows = (out / "stability.csv").read_text().splitlines()
        assert rows[0] == "dt,steps,max_growth,k_fit,within_bound"
        for line in rows[1:]:
            dt, steps, growth, k_fit, ok = line.split(",")
            assert float(growth) == pytest.approx(1.0, abs=1e-12)
            assert float(k_fit) == pytest.approx(0.0, abs=1e-10)
            assert ok == "1"

    def test_bound_violation_exit_code(self, tmp_path):
        # an impossible bound (K = 0 exactly, growth slightly above 1.0
        # tolerated as violation) forces exit code 4
        cfg = load_config(write_config(
            tmp_path,
            velocity={"kind": "shear"},
            final_time=0.5,
            experiment={"kind": "stability", "dts": [0.1], "growth_k_bound": -1.0},
        ))
        out = tmp_path / "out"
        assert cmd_stability(cfg, out, quiet=True) == EXIT_BOUND


class TestMainEntry:
    def test_run_via_main(self, tmp_path, capsys):
        path = write_config(tmp_path)
        out = tmp_path / "cli_out"
        assert main(["--output-dir", str(out), "--quiet", "run", str(path)]) == 0
        assert (out / "field_final.csv").exists()

    def test_config_error_exit_code(self, tmp_path, capsys):
        path = write_config(tmp_path, scheme="sbp9")
        assert main(["run", str(path)]) == EXIT_CONFIG
        assert "config error" in capsys.readouterr().err

    def test_command_experiment_mismatch(self, tmp_path, capsys):
        path = write_config(tmp_path)  # experiment.kind == run
        assert main(["converge", str(path)]) == EXIT_CONFIG

    def test_missing_config_file(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "absent.json")]) == EXIT_CONFIG
