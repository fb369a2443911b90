import math

import numpy as np
import pytest

from seba import ConfigError, RunConfig, emit_config, parse_config
from seba.cli import main
from seba.config import parse_config_text


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


class TestParseConfig:
    def test_defaults(self):
        cfg = parse_config({})
        assert cfg.E == pytest.approx(10 * math.pi)
        assert cfg.alpha == math.inf
        assert cfg.count == 500
        assert cfg.x0_ratio == pytest.approx(1 / (2 * math.pi))
        assert cfg.y0_ratio == pytest.approx(1 / (2 * math.pi))
        assert cfg.basis_cutoff == "auto"
        assert cfg.amplitude_cutoff == "basis"
        assert cfg.thresholds == (0.1, 0.9)

    def test_alpha_inf_sentinel(self):
        assert parse_config({"alpha": "inf"}).alpha == math.inf
        assert parse_config({"alpha": "-3.5"}).alpha == -3.5

    def test_constraint_violations_name_the_key(self):
        with pytest.raises(ConfigError, match="x0_ratio"):
            parse_config({"x0_ratio": "0"})
        with pytest.raises(ConfigError, match="E"):
            parse_config({"E": "-1"})
        with pytest.raises(ConfigError, match="count"):
            parse_config({"count": "0"})
        with pytest.raises(ConfigError, match="alpha"):
            parse_config({"alpha": "nan"})

    def test_unknown_key_is_hard_error(self):
        with pytest.raises(ConfigError, match="unknown"):
            parse_config({"bogus": "1"})
        with pytest.raises(ConfigError, match="unknown"):
            parse_config({}, "bogus=1\n")

    def test_malformed_value(self):
        with pytest.raises(ConfigError, match="count"):
            parse_config({"count": "many"})

    def test_precedence_flags_over_file_over_defaults(self):
        text = "E=2.5\ncount=7\n"
        cfg = parse_config({"count": "9"}, text)
        assert cfg.E == 2.5        # from file
        assert cfg.count == 9      # flag wins
        assert cfg.alpha == math.inf  # default

    def test_round_trip(self):
        cfg = parse_config({"E": "3.75", "alpha": "-0.25", "count": "12",
                            "cutoff": "1234.5", "grid": "48x32"})
        again = parse_config(parse_config_text(emit_config(cfg)))
        assert again == cfg

    def test_round_trip_defaults(self):
        cfg = RunConfig()
        assert parse_config(parse_config_text(emit_config(cfg))) == cfg


class TestSpectrumCommand:
    def test_header_and_dirichlet_passthrough(self, capsys):
        code, out, err = run_cli(capsys, "spectrum", "--E", "1.0471975511965976",
                                 "--count", "12", "--cutoff", "2000")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "n,z,kind,E_below,E_above"
        assert len(lines) == 13
        for line in lines[1:]:
            n, z, kind, e_below, e_above = line.split(",")
            assert kind == "Unperturbed"
            assert z == e_above  # byte-equal for the Dirichlet sentinel

    def test_interlacing_rows(self, capsys):
        code, out, _ = run_cli(capsys, "spectrum", "--E", "1.0471975511965976",
                               "--alpha", "-1.5", "--count", "30", "--cutoff", "9000")
        assert code == 0
        rows = [line.split(",") for line in out.splitlines()[1:]]
        assert rows[0][3] == "-inf"
        for n, z, kind, e_below, e_above in rows:
            assert float(e_below) <= float(z) <= float(e_above)

    def test_config_echo_round_trips(self, capsys):
        code, _, err = run_cli(capsys, "spectrum", "--count", "3", "--E", "2.0",
                               "--cutoff", "1500")
        assert code == 0
        echoed = parse_config(parse_config_text(err))
        assert echoed.count == 3
        assert echoed.E == 2.0
        assert echoed.basis_cutoff == 1500.0


class TestFieldCommand:
    def test_boundary_cells_zero_and_pgm(self, capsys, tmp_path):
        pgm = tmp_path / "m.pgm"
        code, out, _ = run_cli(capsys, "field", "--E", "1.0471975511965976",
                               "--alpha", "-0.5", "--mode", "2",
                               "--grid", "41x31", "--cutoff", "4000",
                               "--pgm", str(pgm))
        assert code == 0
        rows = [line.split(",") for line in out.splitlines()]
        assert len(rows) == 31 and len(rows[0]) == 41
        grid = np.array([[float(v) for v in row] for row in rows])
        assert np.all(grid[0] == 0.0) and np.all(grid[-1] == 0.0)
        assert np.all(grid[:, 0] == 0.0) and np.all(grid[:, -1] == 0.0)
        data = pgm.read_bytes()
        assert data.startswith(b"P5\n41 31\n255\n")
        assert len(data) == len(b"P5\n41 31\n255\n") + 41 * 31

    def test_attractor_mode_peaks_at_scatterer(self, capsys):
        code, out, _ = run_cli(capsys, "field", "--E", "1.0471975511965976",
                               "--alpha", "-0.48", "--mode", "1",
                               "--grid", "101x101", "--cutoff", "20000")
        assert code == 0
        grid = np.array([[float(v) for v in line.split(",")]
                         for line in out.splitlines()])
        iy, ix = np.unravel_index(np.argmax(grid), grid.shape)
        # scatterer cell on the 101x101 closed grid
        x0_cell = round(1 / (2 * math.pi) * 100)
        y0_cell = round(1 / (2 * math.pi) * 100)
        assert abs(ix - x0_cell) <= 2
        assert abs(iy - y0_cell) <= 2


class TestTableCommand:
    def test_header_and_ranges(self, capsys):
        code, out, _ = run_cli(capsys, "table", "--E", "31.41592653589793",
                               "--alpha", "-0.4", "--count", "40",
                               "--cutoff", "8000")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "n,z,kind,R1,A,localized"
        assert len(lines) == 41
        for line in lines[1:]:
            n, z, kind, r1, amp, localized = line.split(",")
            assert 0.0 <= float(r1) <= 1.0
            assert localized in ("true", "false")
            assert (float(r1) < 0.1 or float(r1) > 0.9) == (localized == "true")

    def test_dirichlet_rows_unperturbed(self, capsys):
        code, out, _ = run_cli(capsys, "table", "--count", "10",
                               "--cutoff", "3000")
        assert code == 0
        for line in out.splitlines()[1:]:
            assert line.split(",")[2] == "Unperturbed"


class TestSweepCommands:
    def test_alpha_sweep_explicit_grid(self, capsys):
        code, out, _ = run_cli(capsys, "sweep-alpha", "--E", "31.41592653589793",
                               "--count", "60", "--alphas=-0.5,0.5",
                               "--cutoff", "8000")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "alpha,localized_count"
        assert len(lines) == 3

    def test_ecc_sweep_ordering(self, capsys):
        code, out, _ = run_cli(capsys, "sweep-ecc",
                               "--e-grid", "1.0471975511965976,31.41592653589793",
                               "--alphas=-0.5,-0.1,0.2", "--count", "80")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "E,best_alpha,localized_count"
        first = lines[1].split(",")
        second = lines[2].split(",")
        assert float(first[0]) < float(second[0])
        assert int(second[2]) > int(first[2])

    def test_amp_curve_shape(self, capsys):
        code, out, _ = run_cli(capsys, "amp-curve", "--E", "1.0471975511965976",
                               "--modes", "1,2", "--samples", "2",
                               "--alpha-min", "-5", "--alpha-max", "5",
                               "--cutoff", "4000")
        assert code == 0
        lines = out.splitlines()
        assert lines[0] == "alpha,n,A"
        assert len(lines) == 5

    def test_empty_grid_usage_error(self, capsys):
        code, _, err = run_cli(capsys, "sweep-alpha", "--alphas", " ",
                               "--count", "5")
        assert code == 1
        code, _, err = run_cli(capsys, "sweep-ecc", "--e-grid", "",
                               "--count", "5")
        assert code == 1


class TestExitCodes:
    def test_usage_error_is_1(self, capsys):
        assert run_cli(capsys, "spectrum", "--bogus-flag", "3")[0] == 1
        assert run_cli(capsys, "table", "--x0-ratio", "0")[0] == 1
        assert run_cli(capsys, "table", "--count", "weird")[0] == 1

    def test_numerical_error_is_2(self, capsys):
        # cutoff below the ground eigenvalue: empty basis
        code, _, err = run_cli(capsys, "spectrum", "--cutoff", "5",
                               "--count", "3")
        assert code == 2

    def test_io_error_is_3(self, capsys, tmp_path):
        code, _, err = run_cli(capsys, "table", "--count", "2",
                               "--cutoff", "3000",
                               "--out", str(tmp_path / "no" / "dir" / "t.csv"))
        assert code == 3
        code, _, err = run_cli(capsys, "table", "--count", "2",
                               "--config", str(tmp_path / "missing.cfg"))
        assert code == 3

    def test_config_file_applies(self, capsys, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("count=4\nE=2.0\ncutoff=1500\n")
        code, out, _ = run_cli(capsys, "spectrum", "--config", str(cfg))
        assert code == 0
        assert len(out.splitlines()) == 5


class TestDeterminism:
    def test_table_bytes_stable_across_thread_env(self, capsys, monkeypatch):
        outputs = []
        for threads in ("1", "4", "auto"):
            monkeypatch.setenv("SEBA_THREADS", threads)
            code, out, _ = run_cli(capsys, "table", "--E", "31.41592653589793",
                                   "--alpha", "-1.0", "--count", "50",
                                   "--cutoff", "8000")
            assert code == 0
            outputs.append(out)
        assert outputs[0] == outputs[1] == outputs[2]
