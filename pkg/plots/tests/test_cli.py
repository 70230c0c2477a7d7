"""CLI surface: selection, strictness, exit codes."""
from __future__ import annotations

from shockplots.cli import main


class TestExitCodes:
    def test_default_render_succeeds_with_skips(self, shock_dir, capsys):
        assert main(["--run", str(shock_dir)]) == 0
        out = capsys.readouterr()
        assert "mu_min" in out.out
        assert "skipped residuals" in out.err

    def test_strict_fails_on_skip(self, shock_dir, capsys):
        assert main(["--run", str(shock_dir), "--strict"]) == 1
        assert "warning: skipped" in capsys.readouterr().err

    def test_strict_passes_when_everything_renders(self, shock_dir, capsys):
        argv = ["--run", str(shock_dir), "--figures", "mu_min,fan,mu_profiles",
                "--strict"]
        assert main(argv) == 0
        assert capsys.readouterr().err == ""

    def test_unknown_figure_is_config_error(self, shock_dir, capsys):
        assert main(["--run", str(shock_dir), "--figures", "pie"]) == 2
        assert "config error" in capsys.readouterr().err

    def test_empty_selection_is_config_error(self, shock_dir, capsys):
        assert main(["--run", str(shock_dir), "--figures", " , "]) == 2
        assert "selected nothing" in capsys.readouterr().err

    def test_invalid_run_dir_is_config_error(self, tmp_path, capsys):
        assert main(["--run", str(tmp_path)]) == 2
        assert "manifest" in capsys.readouterr().err


class TestOutputs:
    def test_figures_land_inside_run_dir(self, burgers_dir):
        assert main(["--run", str(burgers_dir), "--figures", "characteristics"]) == 0
        assert (burgers_dir / "characteristics.png").is_file()

    def test_sweep_dir_strict_renders_tables(self, sweep_dir):
        argv = ["--run", str(sweep_dir), "--figures", "residuals,scattering",
                "--strict"]
        assert main(argv) == 0
        assert (sweep_dir / "residuals.png").is_file()
        assert (sweep_dir / "scattering.png").is_file()
