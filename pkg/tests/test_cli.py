import math
import os
import subprocess
import sys
import xml.etree.ElementTree as ET

import pytest

from nsbesov.cli import ConfigError, RunConfig, fmt, read_config_file, resolve, run
from nsbesov.plots import line_plot


class TestResolve:
    def test_defaults_per_command(self):
        cfg = resolve(["case-ii"])
        assert (cfg.p, cfg.q, cfg.Ns) == (4.0, math.inf, (16, 32, 64, 128))
        assert resolve(["verify-identities"]).jmin == -6

    def test_flags(self):
        cfg = resolve(["case-i", "--p", "2", "--q", "2", "--M", "16", "--N", "4,16,64", "--Kb", "1024"])
        assert cfg.Ns == (4, 16, 64) and cfg.K_b == 1024

    def test_config_file_then_flags(self, tmp_path):
        f = tmp_path / "run.cfg"
        f.write_text("# sweep\nN = 4,8\nsigma=3\nplot = yes\nM=20\n")
        cfg = resolve(["case-iii", "--config", str(f), "--M", "24"])
        assert cfg.Ns == (4, 8) and cfg.sigma == 3.0 and cfg.plot and cfg.M == 24.0

    @pytest.mark.parametrize("text", ["bogus = 1\n", "p 2\n", "p = two\n", "plot = maybe\n"])
    def test_config_file_errors(self, tmp_path, text):
        f = tmp_path / "bad.cfg"
        f.write_text(text)
        with pytest.raises(ConfigError):
            read_config_file(str(f))

    def test_missing_config(self, tmp_path):
        with pytest.raises(ConfigError):
            read_config_file(str(tmp_path / "none.cfg"))

    @pytest.mark.parametrize(
        "argv",
        [
            ["case-iii", "--N", "30"],
            ["case-ii", "--p", "1"],
            ["case-i", "--q", "inf"],
            ["lower-bound", "--jmax", "0"],
            ["lower-bound", "--p", "0.5"],
            ["verify-identities", "--M", "4"],
            ["case-i", "--K", "7"],
            ["case-i", "--tol", "-1"],
            ["case-i", "--jmin", "3", "--jmax", "1"],
        ],
    )
    def test_configuration_errors_exit_2(self, argv, tmp_path):
        assert run(argv + ["--out", str(tmp_path)]) == 2

    def test_unknown_flag_exit_2(self, capsys):
        assert run(["case-i", "--bogus", "1"]) == 2

    def test_unknown_command_exit_2(self, capsys):
        assert run(["case-iv"]) == 2

    def test_validate_direct(self):
        with pytest.raises(ConfigError):
            RunConfig("case-i", p=0.5).validate()


def test_fmt():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(3) == "3"
    assert fmt(True) == "1"
    assert fmt(math.inf) == "inf"
    assert float(fmt(1 / 3)) == 1 / 3


def test_svg_is_valid(tmp_path):
    path = line_plot(tmp_path / "p.svg", [("a & b", [1, 2, 4], [1.0, 0.5, 0.0])], "t<1>", "x", "y",
                     logx=True, logy=True, hlines=[("ref", 0.7)])
    root = ET.parse(path).getroot()
    assert root.tag.endswith("svg")
    assert len(root.findall("{http://www.w3.org/2000/svg}circle")) == 2


class TestEndToEnd:
    def test_lower_bound_run(self, tmp_path, capsys):
        out = tmp_path / "lb"
        code = run(["lower-bound", "--p", "2", "--jmin", "-3", "--jmax", "-2", "--out", str(out), "--plot"])
        assert code == 0
        lines = (out / "results.csv").read_text().splitlines()
        assert lines[0] == "j,a_j,a_j_second_component,refinement_error"
        assert lines[-1].startswith("inf,0.0168437809079140")
        manifest = dict(l.split("=", 1) for l in (out / "manifest.txt").read_text().splitlines())
        assert manifest["command"] == "lower-bound" and manifest["exit_code"] == "0"
        assert "source.a_inf" in manifest
        ET.parse(out / "plot_lower_bound.svg")

    def test_tolerance_failure_exit_1(self, tmp_path, capsys):
        code = run(["lower-bound", "--jmin", "-3", "--jmax", "-3", "--tol", "1e-30", "--out", str(tmp_path)])
        assert code == 1
        assert "status=tolerance failure" in (tmp_path / "manifest.txt").read_text()

    def test_module_entry_point(self, tmp_path):
        r = subprocess.run([sys.executable, "-m", "nsbesov", "--version"], capture_output=True, text=True)
        assert r.returncode == 0 and "nsbesov" in r.stdout


def test_pure_python_fallback():
    env = dict(os.environ, NSBESOV_PURE_PYTHON="1")
    code = ("import numpy as np, nsbesov; from nsbesov.diagnostics import path_agreement; "
            "print(nsbesov.BACKEND); from nsbesov.spectral import *; from nsbesov.diagnostics import random_field; "
            "g = make_grid(1/8, 64); r = np.random.default_rng(0); f = random_field(r, g, 3.0); "
            "a = windowed_convolution(f, f, make_grid(1/8, 32), 'direct').values; "
            "print(float(abs(a).max()))")
    r = subprocess.run([sys.executable, "-c", code], capture_output=True, text=True, env=env)
    assert r.returncode == 0, r.stderr
    assert r.stdout.split()[0] == "python"
