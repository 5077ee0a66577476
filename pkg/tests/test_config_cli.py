import math
import subprocess
import sys

import pytest

from enclosure.cli import main
from enclosure.config import parse_config, parse_source
from enclosure.errors import ConfigError
from enclosure.experiments import EXIT_ACCEPTANCE, EXIT_CONFIG, EXIT_NUMERIC, EXIT_OK
from enclosure.series import ExpMonomial, Monomial


class TestParse:
    def test_published_sweep(self):
        cfg = parse_config("a=1\nT=5\nsource=t^2\nN=1000\nN_t=1000")
        assert cfg.geometry.a == 1.0 and cfg.geometry.T == 5.0
        assert cfg.source == Monomial(2)
        assert cfg.N == 1000 and cfg.N_t == (1000,)

    def test_defaults(self):
        cfg = parse_config("a=2\nsource=t^1\n")
        assert cfg.geometry.T == 5.0 and cfg.N == 1000 and cfg.bound == 0.01
        assert cfg.grid.points()[0] == 1.0 and cfg.grid.points()[-1] == 15.0 and cfg.grid.step == 0.5
        assert cfg.mode == "region" and cfg.stream is False

    def test_comments_and_lists(self):
        cfg = parse_config("# header\na = 1   # rod\nsource = t^0\nN_t = 1000, 10000\nstream=true\n")
        assert cfg.N_t == (1000, 10000) and cfg.stream

    def test_exponential_source(self):
        cfg = parse_config(f"a=1\nsource=t^2*exp(-NU*t)\nnu=2\nc={math.e**2!r}\n")
        assert cfg.source == ExpMonomial(math.e**2, 2.0)
        assert parse_source("t^2*exp(-3*t)") == ExpMonomial(1.0, 3.0)

    @pytest.mark.parametrize("text,line", [
        ("a_L=2\na=1\nsource=t^2", 1),
        ("a=1\nsource=t^2\nfoo=3", 3),
        ("a=1\na=2\nsource=t^2", 2),
        ("a=1\nsource=t^2\nN=1.5", 3),
        ("a=1\nsource=t^2\nN_t=100,x", 3),
        ("a=1\nsource=t^12", 2),
        ("a=1\nsource=t^2\nbound=-1", 3),
        ("a=1\nsource=t^2\nepsilon=1", 3),
        ("a=1\nsource=t^2\nmode=plot", 3),
        ("a=1\njust text\nsource=t^2", 2),
        ("a=1\nsource=\n", 2),
        ("a=1\nsource=t^2*exp(-NU*t)", 2),
        ("a=1\nsource=t^2\nnu=2", 2),
        ("a=1\nsource=t^2\ntau_start=5\ntau_end=2", 4),
        ("a=1\nsource=t^2\nstream=maybe", 3),
    ])
    def test_errors_name_their_line(self, text, line):
        with pytest.raises(ConfigError) as err:
            parse_config(text)
        assert err.value.line == line
        assert str(err.value).startswith(f"line {line}: ")

    def test_order_invariant(self):
        with pytest.raises(ConfigError, match="a_L"):
            parse_config("a=1\na_L=2\nsource=t^2")

    def test_empty_text(self):
        with pytest.raises(ConfigError, match="a, source"):
            parse_config("")

    def test_reproduction_needs_no_rod(self):
        cfg = parse_config("mode=reproduce-fig1")
        assert cfg.geometry is None and cfg.source is None


def _run(argv):
    return main(argv)


class TestCli:
    def test_region_run(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("a=1\nsource=t^2\nN_t=1000\ntau_end=6\n")
        assert _run(["run", str(cfg), "-o", str(tmp_path / "out"), "--no-plots"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "region N=1000 N_t=1000 bound=0.01: [2, " in out
        lines = (tmp_path / "out" / "region_Nt1000.csv").read_text().splitlines()
        assert lines[0] == "tau,a_est,abs_error,inside,cancellation_digits" and len(lines) == 12
        assert not list((tmp_path / "out").glob("*.png"))

    def test_plots_written(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("a=1\nsource=t^2\nN_t=1000\ntau_end=4\n")
        assert _run(["run", str(cfg), "-o", str(tmp_path / "out")]) == EXIT_OK
        assert (tmp_path / "out" / "region.png").stat().st_size > 0

    @pytest.mark.parametrize("mode,artifact", [("forward", "trace_Nt1000.csv"), ("indicator", "indicator.csv"),
                                               ("certify", "summary.txt")])
    def test_other_modes(self, tmp_path, mode, artifact):
        cfg = tmp_path / "c.txt"
        cfg.write_text(f"a=1\nsource=t^2\nN_t=1000\nmode={mode}\n")
        assert _run(["run", str(cfg), "-o", str(tmp_path / "out"), "--no-plots"]) == EXIT_OK
        assert (tmp_path / "out" / artifact).exists()

    def test_certify_summary(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("a=1\nsource=t^2\nN_t=10000000000\nmode=certify\n")
        assert _run(["run", str(cfg), "-o", str(tmp_path), "--no-plots"]) == EXIT_OK
        out = capsys.readouterr().out
        assert "N_t_threshold(tau0)=2054266" in out and "theoretical,3," in out

    def test_configuration_error(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text("a=1\nsource=t^2\nbogus=1\n")
        assert _run(["run", str(cfg), "-o", str(tmp_path)]) == EXIT_CONFIG
        assert "line 3" in capsys.readouterr().err

    def test_missing_file(self, tmp_path):
        assert _run(["run", str(tmp_path / "absent.txt")]) == EXIT_CONFIG

    def test_numeric_error(self, tmp_path, capsys):
        cfg = tmp_path / "c.txt"
        cfg.write_text(f"a=1\nsource=t^2*exp(-NU*t)\nnu={math.pi**2!r}\nmode=forward\n")
        assert _run(["run", str(cfg), "-o", str(tmp_path), "--no-plots"]) == EXIT_NUMERIC
        assert "eigenvalue" in capsys.readouterr().err

    def test_acceptance_failure(self, tmp_path, capsys):
        # the published N_t = 10^3 region for t^2 under bound 0.1 is not reproduced
        code = _run(["reproduce", "fig2", "--N_t", "1000", "-o", str(tmp_path), "--no-plots"])
        assert code == EXIT_ACCEPTANCE
        assert any(line.startswith("FAIL") for line in capsys.readouterr().out.splitlines())

    def test_fig1_passes(self, tmp_path, capsys):
        assert _run(["reproduce", "fig1", "-o", str(tmp_path), "--no-plots"]) == EXIT_OK
        out = capsys.readouterr().out
        checks = [line for line in out.splitlines() if line.startswith(("PASS", "FAIL"))]
        assert checks and all(line.startswith("PASS") for line in checks)
        for name in ("fig1a_F.csv", "fig1b_G.csv", "fig1c_H.csv", "fig1d_Nt_threshold.csv"):
            assert (tmp_path / name).exists()

    def test_stdin_config(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "enclosure", "run", "-", "-o", str(tmp_path), "--no-plots"],
                              input="a=1\nsource=t^2\nmode=indicator\ntau_end=3\n", text=True,
                              capture_output=True)
        assert proc.returncode == 0, proc.stderr
        assert (tmp_path / "indicator.csv").read_text().startswith("tau,f_hat,u_hat,I,a_est\n")

    def test_deterministic_output(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("a=1\nsource=t^2\nN_t=1000,2000\nmode=region\n")
        for run in ("one", "two"):
            assert _run(["run", str(cfg), "-o", str(tmp_path / run), "--no-plots"]) == EXIT_OK
        names = sorted(p.name for p in (tmp_path / "one").iterdir())
        assert names == sorted(p.name for p in (tmp_path / "two").iterdir())
        for name in names:
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_seventeen_digits(self, tmp_path):
        cfg = tmp_path / "c.txt"
        cfg.write_text("a=1\nsource=t^2\nmode=indicator\ntau_end=2\n")
        _run(["run", str(cfg), "-o", str(tmp_path), "--no-plots"])
        row = (tmp_path / "indicator.csv").read_text().splitlines()[1].split(",")
        assert all(float(repr(float(cell))) == float(cell) for cell in row)
        assert len(row[1].replace(".", "").replace("-", "").split("e")[0].lstrip("0")) == 17
