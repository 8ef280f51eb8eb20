"""Tests for CLI module."""

import json
from fractions import Fraction

import pytest
from click.testing import CliRunner

from dioph_spectrum.cli import cli
from dioph_spectrum.minimal_points import Gauge, MinimalPointSequence, PairTarget, save_points
from tests.conftest import synthetic_points

ENV = {"DIOPH_THREADS": "1", "DIOPH_LOG_LEVEL": "", "DIOPH_LOG_JSON": ""}


@pytest.fixture
def runner():
    """Create a CLI test runner."""
    return CliRunner()


@pytest.fixture
def invoke(runner):
    """Invoke the CLI with a clean environment."""

    def run(*args):
        return runner.invoke(cli, list(args), env=ENV)

    return run


@pytest.fixture
def points_file(invoke, tmp_path):
    """Minimal points of (sqrt 2, sqrt 3) up to 1000."""
    path = tmp_path / "p.jsonl"
    result = invoke("minpoints", "--xi", "sqrt(2)", "--eta", "sqrt(3)", "--max-x0", "1000",
                    "--out", str(path))
    assert result.exit_code == 0, result.output
    return path


@pytest.fixture
def doubling_file(tmp_path):
    """A points file with log Delta = -log X and doubling log X."""
    xs = [2.0**i for i in range(1, 21)]
    seq = MinimalPointSequence(
        PairTarget.parse("sqrt(2)", "sqrt(3)"),
        Gauge.HEIGHT,
        tuple(synthetic_points(xs, [-x for x in xs])),
        10**6,
        Fraction(1, 10**15),
    )
    path = tmp_path / "doubling.jsonl"
    save_points(seq, path)
    return path


@pytest.fixture
def system_file(invoke, tmp_path):
    """The case-1 system for (1, 1/2) with 12 peaks."""
    path = tmp_path / "s.json"
    result = invoke("construct", "--lambda", "1", "--lambda-under", "1/2", "--peaks", "12",
                    "--out", str(path))
    assert result.exit_code == 0, result.output
    return path


class TestCliGroup:
    """Tests for main CLI group."""

    def test_cli_help(self, runner):
        """Test CLI shows help."""
        result = runner.invoke(cli, ["--help"])
        assert result.exit_code == 0
        assert "minpoints" in result.output
        assert "parametric" in result.output

    def test_cli_version(self, runner):
        """Test CLI shows version."""
        result = runner.invoke(cli, ["--version"])
        assert result.exit_code == 0
        assert "0.1.0" in result.output

    def test_info(self, invoke):
        """Test info lists commands and configuration."""
        result = invoke("info")
        assert result.exit_code == 0
        assert "Commands" in result.output
        assert "eps_grid_depth" in result.output

    def test_invalid_threads_env(self, runner):
        """Test a bad DIOPH_THREADS stops before any command runs."""
        result = runner.invoke(cli, ["info"], env={**ENV, "DIOPH_THREADS": "lots"})
        assert result.exit_code == 2

    def test_unknown_config_key(self, invoke, tmp_path):
        """Test an unknown key in the config file is a usage error."""
        path = tmp_path / "dioph.yaml"
        path.write_text("bogus: 1\n")
        result = invoke("--config", str(path), "info")
        assert result.exit_code == 2

    def test_config_file(self, invoke, tmp_path):
        """Test a valid config file is applied."""
        path = tmp_path / "dioph.yaml"
        path.write_text("eps_grid_depth: 3\n")
        result = invoke("--config", str(path), "info")
        assert result.exit_code == 0


class TestMinpointsCommand:
    """Tests for minpoints command."""

    def test_minpoints(self, points_file):
        """Test the points file and its manifest are written."""
        lines = points_file.read_text().splitlines()
        assert json.loads(lines[1])["x"] == [1, 1, 2]
        manifest = json.loads((points_file.parent / "p.jsonl.manifest.json").read_text())
        assert manifest["command"] == "minpoints"
        assert manifest["inputs"]["max_x0"] == 1000
        assert "precision" not in manifest["inputs"]

    def test_norm_gauge(self, invoke, tmp_path):
        """Test the norm gauge option."""
        path = tmp_path / "n.jsonl"
        result = invoke("minpoints", "--xi", "sqrt(2)", "--eta", "sqrt(3)", "--max-x0", "50",
                        "--gauge", "norm", "--out", str(path))
        assert result.exit_code == 0
        assert json.loads(path.read_text().splitlines()[0])["gauge"] == "NORM"

    def test_degenerate(self, invoke, tmp_path):
        """Test a rational coordinate exits with code 4."""
        result = invoke("minpoints", "--xi", "1/2", "--eta", "sqrt(3)", "--max-x0", "10",
                        "--out", str(tmp_path / "d.jsonl"))
        assert result.exit_code == 4

    def test_bad_precision(self, invoke, tmp_path):
        """Test a non-positive precision is a usage error."""
        result = invoke("minpoints", "--xi", "sqrt(2)", "--eta", "sqrt(3)", "--max-x0", "10",
                        "--precision", "0", "--out", str(tmp_path / "d.jsonl"))
        assert result.exit_code == 2

    def test_syntax_error(self, invoke, tmp_path):
        """Test a malformed coordinate."""
        result = invoke("minpoints", "--xi", "root(2)", "--eta", "sqrt(3)", "--max-x0", "10",
                        "--out", str(tmp_path / "d.jsonl"))
        assert result.exit_code == 2


class TestExponentsCommand:
    """Tests for exponents command."""

    def test_report(self, invoke, doubling_file, tmp_path):
        """Test the report on doubling data."""
        report = tmp_path / "report.txt"
        result = invoke("exponents", "--points", str(doubling_file), "--beta0",
                        "--report", str(report))
        assert result.exit_code == 0, result.output
        assert "lambda_under" in result.output
        assert "0.500000" in result.output
        assert "2.000000" in result.output
        assert report.read_text() in result.output
        assert (tmp_path / "report.txt.manifest.json").exists()

    def test_ratios(self, invoke, doubling_file):
        """Test the raw ratio table is appended."""
        result = invoke("exponents", "--points", str(doubling_file), "--ratios")
        assert result.exit_code == 0
        assert "1.000000" in result.output

    def test_too_few_points(self, invoke, tmp_path):
        """Test a short file exits with code 5."""
        path = tmp_path / "short.jsonl"
        result = invoke("minpoints", "--xi", "sqrt(2)", "--eta", "sqrt(3)", "--max-x0", "10",
                        "--out", str(path))
        assert result.exit_code == 0
        result = invoke("exponents", "--points", str(path))
        assert result.exit_code == 5

    def test_bad_depth(self, invoke, doubling_file):
        """Test --eps-grid must be positive."""
        result = invoke("exponents", "--points", str(doubling_file), "--eps-grid", "0")
        assert result.exit_code == 2

    def test_missing_file(self, invoke, tmp_path):
        """Test a missing points file."""
        result = invoke("exponents", "--points", str(tmp_path / "none.jsonl"))
        assert result.exit_code == 2


class TestConstructCommand:
    """Tests for construct command."""

    def test_construct(self, system_file):
        """Test the system file and derived constants in the manifest."""
        data = json.loads(system_file.read_text())
        assert data["construction"]["case"] == "1"
        manifest = json.loads((system_file.parent / "s.json.manifest.json").read_text())
        assert manifest["derived"]["nu"] == "2/3"
        assert manifest["derived"]["theta"] == "9/20"
        assert manifest["inputs"]["peaks"] == 12

    def test_outside_spectrum(self, invoke, tmp_path):
        """Test a target outside the spectrum exits with code 2."""
        result = invoke("construct", "--lambda", "1", "--lambda-under", "9/10",
                        "--out", str(tmp_path / "s.json"))
        assert result.exit_code == 2

    def test_forced_case_outside_region(self, invoke, tmp_path):
        """Test forcing case 1 where it does not apply."""
        result = invoke("construct", "--lambda", "3/5", "--lambda-under", "1/5", "--case", "1",
                        "--out", str(tmp_path / "s.json"))
        assert result.exit_code == 2

    def test_forced_case_2(self, invoke, tmp_path):
        """Test forcing case 2 inside its region."""
        path = tmp_path / "s.json"
        result = invoke("construct", "--lambda", "1", "--lambda-under", "1/3", "--case", "2",
                        "--peaks", "6", "--out", str(path))
        assert result.exit_code == 0
        assert json.loads(path.read_text())["construction"]["case"] == "2"


class TestKappaCommand:
    """Tests for kappa command."""

    def test_grid(self, invoke, system_file):
        """Test the grid value of P3."""
        result = invoke("kappa", "--system", str(system_file))
        assert result.exit_code == 0, result.output
        assert "kappa = 1/3 (depth 8, converged)" in result.output
        assert "psi_sup = 1/2" in result.output

    def test_alpha(self, invoke, system_file):
        """Test a single kappa-alpha evaluation."""
        result = invoke("kappa", "--system", str(system_file), "--alpha", "9/20")
        assert result.exit_code == 0
        assert "kappa_alpha(9/20) = 1/3" in result.output

    def test_alpha_too_large(self, invoke, system_file):
        """Test alpha above psi-bar exits with code 5."""
        result = invoke("kappa", "--system", str(system_file), "--alpha", "3/5")
        assert result.exit_code == 5

    def test_perturbed(self, invoke, system_file):
        """Test kappa runs on a perturbed component."""
        result = invoke("kappa", "--system", str(system_file), "--perturb", "1")
        assert result.exit_code == 0
        assert "kappa = " in result.output

    def test_corrupt_system(self, invoke, tmp_path):
        """Test a malformed system file."""
        path = tmp_path / "bad.json"
        path.write_text('{"components": []}')
        result = invoke("kappa", "--system", str(path))
        assert result.exit_code == 2


class TestRenderCommand:
    """Tests for render command."""

    def test_deterministic(self, invoke, system_file, tmp_path):
        """Test two renders of one system are byte-identical."""
        a, b = tmp_path / "a.svg", tmp_path / "b.svg"
        assert invoke("render", "--system", str(system_file), "--svg", str(a)).exit_code == 0
        assert invoke("render", "--system", str(system_file), "--svg", str(b)).exit_code == 0
        assert a.read_bytes() == b.read_bytes()
        assert (tmp_path / "a.svg.manifest.json").exists()

    def test_bad_width(self, invoke, system_file, tmp_path):
        """Test a zero width exits with code 2."""
        result = invoke("render", "--system", str(system_file), "--svg",
                        str(tmp_path / "a.svg"), "--width", "0")
        assert result.exit_code == 2


class TestVerifyCommand:
    """Tests for verify command."""

    def test_verified(self, invoke, points_file):
        """Test a fresh file verifies."""
        result = invoke("verify", "--points", str(points_file), "--check-x0-max", "1000")
        assert result.exit_code == 0
        assert "verified" in result.output

    def test_tampered(self, invoke, points_file):
        """Test a tampered point fails with exit code 1."""
        lines = points_file.read_text().splitlines()
        record = json.loads(lines[2])
        record["x"] = [3, 5, 5]
        lines[2] = json.dumps(record)
        points_file.write_text("\n".join(lines) + "\n")
        result = invoke("verify", "--points", str(points_file), "--check-x0-max", "1000")
        assert result.exit_code == 1


class TestParametricCommand:
    """Tests for parametric command."""

    def test_small_grid(self, invoke, tmp_path):
        """Test a three-point profile."""
        out = tmp_path / "prof.csv"
        result = invoke("parametric", "--xi", "sqrt(2)", "--eta", "sqrt(3)", "--q-max", "4",
                        "--step", "1", "--out", str(out))
        assert result.exit_code == 0, result.output
        lines = out.read_text().splitlines()
        assert lines[0] == "q,L1,L2,L3,L1s,L2s,L3s,sum_gap,dual_gap"
        assert len(lines) == 4
        assert "3 rows written" in result.output
        assert "duality gap sup" in result.output

    def test_q_too_large(self, invoke, tmp_path):
        """Test --q-max above the cap exits with code 6."""
        result = invoke("parametric", "--xi", "sqrt(2)", "--eta", "sqrt(3)", "--q-max", "50",
                        "--out", str(tmp_path / "prof.csv"))
        assert result.exit_code == 6

    @pytest.mark.slow
    def test_default_grid(self, invoke, tmp_path):
        """Test the 37-row profile from 2 to 20."""
        out = tmp_path / "prof.csv"
        result = invoke("parametric", "--xi", "sqrt(2)", "--eta", "sqrt(3)", "--q-max", "20",
                        "--out", str(out))
        assert result.exit_code == 0
        assert len(out.read_text().splitlines()) == 38
