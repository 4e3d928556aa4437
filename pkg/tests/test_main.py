"""Command-line verbs and their exit codes."""

import pytest

from sparsebudget.main import main

TINY = """
[experiment]
trials = 1

[data]
source = synthetic
d = 4
s_star = 1
sigma = 0.5
law = iid-uniform
test_size = 50

[budget]
s = 1
s_prime = 3

[optimizer]
T = 2
eta = 0.25

[schedule]
kind = constant
base = 10
"""

# s = 1025 meets the sparsity bound exactly for eta = 1/4 and L = mu = 1
PASSING = """
[data]
source = synthetic
d = 1100
s_star = 1
sigma = 0.5
law = iid-uniform
test_size = 10

[budget]
s = 1025
s_prime = 1100

[optimizer]
T = 1
eta = 0.25
L_s = 1.0
mu_s = 1.0
r_effective = 0.01

[schedule]
kind = constant
base = 1000
"""


@pytest.fixture
def write_config(tmp_path):
    def write(text, name="experiment.ini"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return str(path)

    return write


class TestRun:
    def test_success(self, write_config, tmp_path, capsys):
        out = tmp_path / "out"
        assert main(["run", write_config(TINY), "--output", str(out)]) == 0
        assert (out / "trace_trial0.csv").is_file()
        assert "1 trials -> aggregate.csv" in capsys.readouterr().out

    def test_invalid_config_exits_2(self, write_config):
        assert main(["run", write_config(TINY.replace("trials = 1", "trials = 0"))]) == 2

    def test_missing_config_exits_2(self, tmp_path):
        assert main(["run", str(tmp_path / "absent.ini")]) == 2

    def test_missing_dataset_exits_3(self, write_config, tmp_path):
        text = (
            "[data]\nsource = csv\ncsv_path = absent.csv\ntarget = y\n\n"
            "[budget]\ns = 2\ns_prime = 4\ns_star = 1\n"
        )
        assert main(["run", write_config(text), "--output", str(tmp_path / "out")]) == 3


class TestPlot:
    def test_plot_after_run(self, write_config, tmp_path):
        out = tmp_path / "out"
        main(["run", write_config(TINY), "--output", str(out)])
        svg = tmp_path / "curve.svg"
        assert main(["plot", str(svg), str(out / "aggregate.csv"), "--linear-y"]) == 0
        assert svg.read_text(encoding="utf-8").count("<polyline") == 1

    def test_no_aggregates_exits_2(self, tmp_path):
        assert main(["plot", str(tmp_path / "curve.svg")]) == 2
        assert not (tmp_path / "curve.svg").exists()


class TestValidate:
    def test_failing_constraints_exit_1(self, write_config, capsys):
        assert main(["validate", write_config(TINY)]) == 1
        printed = capsys.readouterr().out
        assert "[FAIL] sparsity" in printed
        assert "[PASS] step_size" in printed

    def test_satisfied_constraints_exit_0(self, write_config, capsys):
        assert main(["validate", write_config(PASSING)]) == 0
        printed = capsys.readouterr().out
        assert "FAIL" not in printed
        assert "proof batch size" in printed


def test_version(capsys):
    with pytest.raises(SystemExit) as caught:
        main(["--version"])
    assert caught.value.code == 0
    assert capsys.readouterr().out.strip() == "1.0.0"
