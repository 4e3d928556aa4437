"""SVG learning curves."""

import math
import xml.etree.ElementTree as ET

import pytest

from sparsebudget.core.errors import DataError, InvalidArgument
from sparsebudget.services.plot_service import emit_plot, read_aggregate_csv

HEADER = "cum_examples,n_trials,mean_test_mse,two_std_test_mse,mean_excess_risk,two_std_excess_risk\n"


def write_aggregate(directory, rows):
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / "aggregate.csv"
    path.write_text(HEADER + "".join(f"{row}\n" for row in rows), encoding="utf-8")
    return path


@pytest.fixture
def two_points(tmp_path):
    return write_aggregate(tmp_path / "exploration", ["0,2,4.0,0.5,,", "100,2,1.0,0.2,,"])


class TestReadAggregate:
    def test_series_label_from_run_directory(self, two_points):
        series = read_aggregate_csv(two_points)
        assert series.label == "exploration"
        assert series.x == [0.0, 100.0]
        assert series.mean == [4.0, 1.0]
        assert series.spread == [0.5, 0.2]

    def test_malformed_row(self, tmp_path):
        path = write_aggregate(tmp_path / "bad", ["0,1,not-a-number,0,,"])
        with pytest.raises(DataError, match="row 2"):
            read_aggregate_csv(path)

    def test_no_data_rows(self, tmp_path):
        with pytest.raises(DataError):
            read_aggregate_csv(write_aggregate(tmp_path / "empty", []))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DataError):
            read_aggregate_csv(tmp_path / "absent.csv")


class TestEmitPlot:
    def test_one_polyline_per_series(self, two_points, tmp_path):
        svg = emit_plot([two_points], tmp_path / "curve.svg").read_text(encoding="utf-8")
        assert svg.startswith("<svg")
        assert svg.count("<polyline") == 1
        assert svg.count("<polygon") == 1
        assert ">exploration</text>" in svg

    def test_two_series(self, two_points, tmp_path):
        other = write_aggregate(tmp_path / "hybrid", ["0,2,4.0,0.0,,", "50,2,0.5,0.1,,"])
        svg = emit_plot([two_points, other], tmp_path / "both.svg").read_text(encoding="utf-8")
        assert svg.count("<polyline") == 2
        assert ">hybrid</text>" in svg

    def test_identical_input_gives_identical_bytes(self, two_points, tmp_path):
        first = emit_plot([two_points], tmp_path / "a.svg").read_bytes()
        second = emit_plot([two_points], tmp_path / "b.svg").read_bytes()
        assert first == second

    def test_linear_axis(self, two_points, tmp_path):
        svg = emit_plot([two_points], tmp_path / "lin.svg", log_y=False).read_text(encoding="utf-8")
        assert "(log)" not in svg
        assert svg.count("<polyline") == 1

    def test_zero_spread_and_zero_mean_on_log_axis(self, tmp_path):
        path = write_aggregate(tmp_path / "exact", ["0,1,1.0,0.0,,", "10,1,0.0,0.0,,"])
        svg = emit_plot([path], tmp_path / "exact.svg").read_text(encoding="utf-8")
        points = svg.split('<polyline points="')[1].split('"')[0]
        for pair in points.split():
            assert all(math.isfinite(float(value)) for value in pair.split(","))

    def test_label_is_escaped(self, tmp_path):
        path = write_aggregate(tmp_path / "explore & exploit <k>", ["0,1,1.0,0.0,,", "10,1,0.5,0.0,,"])
        svg = emit_plot([path], tmp_path / "escaped.svg").read_text(encoding="utf-8")
        assert ">explore &amp; exploit &lt;k&gt;</text>" in svg
        ET.fromstring(svg)

    def test_no_inputs_writes_nothing(self, tmp_path):
        out = tmp_path / "empty.svg"
        with pytest.raises(InvalidArgument):
            emit_plot([], out)
        assert not out.exists()
