import math

import pytest

from evidem.figures import Series, line_chart_svg


def test_basic_chart_structure():
    svg = line_chart_svg(
        [0.0, 0.1, 0.2],
        [Series("a", [0.1, 0.2, 0.3], [0.05, 0.05, 0.05]), Series("b", [0.3, 0.2, 0.1])],
        title="demo",
        xlabel="x",
        ylabel="y",
    )
    assert svg.startswith("<svg")
    assert svg.count("<polyline") == 2
    assert svg.count("<polygon") == 1  # only the series with sd gets a band
    assert "demo" in svg and ">x<" in svg and ">y<" in svg


def test_nan_points_are_dropped():
    svg = line_chart_svg([1.0, 2.0, 3.0], [Series("a", [0.5, math.nan, 0.7])])
    assert "nan" not in svg
    assert svg.count("<circle") == 2


def test_all_nan_series_skipped():
    svg = line_chart_svg([1.0, 2.0], [Series("a", [math.nan, math.nan])])
    assert "<polyline" not in svg


def test_length_mismatch_rejected():
    with pytest.raises(ValueError):
        line_chart_svg([1.0, 2.0], [Series("a", [0.5])])


def test_empty_inputs_rejected():
    with pytest.raises(ValueError):
        line_chart_svg([], [])
