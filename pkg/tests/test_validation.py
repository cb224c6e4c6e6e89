import json

import pytest

from singcalc import TollSpec
from singcalc.validation import geometric_grid, validate


def test_geometric_grid():
    grid = geometric_grid(10000)
    assert grid[0] == 100 and grid[-1] == 10000
    assert grid == sorted(set(grid))
    assert len(grid) == 17
    assert geometric_grid(150, nmin=10)[0] == 10


@pytest.fixture(scope="module")
def bst_report():
    return validate("bst", TollSpec.power(1), 3000)


def test_passing_report(bst_report):
    assert bst_report.passed, bst_report.reason
    assert bst_report.final.n == 3000
    assert abs(bst_report.fitted_slope - bst_report.expected_slope) < 0.35
    errors = [r.rel_error for r in bst_report.rows]
    assert errors[-1] < errors[0]


def test_report_serializes(bst_report):
    d = bst_report.to_dict()
    assert d["status"] == "PASS" and d["model"] == "bst" and d["order"] == 3
    assert json.loads(json.dumps(d)) == d
    assert {"n", "exact", "predicted", "rel_error", "expected_ratio"} == d["rows"][0].keys()


def test_ratio_failure():
    report = validate("catalan", TollSpec.power(2), 1000, ratio_factor=1e-4)
    assert not report.passed and "exceeds" in report.reason


def test_slope_failure():
    # the one-term fit drifts from the predicted slope by a few thousandths
    report = validate("bst", TollSpec.power(1), 1000, order=1, ratio_factor=1e6, slope_tolerance=0.001)
    assert not report.passed and "slope" in report.reason


@pytest.mark.parametrize("model,toll", [("catalan", TollSpec.log()), ("unionfind", TollSpec.power(2))])
def test_other_models_pass(model, toll):
    report = validate(model, toll, 2000)
    assert report.passed, report.reason


def test_preconditions():
    with pytest.raises(ValueError):
        validate("bst", TollSpec.power(1), 50)
    with pytest.raises(ValueError):
        validate("bst", TollSpec.power(1), 1000, order=0)
