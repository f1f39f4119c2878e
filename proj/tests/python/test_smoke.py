import os
from pathlib import Path

import numpy as np
import pytest

import bessplan

FIXTURES = Path(os.environ.get("BESSPLAN_FIXTURES", Path(__file__).resolve().parents[2] / "fixtures"))


def test_solve_lp_two_generators():
    res = bessplan.solve_lp(
        c=[10.0, 30.0],
        A=[[1.0, 1.0]],
        row_lower=[100.0],
        row_upper=[100.0],
        var_lower=[0.0, 0.0],
        var_upper=[60.0, np.inf],
    )
    assert res["status"] == "optimal"
    np.testing.assert_allclose(res["x"], [60.0, 40.0])
    assert res["objective"] == pytest.approx(1800.0)
    assert res["duals"][0] == pytest.approx(30.0)


def test_congested_dispatch_prices():
    case = bessplan.Case(str(FIXTURES / "two_bus_congested"))
    assert list(case.bus_ids) == [1, 2]
    out = case.dispatch()
    np.testing.assert_allclose(out["lmps"][:, 0], [10.0, 30.0])
    assert out["total_cost"] == pytest.approx(1800.0)
    assert case.ptdf.shape == (1, 2)


def test_aus_converges_on_triangle_day():
    case = bessplan.Case(str(FIXTURES / "triangle_day"))
    res = case.aus(str(FIXTURES / "triangle_day" / "catalog.csv"), {1: 100.0}, 1e6)
    assert res["converged"]
    assert res["iterations"] == 2
    assert res["lmps"].shape == (3, 24)
    assert res["final_delta"] < 1e-3


def test_bad_case_raises_input_error():
    with pytest.raises(bessplan.InputError):
        bessplan.Case(str(FIXTURES / "bad_unknown_bus"))
