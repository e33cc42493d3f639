import csv

import numpy as np
import pytest

from ellparab.estimates import (INEQUALITIES, EstimateReport, EstimateRow, estimate_sweep, estimate_terms,
                                interpolation_ratio, random_boundary_data)
from ellparab.grids import GridField, GridSpec
from ellparab.halfspace import extend_boundary, solve_homogeneous
from ellparab.symbols import laplace_heat

QS = np.geomspace(1, 100, 7)


@pytest.fixture(scope="module")
def grid():
    return GridSpec.graded(N=16, X=40.0, panels=20)


@pytest.fixture(scope="module")
def lap_report(grid):
    return estimate_sweep(laplace_heat(), grid, QS)


def test_random_boundary_data_is_resolution_independent(grid):
    a = random_boundary_data(grid, 1, seed=4)
    b = random_boundary_data(grid.with_N(32), 1, seed=4)
    assert abs(a.hat()[0, 0]) < 1e-14
    np.testing.assert_allclose(b.data[:, ::2], a.data, atol=1e-13)
    with pytest.raises(ValueError):
        random_boundary_data(grid.with_N(8), 1)


def test_zero_data_row(grid):
    spec = laplace_heat()
    g = GridField(np.zeros((2, grid.N)), grid, boundary=True)
    rows = estimate_terms(spec, 2.0, solve_homogeneous(spec, 2.0, g), g)
    assert {r.inequality for r in rows} == set(INEQUALITIES)
    assert all(r.lhs == 0 and r.ratio == 0 for r in rows)


def test_ratio_conventions():
    assert EstimateRow(1.0, "x", 1.0, 0.0).ratio == float("inf")
    assert EstimateRow(1.0, "x", 2.0, 4.0).ratio == 0.5


def test_rows_are_positive_and_finite(lap_report):
    for r in lap_report.rows:
        assert r.rhs > 0 and np.isfinite(r.ratio)
        assert r.lhs == pytest.approx(sum(r.lhs_terms.values()))
        assert r.rhs == pytest.approx(sum(r.rhs_terms.values()))


def test_laplace_plateaus(lap_report):
    for w in ("homogeneous_split", "homogeneous_weighted", "full_split", "full_weighted"):
        assert lap_report.plateau_factor(w) <= 4


def test_laplace_strengthened_grows_slowly(lap_report):
    # for m = 1 the unweighted order-2 norm of u2 gains only |q|^{1/2}
    assert lap_report.monotone("strengthened")
    assert 1.5 <= lap_report.growth("strengthened") <= 4


def test_homogeneous_rows_skipped_with_forcing(grid):
    rep = estimate_sweep(laplace_heat(), grid, [2.0], data="manufactured")
    assert set(rep.inequalities()) == {"full_split", "full_weighted", "strengthened"}


def test_sweep_rejects_small_q(grid):
    with pytest.raises(ValueError):
        estimate_sweep(laplace_heat(), grid, [0.5, 2.0])


def test_report_csv(lap_report, tmp_path):
    paths = lap_report.write_csv(tmp_path)
    assert [p.name for p in paths] == ["estimates.csv", "estimates_terms.csv", "estimates_summary.csv"]
    with open(paths[0]) as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == len(lap_report.rows)
    with open(paths[2]) as fh:
        summ = list(csv.DictReader(fh))
    assert [s["inequality"] for s in summ] == list(INEQUALITIES)


def test_report_statistics():
    rows = [EstimateRow(q, "full_split", r, 1.0) for q, r in zip([1, 2, 4, 8], [1.0, 3.0, 2.0, 2.5])]
    rep = EstimateReport("t", "homogeneous", rows)
    assert rep.max_ratio("full_split") == 3.0
    assert rep.plateau_factor("full_split") == pytest.approx(1.25)
    assert rep.growth("full_split") == 2.5
    assert not rep.monotone("full_split")


def test_interpolation_bound(grid):
    g = random_boundary_data(grid, 2, seed=1).components_of([0])
    ratios = [interpolation_ratio(extend_boundary(g, q), j, 2, q) for q in QS for j in (1, 2)]
    assert max(ratios) <= 2.0
    with pytest.raises(ValueError):
        interpolation_ratio(extend_boundary(g, 1.0), 3, 2, 1.0)
