import warnings

import pytest
from hypothesis import given, settings, strategies as st

from pepaflow import bench
from pepaflow.bench import (ModelSource, SweepSpec, find_saturation, geometric_grid,
                            parse_grid, saturation_of, scalability_curve, sweep)
from pepaflow.errors import PepaError, SaturationError
from pepaflow.netmodels import preset

from conftest import CLIENT_SERVER


def toy_source(m=2):
    return ModelSource(text=CLIENT_SERVER.format(n=1, m=m) + "//@ completion: done\n",
                       group="C")


def test_find_saturation_cases():
    assert find_saturation([1, 2, 3, 4], [1.0, 2.0, 2.02, 2.03]).n_star == 2
    sat = find_saturation([1, 2, 4], [1.0, 1.0, 1.0], theta=0.05)
    assert (sat.n_star, sat.plateau_throughput) == (1, 1.0)
    assert find_saturation([1, 2, 3], [0.0, 0.0, 0.0]).n_star == 1
    with pytest.raises(SaturationError) as info:
        find_saturation([1, 2, 3], [1.0, 2.0, 4.0])
    assert info.value.code == "E_NO_PLATEAU"
    with pytest.raises(PepaError):
        find_saturation([1, 2], [1.0, 1.0])
    with pytest.raises(PepaError):
        find_saturation([1, 2, 3], [1.0, 1.0])


@settings(max_examples=200)
@given(st.lists(st.floats(0.0, 1e6), min_size=3, max_size=30),
       st.floats(0.001, 0.5))
def test_saturation_point_definition(xs, theta):
    grid = list(range(1, len(xs) + 1))
    try:
        sat = find_saturation(grid, xs, theta)
    except SaturationError:
        return
    k = grid.index(sat.n_star)
    for j in range(k):
        if xs[j] > 0:
            assert (xs[j + 1] - xs[j]) / xs[j] >= theta
        else:
            assert xs[j + 1] > 0
    assert sat.plateau_throughput == xs[-1]


def test_toy_sweep_saturates_at_server_count():
    rows = sweep(SweepSpec(toy_source(2), tuple(range(1, 11))))
    assert [r.converged for r in rows] == [True] * 10
    assert [round(r.throughput, 6) for r in rows] == [0.5, 1.0, 1.5] + [2.0] * 7
    sat = saturation_of(rows)
    assert sat.n_star == 4
    assert sat.plateau_throughput == pytest.approx(2.0, abs=1e-6)


def test_ctmc_sweep():
    rows = sweep(SweepSpec(toy_source(1), (2, 3), solver="ctmc"))
    assert rows[0].throughput == pytest.approx(0.8, abs=1e-12)
    assert rows[0].method == "ctmc"


def test_parallel_sweep_equals_serial():
    spec = SweepSpec(ModelSource(arch="ssba", config=preset("b1", 1)), (5, 50, 500))
    assert sweep(spec, jobs=2) == sweep(spec, jobs=1)


@pytest.mark.parametrize("grid", [(), (3, 2), (0, 1)])
def test_sweep_spec_validation(grid):
    with pytest.raises(PepaError):
        SweepSpec(toy_source(), grid)


def test_source_validation():
    with pytest.raises(PepaError):
        ModelSource()
    with pytest.raises(PepaError):
        ModelSource(arch="nope", config=preset("b1", 1))


def test_grids():
    assert geometric_grid(1, 100, 3) == (1, 10, 100)
    g = geometric_grid(1, 10, 20)
    assert all(b > a for a, b in zip(g, g[1:])) and g[0] == 1
    assert parse_grid("10:1000:3") == (10, 100, 1000)
    assert parse_grid("1, 5,9") == (1, 5, 9)
    for bad in ("1:2", "a:b:c", "5:1:3", "x,y"):
        with pytest.raises(PepaError):
            parse_grid(bad)


def test_predicted_knee_of_toy_model():
    # throughput ceiling 3, one client alone completes 0.5 per unit time
    assert bench.predicted_knee(toy_source(3)) == pytest.approx(6.0, rel=1e-4)


def test_scalability_of_identical_configs_is_one():
    cfg = preset("b1", 1)
    rows = scalability_curve("ssba", cfg, cfg, (10, 100, 1000))
    assert [r.S for r in rows] == [1.0, 1.0, 1.0]


def test_scalability_skips_nothing_on_solvable_grid():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        rows = scalability_curve("ssba", preset("b1", 1), preset("b2", 1), (10, 1000))
    assert len(rows) == 2
    assert all(r.scaled.C == 3 * r.base.C for r in rows)
