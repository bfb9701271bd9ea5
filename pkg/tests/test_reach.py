import numpy as np
import pytest

from liectrl.catalog import rank_deficient_r2
from liectrl.errors import BudgetExhausted, InsufficientSamples, InvalidInput
from liectrl.reach import (
    affine_dimension,
    composition_check,
    connect,
    local_accessibility_test,
    origin_interior_weight,
    random_signals,
    sample_reachable,
)
from liectrl.simulator import ControlSignal, group_exp, solve

from util import fixture

BOX4 = np.array([[-1.0, 1.0]] * 4)


# -- geometry helpers ---------------------------------------------------------


def test_affine_dimension():
    assert affine_dimension(np.zeros((5, 3))) == 0
    line = np.outer(np.linspace(-1, 1, 7), [1.0, 2.0, 0.0])
    assert affine_dimension(line) == 1
    assert affine_dimension(np.random.default_rng(0).normal(size=(20, 3))) == 3
    assert affine_dimension(np.ones((1, 3))) == 0


def test_interior_weight_square():
    sq = np.array([[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]])
    assert origin_interior_weight(sq) == pytest.approx(0.25)
    assert origin_interior_weight(sq + 2.0) < 0
    # origin on an edge: feasible only with zero weight on the far vertices
    assert origin_interior_weight(np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0]])) == pytest.approx(0.0, abs=1e-12)


def test_random_signals_shape_and_box():
    rng = np.random.default_rng(1)
    d, v = random_signals(rng, 50, 2.0, 8, np.array([[-0.5, 0.5], [0.0, 1.0]]))
    assert d.shape == (50, 8) and v.shape == (50, 8, 2)
    np.testing.assert_allclose(d.sum(axis=1), 2.0)
    assert v[..., 0].min() >= -0.5 and v[..., 0].max() <= 0.5
    assert v[..., 1].min() >= 0.0


# -- clouds -------------------------------------------------------------------


def test_zero_control_cloud_is_identity():
    sys, r = fixture("sl2_ex_ii")
    cloud = sample_reachable(sys, r, 1.0, 20, zero_control=True, dt=1e-2)
    np.testing.assert_allclose(cloud.points, np.repeat(np.eye(2)[None], 20, axis=0), atol=1e-13)
    res = local_accessibility_test(cloud)
    assert not res.passed and res.dimension == 0


def test_cloud_is_deterministic():
    sys, r = fixture("rolling_sphere")
    a = sample_reachable(sys, r, 1.0, 30, seed=5, box=BOX4, dt=1e-2)
    b = sample_reachable(sys, r, 1.0, 30, seed=5, box=BOX4, dt=1e-2)
    np.testing.assert_array_equal(a.points, b.points)
    c = sample_reachable(sys, r, 1.0, 30, seed=6, box=BOX4, dt=1e-2)
    assert not np.array_equal(a.points, c.points)


def test_cloud_endpoints_match_solver():
    sys, r = fixture("rolling_sphere")
    cloud = sample_reachable(sys, r, 1.0, 5, seed=2, box=BOX4, dt=1e-2)
    d, v = cloud.signals
    for i in range(5):
        end = solve(r, sys, r.identity(), ControlSignal(d[i], v[i]), dt=1e-2).final
        assert r.distance(end, cloud.element(i)) <= 1e-12


def test_cloud_records():
    sys, r = fixture("sl2_ex_ii")
    cloud = sample_reachable(sys, r, 1.0, 4, dt=1e-2)
    recs = list(cloud.records())
    assert [x["index"] for x in recs] == [0, 1, 2, 3]
    assert len(recs[0]["state"]) == 4 and len(recs[0]["log_chart"]) == 3


def test_rolling_sphere_cloud_passes():
    sys, r = fixture("rolling_sphere")
    res = local_accessibility_test(sample_reachable(sys, r, 1.0, 400, seed=0, box=BOX4, dt=1e-2))
    assert res.passed and res.dimension == 5 and res.margin > 0


def test_rank_deficient_cloud_fails():
    sys, r = rank_deficient_r2()
    res = local_accessibility_test(sample_reachable(sys, r, 1.0, 200, seed=0, dt=1e-2))
    assert not res.passed and res.dimension == 1
    assert res.to_json()["result"] == "fail"


def test_all_points_dropped():
    # rotating by exactly pi leaves no usable logarithm
    sys, r = fixture("rolling_sphere")
    box = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [np.pi, np.pi]])
    cloud = sample_reachable(sys, r, 1.0, 10, box=box, dt=1e-2)
    assert cloud.dropped == 10
    with pytest.raises(InsufficientSamples):
        local_accessibility_test(cloud)


def test_sampling_rejects_bad_arguments():
    sys, r = fixture("sl2_ex_ii")
    with pytest.raises(InvalidInput):
        sample_reachable(sys, r, 0.0, 10)
    with pytest.raises(InvalidInput):
        sample_reachable(sys, r, 1.0, 0)


# -- composition --------------------------------------------------------------


@pytest.mark.parametrize("name", ["sl2_ex_ii", "rolling_sphere"])
def test_composition_identity(name):
    sys, r = fixture(name)
    rep = composition_check(sys, r, 0.7, 1.1, 20, dt=1e-2)
    assert rep.passed
    assert rep.max_mismatch <= 1e-9
    assert rep.monotonicity_mismatch <= 1e-9


def test_composition_mismatch_shrinks_with_dt():
    # coarse steps make the RK4 error visible; it falls as dt shrinks
    sys, r = fixture("sl2_ex_ii")
    errs = [composition_check(sys, r, 1.0, 1.0, 20, dt=dt, pieces=3).max_mismatch for dt in (0.1, 0.05, 0.025)]
    assert errs[0] > errs[1] > errs[2]


# -- connect ------------------------------------------------------------------


def test_connect_trivial():
    sys, r = fixture("sl2_ex_ii")
    res = connect(sys, r, r.identity(), r.identity(), budget=1000)
    assert res.found and res.residual <= 1e-12


def test_connect_sl2_exp_x():
    sys, r = fixture("sl2_ex_ii")
    r = r.for_system(sys)
    target = group_exp(r, [1.0, 0.0, 0.0])
    res = connect(sys, r, r.identity(), target, seed=0)
    assert res.found and res.residual <= 1e-3
    assert res.signal.within(sys.box())
    end = solve(r, sys, r.identity(), res.signal).final
    assert r.distance(end, target) <= 1e-3


def test_connect_budget_exhausted():
    sys, r = fixture("sl2_ex_ii")
    r = r.for_system(sys)
    target = group_exp(r, [1.0, 0.0, 0.0])
    with pytest.raises(BudgetExhausted) as info:
        connect(sys, r, r.identity(), target, budget=50, population=20, elite=5)
    best = info.value.best
    assert not best.found and best.residual > 1e-3
    assert best.to_json()["result"] == "best"
