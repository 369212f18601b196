import warnings

import numpy as np
import pytest

from wellopt.core import UsageError, make_rng
from wellopt.pso import Pso, Swarm, absorb, check_stability, init_swarm, move, pso_update, record, run_pso
from wellopt.reservoir.analytic import shifted_quadratic_spec


@pytest.mark.parametrize("w,c1,c2,ok", [(0.9, 0.5, 1.25, True), (1.2, 0.5, 1.25, False), (0.9, 2.5, 2.5, False)])
def test_stability(w, c1, c2, ok):
    assert check_stability(w, c1, c2) is ok


def test_stability_boundary_is_open():
    assert not check_stability(0.0, 2.0, 2.0)
    assert not check_stability(1.0, 0.5, 0.5)
    assert not check_stability(-0.125, 0.5, 1.25)


def test_init_swarm():
    s = init_swarm(make_rng(1), 2, [0.25, 0.5])
    assert s.x[0].tolist() == [0.25, 0.5] and np.all(s.v == 0)
    s = init_swarm(make_rng(1), 100, [0.25, 0.5])
    assert s.size == 100 and np.all((s.x >= 0) & (s.x <= 1))
    assert np.array_equal(init_swarm(make_rng(3), 10, [0.5]).x, init_swarm(make_rng(3), 10, [0.5]).x)
    with pytest.raises(UsageError):
        init_swarm(make_rng(1), 1, [0.5])


def _one(x, v, p, g):
    a = lambda t: np.array([[t]], dtype=float)
    return Swarm(a(x), a(v), a(p), np.array([0.0]), np.array([g]), 0.0)


def test_fixed_point():
    s = _one(0.4, 0.0, 0.4, 0.4)
    x, v = move(s, np.ones((1, 1)), np.ones((1, 1)))
    assert x[0, 0] == 0.4 and v[0, 0] == 0.0


def test_hand_update():
    s = _one(0.4, 0.1, 0.5, 0.6)
    x, v = move(s, np.ones((1, 1)), np.ones((1, 1)))
    assert v[0, 0] == pytest.approx(0.39, abs=1e-15)
    assert x[0, 0] == pytest.approx(0.79, abs=1e-15)


def test_absorbing_bounds():
    x, v = absorb(np.array([[1.2, 0.5, -0.1]]), np.array([[0.3, 0.2, -0.4]]))
    assert x.tolist() == [[1.0, 0.5, 0.0]] and v.tolist() == [[0.0, 0.2, 0.0]]


def test_update_properties():
    spec = shifted_quadratic_spec([0.2, 0.9, 0.5])
    rng = make_rng(5)
    s = init_swarm(rng, 12, [0.5, 0.5, 0.5], w=0.9, c1=2.0, c2=1.9)
    f = lambda x: np.array([spec.evaluator(r) for r in x])
    record(s, f(s.x))
    prev_g, prev_p = s.g_value, s.p_value.copy()
    for _ in range(30):
        pso_update(s, rng, f)
        assert np.all((s.x >= 0) & (s.x <= 1))
        assert s.g_value >= prev_g and np.all(s.p_value >= prev_p)
        assert s.g_value == s.p_value.max()
        prev_g, prev_p = s.g_value, s.p_value.copy()


def test_absorbed_coordinates_have_zero_velocity():
    rng = make_rng(0)
    s = Swarm(np.array([[0.9]]), np.array([[0.5]]), np.array([[0.9]]), np.array([1.0]), np.array([0.9]), 1.0)
    x, v = move(s, rng.random((1, 1)), rng.random((1, 1)))
    assert x[0, 0] == 1.0 and v[0, 0] == 0.0


def test_run_counts_and_global_best():
    spec = shifted_quadratic_spec([0.3, 0.7])
    res = run_pso(spec, [0.5, 0.5], lam=10, budget=105, seed=1)
    assert res.log.batch_sizes() == [10] * 10
    assert res.value == np.nanmax(res.log.values())


def test_budget_below_population():
    with pytest.raises(UsageError):
        run_pso(shifted_quadratic_spec([0.3]), [0.5], lam=20, budget=10)


def test_seeds():
    spec = shifted_quadratic_spec([0.3, 0.7])
    a = run_pso(spec, [0.5, 0.5], lam=10, budget=100, seed=1)
    b = run_pso(spec, [0.5, 0.5], lam=10, budget=100, seed=1)
    c = run_pso(spec, [0.5, 0.5], lam=10, budget=100, seed=2)
    assert np.array_equal(a.log.values(), b.log.values())
    assert not np.array_equal(a.log.values(), c.log.values())


def test_unstable_parameters_warn_but_run():
    spec = shifted_quadratic_spec([0.3])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        Pso(spec, [0.5], __import__("wellopt.core").core.EvaluationLog(10), make_rng(0), lam=2, w=1.2)
    assert any("stability" in str(w.message) for w in caught)


def test_sphere_oracle():
    spec = shifted_quadratic_spec([0.5] * 4)
    hits = sum(run_pso(spec, [0.2] * 4, lam=20, budget=2000, seed=s).value > -1e-3 for s in range(10))
    assert hits >= 9
