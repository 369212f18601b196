import math
from decimal import Decimal, getcontext

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wellopt.cmaes import (
    Cmaes,
    CmaesState,
    NumericDegeneracyError,
    cmaes_params,
    cmaes_update,
    penalized_fitness,
    rank,
    recombination_weights,
    repair,
    repair_and_penalize,
    run_cmaes,
    sample_population,
)
from wellopt.core import EvaluationLog, UsageError, make_rng
from wellopt.reservoir.analytic import shifted_quadratic_spec, sphere_spec


def weights_oracle(mu):
    """Recombination weights in 40-digit decimal arithmetic."""
    getcontext().prec = 40
    ln = lambda v: Decimal(v).ln()
    log_fact = sum((ln(i) for i in range(1, mu + 1)), Decimal(0))
    den = mu * ln(mu + 1) - log_fact
    return [float((ln(mu + 1) - ln(i)) / den) for i in range(1, mu + 1)]


def test_weights_mu2():
    w = recombination_weights(2)
    assert w == pytest.approx([0.7304, 0.2696], abs=1e-3)
    assert w == pytest.approx(weights_oracle(2), abs=1e-15)


@pytest.mark.parametrize("mu", [1, 2, 3, 5, 7, 9, 20])
def test_weights_against_oracle(mu):
    w = recombination_weights(mu)
    assert w == pytest.approx(weights_oracle(mu), abs=1e-14)
    assert abs(w.sum() - 1) < 1e-12
    assert np.all(np.diff(w) < 0) and np.all(w > 0)


@pytest.mark.parametrize("dim,lam", [(4, 8), (8, 10), (32, 14), (128, 18), (1, 4), (2, 6)])
def test_population_sizes(dim, lam):
    assert cmaes_params(dim).lam == lam


def test_constants_hand_computed():
    p = cmaes_params(4)
    w = weights_oracle(4)
    mu_eff = 1 / sum(x * x for x in w)
    assert p.mu == 4 and p.mu_eff == pytest.approx(mu_eff, rel=1e-14)
    assert p.c_c == pytest.approx(0.5)
    assert p.c_sigma == pytest.approx((mu_eff + 2) / (4 + mu_eff + 3))
    assert p.d_sigma == pytest.approx(1 + 2 * max(0, math.sqrt((mu_eff - 1) / 5) - 1) + p.c_sigma)
    c_cov = (1 / mu_eff) * 2 / (4 + math.sqrt(2)) ** 2 + (1 - 1 / mu_eff) * min(1, (2 * mu_eff - 1) / (36 + mu_eff))
    assert p.c_cov == pytest.approx(c_cov, rel=1e-14)
    assert p.chi_n == pytest.approx(2 * (1 - 1 / 16 + 1 / 336))


@pytest.mark.parametrize("dim", [1, 2, 5, 32, 128])
def test_constant_ranges(dim):
    p = cmaes_params(dim)
    assert 1 <= p.mu_eff <= p.mu <= p.lam
    for c in (p.c_c, p.c_sigma, p.c_cov):
        assert 0 < c <= 1


def test_chi_n_close_to_monte_carlo():
    z = make_rng(0).standard_normal((200_000, 6))
    assert cmaes_params(6).chi_n == pytest.approx(np.linalg.norm(z, axis=1).mean(), rel=3e-3)


def test_sampling_degenerate_sigma():
    s = CmaesState.initial([0.3, 0.4], 0.0)
    x = sample_population(s, cmaes_params(2), make_rng(0))
    assert np.all(x == [0.3, 0.4])


def test_sampling_moments():
    p = cmaes_params(2, lam=100_000)
    x = sample_population(CmaesState.initial([0.0, 0.0], 1.0), p, make_rng(1))
    n = x.shape[0]
    assert np.all(np.abs(x.mean(axis=0)) < 4 / math.sqrt(n))
    assert np.all(np.abs(x.var(axis=0) - 1) < 4 * math.sqrt(2 / n))
    s = CmaesState.initial([0.0, 0.0], 1.0)
    s.C = np.diag([4.0, 1.0])
    x = sample_population(s, p, make_rng(2))
    v = x.var(axis=0)
    assert v[0] / v[1] == pytest.approx(4.0, rel=0.03)


def test_non_spd_covariance_named():
    s = CmaesState.initial([0.0, 0.0], 1.0)
    s.C = np.array([[1.0, 2.0], [2.0, 1.0]])
    with pytest.raises(NumericDegeneracyError, match="eigenvalue -1"):
        sample_population(s, cmaes_params(2), make_rng(0))


def test_penalty_hand_case():
    x = np.array([1.3, 0.5])
    assert penalized_fitness(7.0, x, repair(x), 1e4) == pytest.approx(-893.0)
    f, xr, consumed = repair_and_penalize(x, lambda z: 7.0, 1e4)
    assert f == pytest.approx(-893.0) and xr.tolist() == [1.0, 0.5] and consumed


def test_feasible_not_penalized():
    x = np.array([0.2, 0.9])
    f, xr, _ = repair_and_penalize(x, lambda z: 3.5, 1e4)
    assert f == 3.5 and np.array_equal(xr, x)


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=6))
def test_repair_idempotent(x):
    assert np.array_equal(repair(repair(x)), repair(x))


@given(st.floats(-100, 100), st.lists(st.floats(-3, 3), min_size=2, max_size=2), st.floats(1e-3, 1e6))
def test_infeasible_never_outranks_equal_feasible(f, x, alpha):
    x = np.array(x)
    xr = repair(x)
    if np.array_equal(x, xr):
        return
    fit = penalized_fitness(f, x, xr, alpha)
    assert fit <= f
    if np.max(np.abs(x - xr)) > 1e-3:
        assert fit < f


def update_oracle(m, sigma, C, p_c, p_s, x_sorted, p):
    """Loop-based transcription of the update equations."""
    d = len(m)
    mu = p.mu
    w = p.weights
    m_new = [sum(w[i] * x_sorted[i][j] for i in range(mu)) for j in range(d)]
    disp = [(m_new[j] - m[j]) / sigma for j in range(d)]
    a = math.sqrt(p.c_c * (2 - p.c_c) * p.mu_eff)
    pc = [(1 - p.c_c) * p_c[j] + a * disp[j] for j in range(d)]
    Cn = [[0.0] * d for _ in range(d)]
    for r in range(d):
        for c in range(d):
            rank_mu = sum(w[i] * (x_sorted[i][r] - m[r]) * (x_sorted[i][c] - m[c]) for i in range(mu)) / sigma**2
            Cn[r][c] = (1 - p.c_cov) * C[r][c] + p.c_cov / p.mu_cov * pc[r] * pc[c] + p.c_cov * (1 - 1 / p.mu_cov) * rank_mu
    vals, vecs = np.linalg.eigh(np.array(C))
    inv_sqrt = vecs @ np.diag(1 / np.sqrt(vals)) @ vecs.T
    b = math.sqrt(p.c_sigma * (2 - p.c_sigma) * p.mu_eff)
    ps = [(1 - p.c_sigma) * p_s[j] + b * sum(inv_sqrt[j][k] * disp[k] for k in range(d)) for j in range(d)]
    norm = math.sqrt(sum(v * v for v in ps))
    sigma_new = sigma * math.exp(p.c_sigma / p.d_sigma * (norm / p.chi_n - 1))
    return np.array(m_new), sigma_new, np.array(Cn), np.array(pc), np.array(ps)


def test_update_matches_oracle():
    rng = make_rng(3)
    p = cmaes_params(3)
    A = rng.standard_normal((3, 3))
    C = A @ A.T + 0.5 * np.eye(3)
    s = CmaesState(rng.random(3), 0.2, C, rng.standard_normal(3) * 0.1, rng.standard_normal(3) * 0.1)
    x = sample_population(s, p, rng)
    new = cmaes_update(s, p, x)
    m, sigma, Cn, pc, ps = update_oracle(s.m, s.sigma, s.C, s.p_c, s.p_sigma, x, p)
    assert np.allclose(new.m, m, atol=1e-14)
    assert np.allclose(new.p_c, pc, atol=1e-12)
    assert np.allclose(new.C, Cn, atol=1e-12)
    assert np.allclose(new.p_sigma, ps, atol=1e-12)
    assert new.sigma == pytest.approx(sigma, rel=1e-12)
    assert np.array_equal(new.C, new.C.T)


def test_update_single_parent_takes_best():
    p = cmaes_params(2, lam=4, mu=1)
    s = CmaesState.initial([0.5, 0.5], 0.1)
    x = np.array([[0.6, 0.4], [0.1, 0.1], [0.2, 0.2], [0.3, 0.3]])
    assert cmaes_update(s, p, x).m.tolist() == [0.6, 0.4]


def test_update_zero_displacement():
    p = cmaes_params(2)
    s = CmaesState.initial([0.5, 0.5], 0.1)
    s.p_c = np.array([1.0, -2.0])
    new = cmaes_update(s, p, np.tile(s.m, (p.lam, 1)))
    assert new.m == pytest.approx(s.m, abs=1e-15)
    assert new.p_c == pytest.approx((1 - p.c_c) * s.p_c)


def test_sigma_unchanged_when_path_norm_is_chi_n():
    p = cmaes_params(2)
    s = CmaesState.initial([0.5, 0.5], 0.1)
    s.p_sigma = np.array([p.chi_n / (1 - p.c_sigma), 0.0])
    new = cmaes_update(s, p, np.tile(s.m, (p.lam, 1)))
    assert np.linalg.norm(new.p_sigma) == pytest.approx(p.chi_n)
    assert new.sigma == pytest.approx(0.1, rel=1e-14)


def test_non_finite_ranked_input():
    p = cmaes_params(2)
    x = np.zeros((p.lam, 2))
    x[0, 0] = np.nan
    with pytest.raises(UsageError):
        cmaes_update(CmaesState.initial([0.5, 0.5], 0.1), p, x)


def test_rank_descending_stable():
    assert rank([1.0, 3.0, 3.0, 2.0]).tolist() == [1, 2, 3, 0]


def test_covariance_stays_spd():
    spec = shifted_quadratic_spec(np.linspace(0.1, 0.9, 6), np.logspace(0, 3, 6))
    opt = Cmaes(spec, [0.5] * 6, EvaluationLog(3000), make_rng(0))
    opt.start()
    while opt.stop_reason is None and opt.log.remaining >= opt.batch_size():
        opt.iterate()
        C = opt.state.C
        assert np.array_equal(C, C.T) and np.linalg.eigvalsh(C)[0] > 0 and opt.state.sigma > 0


def test_sphere_d8_oracle():
    spec = shifted_quadratic_spec([0.5] * 8)
    for seed in range(10):
        res = run_cmaes(spec, [0.1] * 8, 0.3, 5000, seed=seed)
        assert np.max(np.abs(res.x - 0.5)) < 1e-3


def test_fig2_sphere_converges():
    res = run_cmaes(sphere_spec(2), [-200, -200], 0.3, 5000, seed=0)
    assert np.linalg.norm(res.x) < 1e-2


def test_deterministic_and_budget():
    spec = shifted_quadratic_spec([0.2, 0.3, 0.4])
    a = run_cmaes(spec, [0.5] * 3, 0.3, 300, seed=4)
    b = run_cmaes(spec, [0.5] * 3, 0.3, 300, seed=4)
    assert np.array_equal(a.log.values(), b.log.values())
    assert a.evaluations <= 300
    with pytest.raises(UsageError):
        run_cmaes(spec, [0.5] * 3, 0.3, 5, seed=0)
    with pytest.raises(UsageError):
        run_cmaes(spec, [0.5] * 3, 0.0, 100)
