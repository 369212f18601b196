"""CMA-ES with rank-one plus rank-mu covariance update, cumulative step-size
adaptation, and clamp repair with a distance penalty for the box bounds."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EvaluationLog, ObjectiveSpec, OptimizeResult, UsageError, make_rng
from .optimizer import Optimizer, drive


class NumericDegeneracyError(ArithmeticError):
    """The covariance matrix lost positive definiteness."""


@dataclass(frozen=True)
class CmaesParams:
    dim: int
    lam: int
    mu: int
    weights: np.ndarray
    mu_eff: float
    c_c: float
    c_sigma: float
    d_sigma: float
    mu_cov: float
    c_cov: float
    chi_n: float


def default_population(dim: int) -> int:
    return 4 + int(math.floor(3.0 * math.log(dim)))


def recombination_weights(mu: int) -> np.ndarray:
    """Superlinear weights ``(ln(mu+1) - ln i) / (mu ln(mu+1) - ln mu!)``."""
    i = np.arange(1, mu + 1)
    return (math.log(mu + 1) - np.log(i)) / (mu * math.log(mu + 1) - math.lgamma(mu + 1))


def cmaes_params(dim: int, lam: int | None = None, mu: int | None = None) -> CmaesParams:
    if dim < 1:
        raise UsageError("dimension must be at least 1")
    lam = default_population(dim) if lam is None else int(lam)
    mu = lam // 2 if mu is None else int(mu)
    if not 1 <= mu <= lam or lam < 2:
        raise UsageError(f"need 1 <= mu <= lambda and lambda >= 2, got mu={mu}, lambda={lam}")
    w = recombination_weights(mu)
    mu_eff = 1.0 / float(np.sum(w**2))
    n = float(dim)
    c_c = 4.0 / (n + 4.0)
    c_sigma = (mu_eff + 2.0) / (n + mu_eff + 3.0)
    d_sigma = 1.0 + 2.0 * max(0.0, math.sqrt((mu_eff - 1.0) / (n + 1.0)) - 1.0) + c_sigma
    mu_cov = mu_eff
    c_cov = (1.0 / mu_cov) * 2.0 / (n + math.sqrt(2.0)) ** 2 + (1.0 - 1.0 / mu_cov) * min(
        1.0, (2.0 * mu_eff - 1.0) / ((n + 2.0) ** 2 + mu_eff)
    )
    chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
    w.flags.writeable = False
    return CmaesParams(dim, lam, mu, w, mu_eff, c_c, c_sigma, d_sigma, mu_cov, c_cov, chi_n)


@dataclass
class CmaesState:
    m: np.ndarray
    sigma: float
    C: np.ndarray
    p_c: np.ndarray
    p_sigma: np.ndarray
    iteration: int = 0

    @classmethod
    def initial(cls, m, sigma: float) -> "CmaesState":
        m = np.asarray(m, dtype=float).copy()
        d = m.size
        return cls(m, float(sigma), np.eye(d), np.zeros(d), np.zeros(d))


def eigen(C: np.ndarray):
    """``(B, sqrt_eigenvalues)`` with ``C = B diag(eig) B^T``; raises if ``C`` is not SPD."""
    if not np.all(np.isfinite(C)):
        raise NumericDegeneracyError("covariance contains non-finite entries")
    vals, B = np.linalg.eigh(C)
    if vals[0] <= 0.0:
        raise NumericDegeneracyError(f"covariance is not positive definite: smallest eigenvalue {vals[0]:.6g}")
    return B, np.sqrt(vals)


def sample_population(state: CmaesState, params: CmaesParams, rng: np.random.Generator) -> np.ndarray:
    """``lam`` rows ``m + sigma B D z`` with ``z`` standard normal."""
    B, d = eigen(state.C)
    z = rng.standard_normal((params.lam, state.m.size))
    return state.m + state.sigma * (z * d) @ B.T


def repair(x) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=float), 0.0, 1.0)


def penalized_fitness(value: float, x, x_rep, alpha: float) -> float:
    """``f(x_rep) - alpha * ||x - x_rep||^2`` (maximization)."""
    d = np.asarray(x, dtype=float) - np.asarray(x_rep, dtype=float)
    return float(value) - alpha * float(np.dot(d, d))


def repair_and_penalize(x, value_of, alpha: float):
    """Evaluate the clamped point and penalize by its distance to ``x``.

    Returns ``(fitness, repaired point, consumed)``; one evaluation is always consumed.
    """
    x_rep = repair(x)
    return penalized_fitness(value_of(x_rep), x, x_rep, alpha), x_rep, True


def cmaes_update(state: CmaesState, params: CmaesParams, ranked) -> CmaesState:
    """Distribution update from the ``lam`` pre-repair samples sorted best first."""
    x = np.asarray(ranked, dtype=float)
    if not np.all(np.isfinite(x)):
        raise UsageError("ranked samples must be finite")
    mu, w = params.mu, params.weights
    B, d = eigen(state.C)
    inv_sqrt_C = (B / d) @ B.T
    m_old, sigma = state.m, state.sigma
    m = w @ x[:mu]
    step = (m - m_old) / sigma
    p_c = (1.0 - params.c_c) * state.p_c + math.sqrt(params.c_c * (2.0 - params.c_c) * params.mu_eff) * step
    y = (x[:mu] - m_old) / sigma
    rank_mu = (y * w[:, None]).T @ y
    C = (
        (1.0 - params.c_cov) * state.C
        + params.c_cov / params.mu_cov * np.outer(p_c, p_c)
        + params.c_cov * (1.0 - 1.0 / params.mu_cov) * rank_mu
    )
    C = 0.5 * (C + C.T)
    p_sigma = (1.0 - params.c_sigma) * state.p_sigma + math.sqrt(
        params.c_sigma * (2.0 - params.c_sigma) * params.mu_eff
    ) * (inv_sqrt_C @ step)
    sigma = sigma * math.exp(params.c_sigma / params.d_sigma * (np.linalg.norm(p_sigma) / params.chi_n - 1.0))
    return CmaesState(m, sigma, C, p_c, p_sigma, state.iteration + 1)


def rank(fitness) -> np.ndarray:
    """Indices sorting ``fitness`` descending; ties keep sample order."""
    return np.argsort(-np.asarray(fitness, dtype=float), kind="stable")


class Cmaes(Optimizer):
    name = "CMA-ES"

    def __init__(self, spec: ObjectiveSpec, x0, log: EvaluationLog, rng, executor=None, sigma0=0.3,
                 lam=None, mu=None, alpha_scale=1e4, tol_x=1e-12, evaluate_x0=True):
        super().__init__(spec, x0, log, executor)
        if not sigma0 > 0:
            raise UsageError("sigma0 must be positive")
        self.rng = rng
        self.params = cmaes_params(spec.dim, lam, mu)
        self.state = CmaesState.initial(self.z0, sigma0)
        self.alpha_scale = float(alpha_scale)
        self.tol_x = float(tol_x)
        self.evaluate_x0 = bool(evaluate_x0)
        self._f_min = math.inf
        self._f_max = -math.inf

    @property
    def alpha(self) -> float:
        spread = self._f_max - self._f_min if self._f_max > self._f_min else 0.0
        return self.alpha_scale * max(1.0, spread)

    def _observe(self, values):
        self._f_min = min(self._f_min, float(np.min(values)))
        self._f_max = max(self._f_max, float(np.max(values)))

    def start_size(self):
        return 1 if self.evaluate_x0 else 0

    def start(self):
        if self.evaluate_x0:
            self._observe(self.evaluate([self.state.m]))

    def batch_size(self):
        return self.params.lam

    def iterate(self):
        x = sample_population(self.state, self.params, self.rng)
        x_rep = repair(x)
        values = self.evaluate(list(x_rep))
        self._observe(values)
        alpha = self.alpha
        fitness = [penalized_fitness(v, xi, xr, alpha) for v, xi, xr in zip(values, x, x_rep)]
        self.state = cmaes_update(self.state, self.params, x[rank(fitness)])
        self.iterations = self.state.iteration
        scale = self.state.sigma * math.sqrt(float(np.max(np.diag(self.state.C))))
        if scale < self.tol_x:
            self.stop_reason = "tol_x"

    @property
    def incumbent(self):
        return self.state.m


def run_cmaes(spec: ObjectiveSpec, x0, sigma0: float = 0.3, budget: int = 1000, rng=None, seed: int = 0,
              lam=None, mu=None, tol_x=1e-12, executor=None) -> OptimizeResult:
    """CMA-ES from mean ``x0`` until the budget cannot cover another generation."""
    rng = make_rng(seed) if rng is None else rng
    params = cmaes_params(spec.dim, lam, mu)
    if budget < params.lam:
        raise UsageError(f"budget {budget} is smaller than the population size {params.lam}")
    log = EvaluationLog(budget)
    opt = Cmaes(spec, x0, log, rng, executor, sigma0=sigma0, lam=lam, mu=mu, tol_x=tol_x)
    drive(opt)
    return opt.result()
