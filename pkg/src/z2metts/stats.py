"""Autocorrelation analysis and single-shot variance checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

DEFAULT_WINDOW = 10


def _acf(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Normalized autocorrelation for lags 0..max_lag (mean removed once)."""
    x = np.asarray(x, dtype=float)
    n = x.size
    d = x - x.mean()
    var = np.dot(d, d) / n
    if var <= 0.0:
        raise ValueError("series has zero variance")
    size = 1 << int(np.ceil(np.log2(2 * n)))
    f = np.fft.rfft(d, size)
    acov = np.fft.irfft(f * np.conj(f), size)[: max_lag + 1]
    acov = acov / (n - np.arange(max_lag + 1))
    return acov / var


def autocorrelation(series: Sequence[float], t: int) -> float:
    """``Cov(x_k, x_{k+t}) / Var(x)``."""
    x = np.asarray(series, dtype=float)
    if x.size < t + 2:
        raise ValueError(f"series too short for lag {t}")
    return float(_acf(x, t)[t])


def tau_int(series: Sequence[float], w: int = DEFAULT_WINDOW) -> float:
    """Windowed integrated autocorrelation time ``1/2 + sum_{t=1}^{w} rho(t)``."""
    x = np.asarray(series, dtype=float)
    if w >= x.size:
        raise ValueError(f"window {w} must be shorter than the series ({x.size})")
    if w == 0:
        return 0.5
    rho = _acf(x, w)
    return float(0.5 + rho[1:].sum())


@dataclass(frozen=True)
class SeriesSummary:
    mean: float
    variance: float
    tau: float
    stderr: float
    n_eff: float
    n: int
    window: int


def summarize(series: Sequence[float], w: int = DEFAULT_WINDOW) -> SeriesSummary:
    """Mean with an autocorrelation-corrected error ``sqrt(2 tau var / N)``.

    A constant series gets ``tau = 1/2`` and zero error.
    """
    x = np.asarray(series, dtype=float)
    n = x.size
    mean = float(x.mean())
    var = float(x.var())
    if var <= 1e-300 or n < 2:
        return SeriesSummary(mean, 0.0, 0.5, 0.0, float(n), n, w)
    tau = tau_int(x, min(w, n - 1))
    stderr = float(np.sqrt(max(2.0 * tau * var / n, 0.0)))
    n_eff = n / (2.0 * tau) if tau > 0 else float("inf")
    return SeriesSummary(mean, var, tau, stderr, n_eff, n, w)


@dataclass
class VarianceReport:
    sigma_mu2: float
    sigma_shot2: float
    sigma_gibbs2: float
    tau_mu: float
    tau_o: float
    alpha: float
    tau_o_predicted: float       # 1 + alpha (tau_mu - 1)
    tau_o_predicted_half: float  # 1/2 + alpha (tau_mu - 1/2), same window convention as tau_int

    @property
    def gibbs_gap(self) -> float:
        return self.sigma_mu2 + self.sigma_shot2 - self.sigma_gibbs2


def variance_decomposition(
    mu_series: Sequence[float],
    o_series: Sequence[float],
    gibbs_variance: float,
    w: int = DEFAULT_WINDOW,
) -> VarianceReport:
    """Split single-shot variance into chain and shot parts and compare the tau relation."""
    mu = np.asarray(mu_series, dtype=float)
    o = np.asarray(o_series, dtype=float)
    if mu.shape != o.shape:
        raise ValueError("series lengths differ")
    s_mu = float(mu.var())
    s_shot = float(o.var()) - s_mu
    tau_mu = tau_int(mu, w) if s_mu > 0 else 0.5
    tau_o = tau_int(o, w) if o.var() > 0 else 0.5
    total = s_mu + s_shot
    alpha = s_mu / total if total > 0 else 1.0
    return VarianceReport(
        s_mu, s_shot, float(gibbs_variance), tau_mu, tau_o, alpha,
        1.0 + alpha * (tau_mu - 1.0),
        0.5 + alpha * (tau_mu - 0.5),
    )


@dataclass
class PopulationVariances:
    sigma_mu2: float
    sigma_shot2: float
    sigma_gibbs2: float

    @property
    def gap(self) -> float:
        return self.sigma_mu2 + self.sigma_shot2 - self.sigma_gibbs2


def population_variances(sol, beta: float, observable, basis=None) -> PopulationVariances:
    """Chain variance, mean shot variance and Gibbs variance by exact enumeration.

    Uses the exact (untrotterized) METTS of every physical member of ``basis``
    (physical-Z by default) weighted by ``Prob_i``.
    """
    from .exactref import gibbs_variance, physical_members
    from .model import Observable
    from .mupb import build_1p1d

    op = observable.total() if isinstance(observable, Observable) else observable
    if basis is None:
        basis = build_1p1d(sol.cfg)[0]
    _, coords = physical_members(sol, basis)
    o = sol.restrict(op)
    phi = sol.imag_propagator(beta) @ coords
    weights = np.linalg.norm(phi, axis=0) ** 2
    probs = weights / weights.sum()
    phi = phi / np.sqrt(weights)
    o_phi = o @ phi
    mu = np.einsum("ij,ij->j", phi.conj(), o_phi).real
    o2 = np.einsum("ij,ij->j", o_phi.conj(), o_phi).real
    s_mu = float(probs @ mu**2 - (probs @ mu) ** 2)
    s_shot = float(probs @ (o2 - mu**2))
    return PopulationVariances(s_mu, s_shot, gibbs_variance(sol, beta, op))


def synthetic_chain(n: int, r: float, sigma_shot: float, rng: np.random.Generator, sigma_mu: float = 1.0):
    """AR(1) series ``mu`` (stationary sd ``sigma_mu``) and ``o = mu + N(0, sigma_shot^2)``."""
    mu = np.empty(n)
    innov = sigma_mu * np.sqrt(1 - r * r)
    mu[0] = rng.normal(0.0, sigma_mu)
    for k in range(1, n):
        mu[k] = r * mu[k - 1] + rng.normal(0.0, innov)
    return mu, mu + rng.normal(0.0, sigma_shot, size=n)


@dataclass
class BudgetReport:
    n_est: int
    n_shot: int
    n_rep: int
    var_single: dict[str, float] = field(default_factory=dict)
    var_multi: dict[str, float] = field(default_factory=dict)
    se_single: dict[str, float] = field(default_factory=dict)
    se_multi: dict[str, float] = field(default_factory=dict)

    def single_not_worse(self, name: str, n_sigma: float = 2.0) -> bool:
        """``Var_single <= Var_multi`` up to ``n_sigma`` combined standard errors."""
        se = np.hypot(self.se_single[name], self.se_multi[name])
        return bool(self.var_single[name] <= self.var_multi[name] + n_sigma * se)


def fixed_budget_comparison(
    lattice,
    beta: float,
    n_est: int,
    n_shot: int,
    n_rep: int = 50,
    delta_beta: float = 0.01,
    seed: int = 0,
) -> BudgetReport:
    """Spread of the chain mean for single-shot vs multi-shot at equal circuit budget.

    Single-shot chains have ``n_est`` steps; multi-shot chains have
    ``n_est / n_shot`` steps with ``n_shot`` draws each.
    """
    from .ite import trotter_sequence
    from .model import build_model
    from .mupb import build_1p1d
    from .qmetts import ChainConfig, run_chain

    if n_est % n_shot:
        raise ValueError("n_est must be divisible by n_shot")
    bases = build_1p1d(lattice)
    plan = trotter_sequence(build_model(lattice), delta_beta)
    means: dict[str, dict[str, list[float]]] = {"single": {}, "multi": {}}
    for rep in range(n_rep):
        arms = (
            ("single", ChainConfig(n_chain=n_est, estimator_mode="single_shot", seed=[seed, rep, 0])),
            ("multi", ChainConfig(n_chain=n_est // n_shot, estimator_mode="multi_shot", n_shot=n_shot,
                                  seed=[seed, rep, 1])),
        )
        for arm, cc in arms:
            rec = run_chain(lattice, bases, plan, beta, cc)
            for name in rec.o:
                means[arm].setdefault(name, []).append(float(np.mean(rec.o[name])))
    rep_out = BudgetReport(n_est, n_shot, n_rep)
    for arm, var_d, se_d in (("single", rep_out.var_single, rep_out.se_single), ("multi", rep_out.var_multi, rep_out.se_multi)):
        for name, vals in means[arm].items():
            v = float(np.var(vals, ddof=1))
            var_d[name] = v
            se_d[name] = float(v * np.sqrt(2.0 / (len(vals) - 1)))
    return rep_out
