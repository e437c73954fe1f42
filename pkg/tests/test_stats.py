from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from z2metts.exactref import solve
from z2metts.model import LatticeConfig, observables
from z2metts.stats import (
    autocorrelation,
    fixed_budget_comparison,
    population_variances,
    summarize,
    synthetic_chain,
    tau_int,
    variance_decomposition,
)


def _ar1(n, r, seed):
    mu, _ = synthetic_chain(n, r, 0.0, np.random.default_rng(seed))
    return mu


def test_autocorrelation_trivial_cases():
    x = 3.0 + np.tile([1.0, -1.0], 50)
    assert autocorrelation(x, 0) == pytest.approx(1.0)
    u = np.random.default_rng(0).uniform(size=20_000)
    assert abs(autocorrelation(u, 1)) < 4 / np.sqrt(u.size)
    with pytest.raises(ValueError):
        autocorrelation(np.ones(10), 1)
    with pytest.raises(ValueError):
        autocorrelation(u[:3], 2)


def test_autocorrelation_ar1():
    x = _ar1(100_000, 0.5, 1)
    assert autocorrelation(x, 2) == pytest.approx(0.25, abs=0.02)


def test_autocorrelation_matches_direct_sum():
    x = _ar1(500, 0.7, 2)
    d = x - x.mean()
    for t in (1, 3, 7):
        direct = np.mean(d[:-t] * d[t:]) / np.mean(d * d)
        assert autocorrelation(x, t) == pytest.approx(direct, abs=1e-12)


def test_tau_int_cases():
    iid = np.random.default_rng(3).normal(size=50_000)
    assert tau_int(iid, 10) == pytest.approx(0.5, abs=0.05)
    assert tau_int(iid, 0) == 0.5
    with pytest.raises(ValueError):
        tau_int(iid[:10], 10)
    r, w = 0.6, 20
    x = _ar1(200_000, r, 4)
    assert tau_int(x, w) == pytest.approx(0.5 + r * (1 - r**w) / (1 - r), rel=0.05)


@settings(max_examples=25, deadline=None)
@given(st.floats(0.1, 10), st.floats(-5, 5), st.integers(0, 2**32 - 1))
def test_tau_affine_invariant(a, b, seed):
    x = _ar1(400, 0.4, seed)
    assert tau_int(a * x + b, 10) == pytest.approx(tau_int(x, 10), abs=1e-9)


def test_summary_formula():
    x = _ar1(5000, 0.3, 5)
    s = summarize(x, 10)
    assert s.stderr**2 == pytest.approx(2 * s.tau * s.variance / s.n, rel=1e-12)
    assert s.n_eff == pytest.approx(s.n / (2 * s.tau))
    assert s.n_eff <= 1.5 * s.n
    c = summarize(np.ones(100))
    assert c.stderr == 0.0 and c.tau == 0.5 and c.mean == 1.0


def test_summary_reports_raw_tau_below_half():
    x = np.tile([1.0, -1.0], 500)  # anticorrelated: tau < 1/2
    s = summarize(x, 1)
    assert s.tau < 0.5


def test_population_identity_exact():
    cfg = LatticeConfig(2)
    for beta, mu in [(1.0, 0.0), (0.5, 0.0), (2.0, 1.0), (1.0, 2.5)]:
        c = cfg.with_mu(mu)
        sol = solve(c)
        for obs in observables(c).values():
            pv = population_variances(sol, beta, obs)
            assert abs(pv.gap) < 1e-10
            assert pv.sigma_mu2 >= -1e-14 and pv.sigma_shot2 >= -1e-14


def test_variance_decomposition_synthetic():
    rng = np.random.default_rng(6)
    mu, o = synthetic_chain(20_000, 0.8, 1.0, rng)
    rep = variance_decomposition(mu, o, gibbs_variance=2.0)
    assert rep.sigma_mu2 + rep.sigma_shot2 == pytest.approx(np.var(o))
    assert rep.alpha == pytest.approx(0.5, abs=0.1)
    assert rep.tau_o < rep.tau_mu
    assert rep.tau_o == pytest.approx(rep.tau_o_predicted_half, rel=0.15)
    with pytest.raises(ValueError):
        variance_decomposition(mu, o[:-1], 1.0)


def test_variance_decomposition_noiseless():
    mu = _ar1(5000, 0.5, 7)
    rep = variance_decomposition(mu, mu, gibbs_variance=1.0)
    assert rep.alpha == 1.0
    assert rep.tau_o == rep.tau_mu
    assert rep.tau_o_predicted == pytest.approx(rep.tau_mu)
    assert rep.tau_o_predicted_half == pytest.approx(rep.tau_mu)


def test_budget_single_shot_arms_identical_in_law():
    rep = fixed_budget_comparison(LatticeConfig(2), 1.0, n_est=100, n_shot=1, n_rep=8, seed=3)
    for name in rep.var_single:
        assert rep.var_single[name] > 0
    with pytest.raises(ValueError):
        fixed_budget_comparison(LatticeConfig(2), 1.0, n_est=101, n_shot=10)


def test_budget_zero_variance_case():
    # mu/g = 5 at low temperature: number density is exactly 1 on every step
    rep = fixed_budget_comparison(LatticeConfig(2, mu_over_g=5.0), 14.0, n_est=40, n_shot=4, n_rep=4)
    assert rep.var_single["number"] == pytest.approx(0.0, abs=1e-20)
    assert rep.var_multi["number"] == pytest.approx(0.0, abs=1e-20)


def test_tau_relation_half_convention_on_real_chain():
    """With tau = 1/2 + sum rho, a chain obeys tau_O ~ 1/2 + alpha (tau_mu - 1/2)."""
    from z2metts.exactref import gibbs_variance
    from z2metts.ite import trotter_sequence
    from z2metts.model import build_model
    from z2metts.mupb import build_1p1d
    from z2metts.qmetts import ChainConfig, run_chain

    cfg = LatticeConfig(2)
    plan = trotter_sequence(build_model(cfg), 0.01)
    rec = run_chain(cfg, build_1p1d(cfg), plan, 1.0, ChainConfig(n_chain=20_000, seed=82, record_exact=True))
    sol = solve(cfg)
    for name, obs in observables(cfg).items():
        r = variance_decomposition(rec.series(name, exact=True), rec.series(name),
                                   gibbs_variance(sol, 1.0, obs), w=10)
        assert abs(r.tau_o - r.tau_o_predicted_half) <= 0.15 * r.tau_o_predicted_half, name
