from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import expm

from z2metts.exactref import (
    gibbs_variance,
    physical_members,
    solve,
    stationary_distribution,
    thermal_expectation,
    thermal_expectation_fullspace,
)
from z2metts.model import LatticeConfig, QubitLayout, build_model, label_codec, number_operator, observables
from z2metts.mupb import build_1p1d


def _top_labels(dist, l_ks, k):
    codec = label_codec(QubitLayout(l_ks))
    ranked = sorted(dist.items(), key=lambda kv: -kv[1])
    return [(codec.encode(b), p) for b, p in ranked[:k]]


def test_beta_zero_uniform():
    sol = solve(LatticeConfig(2))
    for basis in build_1p1d(sol.cfg):
        dist = stationary_distribution(sol, 0.0, basis)
        assert len(dist) == 4
        assert all(p == pytest.approx(0.25) for p in dist.values())


def test_distribution_matches_rotated_gibbs_diagonal():
    cfg = LatticeConfig(3, mu_over_g=0.6)
    sol = solve(cfg)
    rho = expm(-1.3 * build_model(cfg).to_matrix())
    for basis in build_1p1d(cfg):
        dist = stationary_distribution(sol, 1.3, basis)
        assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
        u = basis.states()
        bits, _ = physical_members(sol, basis)
        diag = {b: np.vdot(u[:, int(b, 2)], rho @ u[:, int(b, 2)]).real for b in bits}
        z = sum(diag.values())
        for b in bits:
            assert dist[b] == pytest.approx(diag[b] / z, abs=1e-12)


def test_l4_low_temperature_dominant_states():
    l4 = LatticeConfig(4)
    top = _top_labels(stationary_distribution(solve(l4), 14.0), 4, 1)
    assert top[0][0] == "1+0+1+0"
    cfg = l4.with_mu(2.5)
    dist = stationary_distribution(solve(cfg), 14.0)
    top = _top_labels(dist, 4, 4)
    assert top[0][0] == "0-1+0-0"
    n_op = number_operator(cfg).to_matrix().diagonal().real
    codec = label_codec(QubitLayout(4))
    for label, p in top:
        assert p > 0.05
        assert n_op[int(codec.decode(label), 2)] == pytest.approx(1.0)


def test_thermal_expectation_limits():
    l4 = LatticeConfig(4)
    sol0 = solve(l4)
    obs = observables(l4)
    assert thermal_expectation(sol0, 0.0, obs["chiral"]) == pytest.approx(0.0, abs=1e-12)
    # uniform trace of the energy density: only the link offset survives
    assert thermal_expectation(sol0, 0.0, obs["energy"]) == pytest.approx(0.25 * 3 / 2, abs=1e-12)
    sol5 = solve(l4.with_mu(5.0))
    assert thermal_expectation(sol5, 14.0, obs["chiral"]) == pytest.approx(0.0, abs=1e-9)
    assert thermal_expectation(sol5, 14.0, obs["number"]) == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("beta, mu", [(0.4, 0.0), (1.0, 0.0), (14.0, 0.0), (1.0, 2.5), (3.0, 5.0)])
def test_two_routes_agree(beta, mu):
    cfg = LatticeConfig(4, mu_over_g=mu)
    sol = solve(cfg)
    for obs in observables(cfg).values():
        a = thermal_expectation(sol, beta, obs)
        b = thermal_expectation_fullspace(cfg, beta, obs)
        assert a == pytest.approx(b, abs=1e-9)


def test_number_density_monotone_in_mu():
    mus = np.linspace(0, 6, 25)
    dens = [thermal_expectation(solve(LatticeConfig(4, mu_over_g=m)), 3.0, observables(LatticeConfig(4))["number"])
            for m in mus]
    assert np.all(np.diff(dens) >= -1e-12)


def test_gibbs_variance_cases():
    cfg = LatticeConfig(2)
    sol = solve(cfg)
    obs = observables(cfg)
    # beta = 0: number density n = (Z_1 + Z_2)/2 over the four physical labels
    site_bits = ["00", "01", "10", "11"]
    vals = [0.5 * sum(1 - 2 * int(c) for c in b) for b in site_bits]
    assert gibbs_variance(sol, 0.0, obs["number"]) == pytest.approx(np.var(vals), abs=1e-12)
    # low temperature: variance in the (nondegenerate) ground state
    gs = sol.evecs[:, 0]
    o = sol.restrict(obs["energy"].total())
    pure = np.vdot(gs, o @ o @ gs).real - np.vdot(gs, o @ gs).real ** 2
    assert gibbs_variance(sol, 60.0, obs["energy"]) == pytest.approx(pure, abs=1e-10)


def test_size_limit():
    with pytest.raises(ValueError):
        solve(LatticeConfig(5), dense_limit=8)
