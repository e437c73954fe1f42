from __future__ import annotations

import numpy as np
import pytest
from scipy.linalg import expm

from z2metts.exactref import exact_metts, ground_state, solve
from z2metts.ite import (
    apply_ite,
    commutator_norms,
    propagator,
    step_matrix,
    trotter_error_diag,
    trotter_sequence,
)
from z2metts.model import HamiltonianTerms, LatticeConfig, build_model, physical_projector
from z2metts.mupb import build_1p1d
from z2metts.statevec import StateVector, apply_circuit, init_basis_state


def _physical_start(cfg, bits):
    z, _ = build_1p1d(cfg)
    return apply_circuit(init_basis_state(cfg.n_qubits, bits), z.circuit.inverse())


def test_plan_factor_count_and_zero_step():
    terms = build_model(LatticeConfig(4))
    plan = trotter_sequence(terms, 0.01)
    assert len(plan.factors) == 2 * (len(terms.h_e) + len(terms.h_o) + len(terms.h_d))
    empty = trotter_sequence(terms, 0.0)
    assert empty.factors == ()
    np.testing.assert_allclose(step_matrix(empty), np.eye(2**7))


def test_plan_step_counts():
    plan = trotter_sequence(build_model(LatticeConfig(2)), 0.01)
    assert plan.steps_for(1.0) == (100, 0.0)
    n, rest = plan.steps_for(1.005)
    assert n == 100 and rest == pytest.approx(0.005)
    assert n * plan.delta_beta + rest == pytest.approx(1.005, rel=1e-9)
    assert plan.n_steps(1.005) == 101
    assert plan.steps_for(0.0) == (0, 0.0)


def test_merged_middle_factors_are_the_same_operator():
    terms = build_model(LatticeConfig(3, mu_over_g=0.4))
    plan = trotter_sequence(terms, 0.02)
    m = step_matrix(plan)
    mats = {k: g.to_matrix(5) for k, g in terms.groups().items()}
    q = lambda k, w: expm(-w * 0.02 * mats[k])
    merged = q("e", 0.25) @ q("o", 0.25) @ q("d", 0.5) @ q("o", 0.25) @ q("e", 0.25)
    np.testing.assert_allclose(m, merged, atol=1e-12)


def test_beta_zero_and_eigenstate_inputs():
    cfg = LatticeConfig(2)
    plan = trotter_sequence(build_model(cfg), 0.01)
    s = _physical_start(cfg, "010")
    np.testing.assert_allclose(apply_ite(s, plan, 0.0).amps, s.amps)
    # '0-0' is an eigenstate of H for L=2 (hopping annihilates it)
    out = apply_ite(s, plan, 3.0)
    assert abs(np.vdot(out.amps, s.amps)) == pytest.approx(1.0, abs=1e-12)


def test_dense_and_kernel_paths_agree():
    cfg = LatticeConfig(3, mu_over_g=1.0)
    plan = trotter_sequence(build_model(cfg), 0.03)
    s = _physical_start(cfg, "10000")
    a = apply_ite(s, plan, 1.37, method="dense")
    b = apply_ite(s, plan, 1.37, method="kernel")
    np.testing.assert_allclose(a.amps, b.amps, atol=1e-12)


@pytest.mark.parametrize("beta", [0.3, 1.0, 2.0])
def test_overlap_with_exact_metts(beta):
    cfg = LatticeConfig(2)
    terms = build_model(cfg)
    plan = trotter_sequence(terms, 0.01)
    k = terms.to_matrix(with_offset=False)
    for bits in ("010", "011", "100", "101"):
        s = _physical_start(cfg, bits)
        exact = expm(-0.5 * beta * k) @ s.amps
        exact /= np.linalg.norm(exact)
        got = apply_ite(s, plan, beta)
        assert abs(np.vdot(exact, got.amps)) ** 2 >= 1 - 1e-6


def test_exact_metts_oracles_agree():
    cfg = LatticeConfig(2, mu_over_g=0.5)
    sol = solve(cfg)
    k = build_model(cfg).to_matrix()
    s = _physical_start(cfg, "100")
    ref = expm(-0.5 * 1.5 * k) @ s.amps
    ref /= np.linalg.norm(ref)
    got = exact_metts(sol, 1.5, s.amps)
    assert abs(np.vdot(ref, got)) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("l_ks", [2, 3, 4])
def test_gauge_sector_preserved(l_ks):
    cfg = LatticeConfig(l_ks, mu_over_g=0.8)
    plan = trotter_sequence(build_model(cfg), 0.05)
    proj = physical_projector(cfg)
    rng = np.random.default_rng(l_ks)
    v = rng.normal(size=2**cfg.n_qubits) + 1j * rng.normal(size=2**cfg.n_qubits)
    s = StateVector(cfg.n_qubits, proj @ v).normalized()
    for method in ("dense", "kernel"):
        out = apply_ite(s, plan, 3.0, method=method)
        assert np.linalg.norm(out.amps - proj @ out.amps) < 1e-10


@pytest.mark.parametrize("l_ks", [2, 3])
def test_second_order_error_ratio(l_ks):
    terms = build_model(LatticeConfig(l_ks))
    ratio = trotter_error_diag(terms, 0.02) / trotter_error_diag(terms, 0.01)
    assert 6 <= ratio <= 10


def test_error_vanishes_without_hopping():
    t = build_model(LatticeConfig(3, mu_over_g=0.3))
    diag_only = HamiltonianTerms((), (), t.h_d, t.constant_offset, t.n_qubits)
    assert trotter_error_diag(diag_only, 0.1) < 1e-12
    assert trotter_error_diag(t, 0.0) == 0.0


def test_low_temperature_reaches_ground_state():
    cfg = LatticeConfig(2)
    sol = solve(cfg)
    gs = ground_state(sol)
    plan = trotter_sequence(build_model(cfg), 0.01)
    for bits in ("011", "100"):
        out = apply_ite(_physical_start(cfg, bits), plan, 14.0)
        assert abs(np.vdot(gs, out.amps)) ** 2 >= 0.999
    # '1+1' is itself an excited eigenstate orthogonal to the ground state
    s = _physical_start(cfg, "101")
    out = apply_ite(s, plan, 14.0)
    assert abs(np.vdot(gs, out.amps)) < 1e-12
    assert abs(np.vdot(s.amps, out.amps)) == pytest.approx(1.0)


def test_propagator_cached_and_size_limited():
    plan = trotter_sequence(build_model(LatticeConfig(2)), 0.01)
    assert propagator(plan, 1.0) is propagator(plan, 1.0)
    big = trotter_sequence(build_model(LatticeConfig(7)), 0.01)
    with pytest.raises(ValueError):
        propagator(big, 1.0)


def test_commutator_diagnostic_l2():
    norms = commutator_norms(build_model(LatticeConfig(2)))
    assert norms and all(v >= 0 for v in norms.values())
    assert norms["ddd"] == 0.0
