"""Second-order Trotterized imaginary-time evolution."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .model import HamiltonianTerms
from .pauli import PauliString
from .statevec import StateVector, apply_imag_pauli_exp, pauli_action

DENSE_PROPAGATOR_LIMIT = 12


@dataclass(frozen=True)
class TrotterPlan:
    """One step ``e^{-db H_e/4} e^{-db H_o/4} e^{-db H_D/4} e^{-db H_D/4} e^{-db H_o/4} e^{-db H_e/4}``.

    ``factors`` lists ``(coeff, string)`` in application order; each is
    applied as ``exp(-weight * delta_beta * coeff * P)`` with ``weight`` 1/4.
    A full step approximates ``exp(-delta_beta (H - mu N) / 2)``.
    """

    delta_beta: float
    factors: tuple[tuple[float, PauliString], ...]
    n_qubits: int
    weight: float = 0.25
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def steps_for(self, beta: float) -> tuple[int, float]:
        """Number of full steps and the length of a shortened final step."""
        if self.delta_beta <= 0 or beta <= 0:
            return 0, 0.0
        n = int(np.floor(beta / self.delta_beta + 1e-9))
        rest = beta - n * self.delta_beta
        if abs(rest) <= 1e-9 * max(beta, 1.0):
            rest = 0.0
        return n, rest

    def n_steps(self, beta: float) -> int:
        n, rest = self.steps_for(beta)
        return n + (1 if rest > 0 else 0)


def trotter_sequence(terms: HamiltonianTerms, delta_beta: float) -> TrotterPlan:
    if delta_beta < 0:
        raise ValueError("delta_beta must be non-negative")
    forward = list(terms.h_e) + list(terms.h_o) + list(terms.h_d)
    backward = list(terms.h_d) + list(terms.h_o) + list(terms.h_e)
    # a palindrome; which end acts first does not matter
    factors = tuple(forward + backward) if delta_beta > 0 else ()
    return TrotterPlan(delta_beta, factors, terms.n_qubits)


def _step_kernel(s: StateVector, plan: TrotterPlan, db: float) -> StateVector:
    dtau = plan.weight * db
    for coeff, p in plan.factors:
        s = apply_imag_pauli_exp(s, coeff, p, dtau)
    return s


def step_matrix(plan: TrotterPlan, db: float | None = None) -> np.ndarray:
    """Dense matrix of one Trotter step of length ``db`` (default ``delta_beta``)."""
    db = plan.delta_beta if db is None else db
    dim = 2**plan.n_qubits
    m = np.eye(dim, dtype=complex)
    dtau = plan.weight * db
    for coeff, p in plan.factors:
        theta = dtau * coeff
        if theta == 0.0:
            continue
        perm, phase = pauli_action(p)
        pm = np.empty_like(m)
        pm[perm] = phase[:, None] * m
        m = np.cosh(theta) * m - np.sinh(theta) * pm
    return m


def _matrix_power_normalized(m: np.ndarray, k: int) -> np.ndarray:
    """``m^k / scale`` by repeated squaring; the scale is irrelevant after normalizing states."""
    result = np.eye(m.shape[0], dtype=m.dtype)
    base = m.copy()
    while k:
        if k & 1:
            result = result @ base
            result /= np.linalg.norm(result, 2)
        k >>= 1
        if k:
            base = base @ base
            base /= np.linalg.norm(base, 2)
    return result


def propagator(plan: TrotterPlan, beta: float) -> np.ndarray:
    """Dense Trotterized ``e^{-beta (H - mu N)/2}`` up to a positive scale (cached)."""
    if plan.n_qubits > DENSE_PROPAGATOR_LIMIT:
        raise ValueError(f"{plan.n_qubits} qubits exceeds the dense propagator limit")
    key = round(float(beta), 12)
    cached = plan._cache.get(key)
    if cached is not None:
        return cached
    n, rest = plan.steps_for(beta)
    dim = 2**plan.n_qubits
    if n == 0 and rest == 0.0:
        out = np.eye(dim, dtype=complex)
    else:
        out = _matrix_power_normalized(step_matrix(plan), n)
        if rest > 0:
            out = step_matrix(plan, rest) @ out
        out /= np.linalg.norm(out, 2)
    plan._cache[key] = out
    return out


def apply_ite(s: StateVector, plan: TrotterPlan, beta: float, method: str = "auto") -> StateVector:
    """Normalized Trotterized METTS ``e^{-beta (H - mu N)/2}|s>``.

    ``method="kernel"`` applies each Pauli exponential to the state,
    normalizing once per step; ``"dense"`` uses a cached propagator matrix.
    """
    if method == "auto":
        method = "dense" if s.n_qubits <= DENSE_PROPAGATOR_LIMIT else "kernel"
    if method == "dense":
        return StateVector(s.n_qubits, propagator(plan, beta) @ s.amps).normalized()
    n, rest = plan.steps_for(beta)
    out = s.copy()
    for _ in range(n):
        out = _step_kernel(out, plan, plan.delta_beta).normalized()
    if rest > 0:
        out = _step_kernel(out, plan, rest).normalized()
    return out


def trotter_error_diag(terms: HamiltonianTerms, delta_beta: float, dense_limit: int = DENSE_PROPAGATOR_LIMIT) -> float:
    """Spectral-norm distance between one Trotter step and ``exp(-delta_beta (H - mu N)/2)``."""
    if terms.n_qubits > dense_limit:
        raise ValueError(f"{terms.n_qubits} qubits exceeds the dense limit {dense_limit}")
    if delta_beta == 0:
        return 0.0
    plan = trotter_sequence(terms, delta_beta)
    exact = expm(-0.5 * delta_beta * terms.to_matrix(with_offset=False))
    return float(np.linalg.norm(step_matrix(plan) - exact, 2))


def commutator_norms(terms: HamiltonianTerms) -> dict[str, float]:
    """Spectral norms of the nested commutators ``[H_a, [H_b, H_c]]`` (diagnostic)."""
    mats = {k: g.to_matrix(terms.n_qubits) if g.terms else None for k, g in terms.groups().items()}
    out = {}
    for a, ma in mats.items():
        for b, mb in mats.items():
            for c, mc in mats.items():
                if ma is None or mb is None or mc is None:
                    continue
                inner = mb @ mc - mc @ mb
                out[a + b + c] = float(np.linalg.norm(ma @ inner - inner @ ma, 2))
    return out
