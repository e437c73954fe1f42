"""Exact physical-sector thermodynamics by dense diagonalization."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import (
    DENSE_LIMIT,
    LatticeConfig,
    Observable,
    build_model,
    physical_bitstrings,
    physical_projector,
)
from .mupb import MeasurementBasis, build_1p1d
from .statevec import PauliSum, apply_circuit, index_to_bits, init_basis_state, pauli_action

FULL_MATRIX_LIMIT = 12


def _apply_sum(terms: PauliSum, vecs: np.ndarray) -> np.ndarray:
    """Apply a Pauli sum to the columns of ``vecs`` without forming its matrix."""
    out = terms.constant * vecs
    for c, p in terms.terms:
        perm, phase = pauli_action(p)
        pv = np.empty_like(vecs)
        pv[perm] = phase[:, None] * vecs
        out = out + c * pv
    return out


def _restrict(op: PauliSum, q: np.ndarray) -> np.ndarray:
    m = q.conj().T @ _apply_sum(op, q)
    return 0.5 * (m + m.conj().T)


@dataclass
class ExactSolution:
    """Spectrum of ``H - mu N`` on the physical sector.

    ``basis`` holds the physical-Z basis states as columns (an isometry into
    the full space); ``evals``/``evecs`` diagonalize the restricted operator.
    """

    cfg: LatticeConfig
    labels: list[str]
    basis: np.ndarray
    evals: np.ndarray
    evecs: np.ndarray

    @property
    def d_phys(self) -> int:
        return self.basis.shape[1]

    def _weights(self, beta: float) -> np.ndarray:
        shifted = -beta * (self.evals - self.evals.min())
        return np.exp(shifted)

    def partition_function(self, beta: float) -> float:
        """``Tr_phys e^{-beta (H - mu N)}``."""
        return float(np.exp(-beta * self.evals).sum())

    def density_matrix(self, beta: float) -> np.ndarray:
        """Restricted Gibbs state in the physical-Z coordinates."""
        w = self._weights(beta)
        rho = (self.evecs * (w / w.sum())) @ self.evecs.conj().T
        return rho

    def imag_propagator(self, beta: float) -> np.ndarray:
        """Restricted ``e^{-beta (H - mu N)/2}``, scaled by ``e^{beta E_min/2}``."""
        w = np.exp(-0.5 * beta * (self.evals - self.evals.min()))
        return (self.evecs * w) @ self.evecs.conj().T

    def restrict(self, op: PauliSum) -> np.ndarray:
        return _restrict(op, self.basis)

    def coords(self, states: np.ndarray) -> np.ndarray:
        """Physical-Z coordinates of full-space physical states (columns)."""
        return self.basis.conj().T @ states


def solve(cfg: LatticeConfig, dense_limit: int = DENSE_LIMIT) -> ExactSolution:
    if cfg.n_qubits > dense_limit:
        raise ValueError(f"{cfg.n_qubits} qubits exceeds the dense limit {dense_limit}")
    terms = build_model(cfg)
    z_basis, _ = build_1p1d(cfg)
    labels = physical_bitstrings(cfg)
    inv = z_basis.circuit.inverse()
    cols = [apply_circuit(init_basis_state(cfg.n_qubits, b), inv).amps for b in labels]
    q = np.stack(cols, axis=1)
    k = _restrict(terms.grand_potential(), q)
    evals, evecs = np.linalg.eigh(k)
    return ExactSolution(cfg, labels, q, evals, evecs)


def physical_members(sol: ExactSolution, basis: MeasurementBasis) -> tuple[list[str], np.ndarray]:
    """Bitstrings of the physical members of ``basis`` and their physical-Z coordinates."""
    states = basis.states()
    c = sol.coords(states)
    inside = np.flatnonzero(np.linalg.norm(c, axis=0) > 1 - 1e-8)
    bits = [index_to_bits(int(k), sol.cfg.n_qubits) for k in inside]
    return bits, c[:, inside]


def stationary_distribution(sol: ExactSolution, beta: float, basis: MeasurementBasis | None = None) -> dict[str, float]:
    """``Prob_i = <i|e^{-beta (H - mu N)}|i> / Z`` keyed by basis bitstring.

    Defaults to the physical-Z basis.
    """
    if basis is None:
        basis = build_1p1d(sol.cfg)[0]
    bits, c = physical_members(sol, basis)
    rho = sol.density_matrix(beta)
    probs = np.einsum("ij,ik,kj->j", c.conj(), rho, c).real
    probs = probs / probs.sum()
    return dict(zip(bits, probs.tolist()))


def thermal_expectation(sol: ExactSolution, beta: float, observable: Observable | PauliSum) -> float:
    op = observable.total() if isinstance(observable, Observable) else observable
    rho = sol.density_matrix(beta)
    return float(np.trace(rho @ sol.restrict(op)).real)


def gibbs_variance(sol: ExactSolution, beta: float, observable: Observable | PauliSum) -> float:
    op = observable.total() if isinstance(observable, Observable) else observable
    rho = sol.density_matrix(beta)
    o = sol.restrict(op)
    mean = np.trace(rho @ o).real
    return float(np.trace(rho @ o @ o).real - mean**2)


def thermal_expectation_fullspace(cfg: LatticeConfig, beta: float, observable: Observable | PauliSum) -> float:
    """Independent route: full-space eigendecomposition weighted by the Gauss projector."""
    if cfg.n_qubits > FULL_MATRIX_LIMIT:
        raise ValueError("full-space route limited to 12 qubits")
    op = observable.total() if isinstance(observable, Observable) else observable
    k = build_model(cfg).to_matrix()
    evals, evecs = np.linalg.eigh(k)
    proj = physical_projector(cfg)
    w = np.exp(-beta * (evals - evals.min()))
    gibbs = (evecs * w) @ evecs.conj().T
    o = op.to_matrix(cfg.n_qubits)
    num = np.trace(proj @ o @ gibbs).real
    den = np.trace(proj @ gibbs).real
    return float(num / den)


def ground_state(sol: ExactSolution) -> np.ndarray:
    """Lowest eigenvector of the restricted operator, in full-space coordinates."""
    return sol.basis @ sol.evecs[:, 0]


def exact_metts(sol: ExactSolution, beta: float, start: np.ndarray) -> np.ndarray:
    """Normalized ``e^{-beta (H - mu N)/2}|start>`` for a full-space physical state."""
    c = sol.coords(start)
    out = sol.basis @ (sol.imag_propagator(beta) @ c)
    return out / np.linalg.norm(out)
