"""Gauge-invariant, mutually unbiased measurement bases.

A basis is given by a Clifford circuit ``U``: its states are ``U^dagger |b>``
and measuring in it means running ``U`` and reading out computationally.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import LatticeConfig, QubitLayout, gauss_operators
from .pauli import CNOT, CliffordCircuit, H, PauliString, X
from .statevec import circuit_unitary
from .tableau import StabilizerTableau, canonical_form, from_generators

Z_PHYS = "Z_phys"
X_PHYS = "X_phys"


@dataclass(frozen=True)
class MeasurementBasis:
    tag: str
    circuit: CliffordCircuit

    @property
    def n_qubits(self) -> int:
        return self.circuit.n_qubits

    def states(self) -> np.ndarray:
        """Basis states as the columns of ``U^dagger``."""
        return circuit_unitary(self.circuit).conj().T


def _check_invariant(circuit: CliffordCircuit, gauss: Sequence[PauliString], what: str):
    for g in gauss:
        img = circuit.conjugate(g)
        if img != g:
            raise AssertionError(f"{what} maps {g} to {img}")


def v_circuit(cfg: LatticeConfig) -> CliffordCircuit:
    """Hadamards on sites 1..L-1, then CNOTs from each such site to both adjacent links."""
    lay = QubitLayout(cfg.l_ks)
    L = cfg.l_ks
    gates = [H(lay.site(m)) for m in range(1, L)]
    gates += [CNOT(lay.site(m), lay.link(m)) for m in range(1, L)]
    gates += [CNOT(lay.site(m + 1), lay.link(m)) for m in range(1, L - 1)]
    return CliffordCircuit(lay.n_qubits, gates)


def w_circuit(cfg: LatticeConfig) -> CliffordCircuit:
    """``W = V^dagger H_{f_L} (prod H_links) V``."""
    lay = QubitLayout(cfg.l_ks)
    v = v_circuit(cfg)
    mid = [H(q) for q in lay.link_qubits] + [H(lay.site(cfg.l_ks))]
    return v.then(mid).then(v.inverse())


def build_1p1d(cfg: LatticeConfig) -> tuple[MeasurementBasis, MeasurementBasis]:
    """Physical-Z and physical-X bases for the open 1+1-d chain."""
    lay = QubitLayout(cfg.l_ks)
    gauss = gauss_operators(cfg)
    v = v_circuit(cfg)
    for n, g in enumerate(gauss, start=1):
        expect = PauliString.from_literals(lay.n_qubits, {lay.site(n): "X"}, sign=(-1) ** n)
        if v.conjugate(g) != expect:
            raise AssertionError(f"V maps G_{n} to {v.conjugate(g)}, expected {expect}")
    w = w_circuit(cfg)
    _check_invariant(w, gauss, "W")
    u_h = CliffordCircuit(lay.n_qubits, [H(q) for q in lay.link_qubits])
    z_basis = MeasurementBasis(Z_PHYS, u_h)
    x_basis = MeasurementBasis(X_PHYS, w.then(u_h))
    return z_basis, x_basis


def build_general(gauss: StabilizerTableau | Sequence[PauliString], n_qubits: int | None = None):
    """MUPB pair for an arbitrary independent commuting Gauss set.

    The canonicalizing circuit (with sign fixes) maps the gauge group onto
    ``<+Z_0..+Z_{S-1}>``; the X basis adds Hadamards on the free qubits.
    """
    if not isinstance(gauss, StabilizerTableau):
        gauss = from_generators(gauss, n_qubits)
    n = gauss.n_qubits if n_qubits is None else n_qubits
    if n != gauss.n_qubits:
        raise ValueError("n_qubits disagrees with the tableau")
    circ, fixes = canonical_form(gauss)
    z_circ = circ.then(X(q) for q in fixes)
    x_circ = z_circ.then(H(q) for q in range(gauss.n_stabilizers, n))
    return MeasurementBasis(Z_PHYS, z_circ), MeasurementBasis(X_PHYS, x_circ)


@dataclass
class MupbReport:
    passed: bool
    d_phys: int
    eigen_residual: float = 0.0        # worst ||G b - g b|| over basis states
    overlap_deviation: float = 0.0     # worst | |<i|j>|^2 - 1/d_phys |
    overlap_spread: float = 0.0        # max - min of physical cross overlaps
    sector_counts: tuple[int, int] = (0, 0)
    failures: list[str] = field(default_factory=list)

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (
            f"{status} d_phys={self.d_phys} counts={self.sector_counts} "
            f"eig_res={self.eigen_residual:.2e} overlap_dev={self.overlap_deviation:.2e} "
            f"spread={self.overlap_spread:.2e}"
            + ("" if self.passed else " | " + "; ".join(self.failures))
        )


def _gauss_pattern(states: np.ndarray, gauss: Sequence[PauliString], tol: float):
    """Eigenvalue of each G on each basis state, and the worst residual."""
    worst = 0.0
    ok = np.ones(states.shape[1], dtype=bool)
    phys = np.ones(states.shape[1], dtype=bool)
    for g in gauss:
        gs = g.to_matrix() @ states
        ev = np.einsum("ij,ij->j", states.conj(), gs).real
        resid = np.linalg.norm(gs - states * ev, axis=0)
        worst = max(worst, float(resid.max(initial=0.0)))
        ok &= (resid <= tol) & (np.abs(np.abs(ev) - 1.0) <= tol)
        phys &= np.abs(ev - 1.0) <= tol
    return ok, phys, worst


def physical_states(basis: MeasurementBasis, gauss: Sequence[PauliString], tol: float = 1e-10) -> np.ndarray:
    """Columns of the basis that lie in the +1 sector of every Gauss operator."""
    states = basis.states()
    _, phys, _ = _gauss_pattern(states, gauss, tol)
    return states[:, phys]


def verify_mupb(
    z_basis: MeasurementBasis,
    x_basis: MeasurementBasis,
    gauss: Sequence[PauliString],
    tol: float = 1e-10,
    n_qubits: int | None = None,
) -> MupbReport:
    """Check both Gauss-eigenstate and physical-sector unbiasedness conditions."""
    n = z_basis.n_qubits if n_qubits is None else n_qubits
    gauss = list(gauss)
    n_indep = from_generators(gauss, n).n_stabilizers if gauss else 0
    d_phys = 2 ** (n - n_indep)
    failures = []
    phys_sets = []
    worst_res = 0.0
    counts = []
    for basis in (z_basis, x_basis):
        states = basis.states()
        ok, phys, res = _gauss_pattern(states, gauss, tol)
        worst_res = max(worst_res, res)
        if not ok.all():
            failures.append(f"{basis.tag}: {int((~ok).sum())} states are not Gauss eigenstates")
        counts.append(int(phys.sum()))
        if phys.sum() != d_phys:
            failures.append(f"{basis.tag}: {int(phys.sum())} physical states, expected {d_phys}")
        phys_sets.append(states[:, phys])
    dev = spread = 0.0
    zs, xs = phys_sets
    if zs.shape[1] and xs.shape[1]:
        ov = np.abs(zs.conj().T @ xs) ** 2
        dev = float(np.abs(ov - 1.0 / d_phys).max())
        spread = float(ov.max() - ov.min())
        if dev > tol:
            failures.append(f"cross overlaps deviate from 1/{d_phys} by {dev:.3e}")
    else:
        failures.append("no physical states to compare")
    return MupbReport(not failures, d_phys, worst_res, dev, spread, tuple(counts), failures)
