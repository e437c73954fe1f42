"""Dense statevector kernels.

Basis index convention: qubit 0 is the most significant bit, so the
bitstring ``"010"`` is index 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Sequence

import numpy as np

from .pauli import CliffordCircuit, CliffordGate, PauliString, commutes

_SQ2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class PauliSum:
    """``sum_i c_i P_i + constant``."""

    terms: tuple[tuple[float, PauliString], ...]
    constant: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple((float(c), p) for c, p in self.terms))

    @property
    def n_qubits(self) -> int:
        return self.terms[0][1].n_qubits

    def scaled(self, k: float) -> "PauliSum":
        return PauliSum(tuple((k * c, p) for c, p in self.terms), k * self.constant)

    def __add__(self, other: "PauliSum") -> "PauliSum":
        return PauliSum(self.terms + other.terms, self.constant + other.constant)

    def is_commuting(self) -> bool:
        ps = [p for _, p in self.terms]
        return all(commutes(a, b) for i, a in enumerate(ps) for b in ps[i + 1:])

    def is_diagonal(self) -> bool:
        return all(p.is_diagonal for _, p in self.terms)

    def to_matrix(self, n_qubits: int | None = None) -> np.ndarray:
        n = n_qubits if n_qubits is not None else self.n_qubits
        out = self.constant * np.eye(2**n, dtype=complex)
        for c, p in self.terms:
            out += c * p.to_matrix()
        return out


@dataclass
class StateVector:
    n_qubits: int
    amps: np.ndarray = field(repr=False)

    def __post_init__(self):
        self.amps = np.asarray(self.amps, dtype=complex)
        if self.amps.shape != (2**self.n_qubits,):
            raise ValueError(f"expected {2**self.n_qubits} amplitudes, got {self.amps.shape}")

    def copy(self) -> "StateVector":
        return StateVector(self.n_qubits, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def normalized(self) -> "StateVector":
        nrm = self.norm()
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero vector")
        return StateVector(self.n_qubits, self.amps / nrm)


def bits_to_index(bits: str | Sequence[int]) -> int:
    idx = 0
    for b in bits:
        idx = (idx << 1) | int(b)
    return idx


def index_to_bits(index: int, n: int) -> str:
    return format(index, f"0{n}b") if n else ""


def init_basis_state(n: int, bits: str | Sequence[int]) -> StateVector:
    if len(bits) != n:
        raise ValueError(f"bitstring of length {len(bits)} for {n} qubits")
    amps = np.zeros(2**n, dtype=complex)
    amps[bits_to_index(bits)] = 1.0
    return StateVector(n, amps)


def _apply_gate_inplace(t: np.ndarray, g: CliffordGate):
    """Apply a gate to an amplitude tensor of shape (2,)*n (+ batch axes)."""
    if g.kind == "CNOT":
        c, tq = g.qubits
        sl = [slice(None)] * t.ndim
        sl[c] = 1
        sub = t[tuple(sl)]
        axis = tq if tq < c else tq - 1
        sub[...] = np.flip(sub, axis=axis).copy()
        return
    (q,) = g.qubits
    lo = [slice(None)] * t.ndim
    hi = [slice(None)] * t.ndim
    lo[q], hi[q] = 0, 1
    lo, hi = tuple(lo), tuple(hi)
    if g.kind == "H":
        a, b = t[lo].copy(), t[hi].copy()
        t[lo] = (a + b) * _SQ2
        t[hi] = (a - b) * _SQ2
    elif g.kind == "S":
        t[hi] *= 1j
    else:  # X
        a = t[lo].copy()
        t[lo] = t[hi]
        t[hi] = a


def apply_circuit(s: StateVector, c: CliffordCircuit) -> StateVector:
    """Run the gates of ``c`` on ``s`` in listed order."""
    if c.n_qubits != s.n_qubits:
        raise ValueError(f"circuit on {c.n_qubits} qubits, state on {s.n_qubits}")
    t = s.amps.reshape((2,) * s.n_qubits).copy()
    for g in c.gates:
        _apply_gate_inplace(t, g)
    return StateVector(s.n_qubits, t.reshape(-1))


def circuit_unitary(c: CliffordCircuit) -> np.ndarray:
    """Dense unitary of ``c`` (columns are images of basis states)."""
    n = c.n_qubits
    dim = 2**n
    t = np.eye(dim, dtype=complex).reshape((2,) * n + (dim,))
    for g in c.gates:
        _apply_gate_inplace(t, g)
    return t.reshape(dim, dim)


class _Masks:
    """Per-size cache of index arrays used by Pauli actions."""

    _cache: dict[int, np.ndarray] = {}

    @classmethod
    def indices(cls, n: int) -> np.ndarray:
        idx = cls._cache.get(n)
        if idx is None:
            idx = np.arange(2**n, dtype=np.int64)
            cls._cache[n] = idx
        return idx


def _bitmask(p_bits: int, n: int) -> int:
    """Convert a qubit-indexed bitmask to the MSB-first basis-index mask."""
    out = 0
    for q in range(n):
        if (p_bits >> q) & 1:
            out |= 1 << (n - 1 - q)
    return out


def pauli_action(p: PauliString):
    """Return ``(perm, phase)`` with ``(P psi)[perm] = phase * psi`` elementwise."""
    n = p.n_qubits
    idx = _Masks.indices(n)
    xm = _bitmask(p.x, n)
    zm = _bitmask(p.z, n)
    # P|i> = sign * i^{nY} * (-1)^{|i & z|} |i ^ x>, Y = i X Z
    parity = np.bitwise_count(idx & zm) & 1
    phase = (p.sign * (1j) ** (p.n_y % 4)) * (1 - 2 * parity.astype(float))
    return idx ^ xm, phase


def apply_pauli(s: StateVector, p: PauliString) -> StateVector:
    perm, phase = pauli_action(p)
    out = np.empty_like(s.amps)
    out[perm] = phase * s.amps
    return StateVector(s.n_qubits, out)


def _apply_pauli_amps(amps: np.ndarray, perm: np.ndarray, phase: np.ndarray) -> np.ndarray:
    out = np.empty_like(amps)
    out[perm] = phase * amps
    return out


def apply_imag_pauli_exp(s: StateVector, coeff: float, p: PauliString, dtau: float) -> StateVector:
    """``exp(-dtau * coeff * P) |s>``, unnormalized."""
    theta = dtau * coeff
    if theta == 0.0:
        return s.copy()
    pa = apply_pauli(s, p).amps
    return StateVector(s.n_qubits, np.cosh(theta) * s.amps - np.sinh(theta) * pa)


def pauli_expectation(s: StateVector, p: PauliString) -> float:
    perm, phase = pauli_action(p)
    val = np.vdot(s.amps[perm], phase * s.amps)
    return float(val.real)


def _check_normalized(s: StateVector, tol: float = 1e-8):
    nrm = s.norm()
    if abs(nrm - 1.0) > tol:
        raise ValueError(f"state is not normalized (norm {nrm})")


def expectation(s: StateVector, terms: PauliSum) -> float:
    """``<s| sum c_i P_i |s> + constant`` for a normalized state."""
    _check_normalized(s)
    return terms.constant + sum(c * pauli_expectation(s, p) for c, p in terms.terms)


def measure_in_basis(
    s: StateVector,
    basis_circuit: CliffordCircuit,
    rng: np.random.Generator,
    unitary: np.ndarray | None = None,
):
    """Projective measurement in the basis ``{U^dagger |b>}``.

    Returns the sampled bitstring and the collapsed state ``U^dagger |b>``.
    ``unitary`` may carry a precomputed ``circuit_unitary(basis_circuit)``.
    """
    if unitary is None:
        rotated = apply_circuit(s, basis_circuit).amps
    else:
        rotated = unitary @ s.amps
    probs = np.abs(rotated) ** 2
    probs /= probs.sum()
    k = int(rng.choice(probs.size, p=probs))
    bits = index_to_bits(k, s.n_qubits)
    if unitary is None:
        collapsed = apply_circuit(init_basis_state(s.n_qubits, bits), basis_circuit.inverse())
    else:
        collapsed = StateVector(s.n_qubits, unitary[k].conj())
    return bits, collapsed


@lru_cache(maxsize=256)
def _diagonal_values(terms: PauliSum, n: int) -> np.ndarray:
    """Eigenvalue of a diagonal Pauli sum on every computational basis state."""
    idx = _Masks.indices(n)
    vals = np.full(2**n, terms.constant, dtype=float)
    for c, p in terms.terms:
        parity = np.bitwise_count(idx & _bitmask(p.z, n)) & 1
        vals += c * p.sign * (1 - 2 * parity.astype(float))
    return vals


def sample_pauli_group(s: StateVector, terms: PauliSum, rng: np.random.Generator) -> float:
    """One Born-rule eigenvalue sample of a commuting Pauli sum.

    Diagonal sums are read from a single computational-basis draw.  Otherwise
    each string is measured in turn with ``(I +- P)/2`` and the state is
    collapsed before the next string.
    """
    _check_normalized(s)
    if not terms.is_commuting():
        raise ValueError("terms do not mutually commute")
    if terms.is_diagonal():
        probs = np.abs(s.amps) ** 2
        probs /= probs.sum()
        k = int(rng.choice(probs.size, p=probs))
        return float(_diagonal_values(terms, s.n_qubits)[k])
    amps = s.amps.copy()
    seen: dict[tuple[int, int], int] = {}
    total = terms.constant
    for c, p in terms.terms:
        key = (p.x, p.z)
        if key in seen:
            outcome = seen[key] * p.sign
        else:
            perm, phase = pauli_action(p.unsigned())
            pamps = _apply_pauli_amps(amps, perm, phase)
            ev = float(np.vdot(amps, pamps).real)
            p_plus = min(max(0.5 * (1.0 + ev), 0.0), 1.0)
            unsigned_outcome = 1 if rng.random() < p_plus else -1
            amps = 0.5 * (amps + unsigned_outcome * pamps)
            amps /= np.linalg.norm(amps)
            seen[key] = unsigned_outcome
            outcome = unsigned_outcome * p.sign
        total += c * outcome
    return float(total)
