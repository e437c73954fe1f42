"""Signed Pauli strings in symplectic form and Clifford gate conjugation.

Qubits are 0-indexed in the Python API.  In text, qubit 0 is the leftmost
character (``"-ZXI"`` is ``-Z_0 X_1``).

Circuit convention: gates listed first act on states first, so a circuit
``[g1, g2]`` is the unitary ``g2 @ g1`` and conjugation folds gates in
listed order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

_LITERALS = "IXZY"  # index = x + 2*z
_MINUS = ("-", "−")


class PhaseError(ValueError):
    """Raised when a Pauli product would carry an imaginary phase."""


@dataclass(frozen=True)
class PauliString:
    """``sign * P_0 (x) P_1 (x) ...`` with literal ``q`` given by (x_q, z_q).

    ``x`` and ``z`` are bitmasks, bit ``q`` for qubit ``q``.  ``sign`` is +1
    or -1.  Y is the Hermitian Y, not ``XZ``.
    """

    n_qubits: int
    x: int = 0
    z: int = 0
    sign: int = 1

    def __post_init__(self):
        if self.sign not in (1, -1):
            raise ValueError(f"sign must be +1 or -1, got {self.sign}")
        full = (1 << self.n_qubits) - 1
        if self.x & ~full or self.z & ~full:
            raise ValueError("bits set beyond n_qubits")

    @classmethod
    def identity(cls, n: int) -> "PauliString":
        return cls(n)

    @classmethod
    def parse(cls, text: str) -> "PauliString":
        s = text.strip()
        sign = 1
        if s and (s[0] == "+" or s[0] in _MINUS):
            sign = -1 if s[0] in _MINUS else 1
            s = s[1:]
        x = z = 0
        for q, ch in enumerate(s.upper()):
            if ch not in _LITERALS and ch != "_":
                raise ValueError(f"bad Pauli literal {ch!r} in {text!r}")
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
        return cls(len(s), x, z, sign)

    @classmethod
    def from_literals(cls, n: int, literals: dict[int, str], sign: int = 1) -> "PauliString":
        """Build from a sparse ``{qubit: 'X'|'Y'|'Z'}`` map."""
        x = z = 0
        for q, ch in literals.items():
            if not 0 <= q < n:
                raise IndexError(f"qubit {q} out of range for n={n}")
            if ch in "XY":
                x |= 1 << q
            if ch in "ZY":
                z |= 1 << q
        return cls(n, x, z, sign)

    def __str__(self):
        body = "".join(self.literal(q) for q in range(self.n_qubits))
        return ("-" if self.sign < 0 else "+") + body

    def literal(self, q: int) -> str:
        return _LITERALS[((self.x >> q) & 1) + 2 * ((self.z >> q) & 1)]

    @property
    def weight(self) -> int:
        return (self.x | self.z).bit_count()

    @property
    def is_diagonal(self) -> bool:
        return self.x == 0

    @property
    def is_identity(self) -> bool:
        return self.x == 0 and self.z == 0

    @property
    def n_y(self) -> int:
        return (self.x & self.z).bit_count()

    def unsigned(self) -> "PauliString":
        return PauliString(self.n_qubits, self.x, self.z, 1)

    def __neg__(self) -> "PauliString":
        return PauliString(self.n_qubits, self.x, self.z, -self.sign)

    def __mul__(self, other: "PauliString") -> "PauliString":
        return multiply(self, other)

    def to_matrix(self) -> np.ndarray:
        """Dense matrix, qubit 0 as the most significant tensor factor."""
        single = {
            "I": np.eye(2, dtype=complex),
            "X": np.array([[0, 1], [1, 0]], dtype=complex),
            "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
            "Z": np.array([[1, 0], [0, -1]], dtype=complex),
        }
        out = np.array([[self.sign]], dtype=complex)
        for q in range(self.n_qubits):
            out = np.kron(out, single[self.literal(q)])
        return out


def _check_sizes(p: PauliString, q: PauliString):
    if p.n_qubits != q.n_qubits:
        raise ValueError(f"size mismatch: {p.n_qubits} vs {q.n_qubits}")


def commutes(p: PauliString, q: PauliString) -> bool:
    """True iff the symplectic product of ``p`` and ``q`` vanishes."""
    _check_sizes(p, q)
    return ((p.x & q.z).bit_count() + (p.z & q.x).bit_count()) % 2 == 0


def _product_phase(p: PauliString, q: PauliString) -> int:
    """Power of i picked up by the literal-wise product ``p * q`` (mod 4)."""
    x1, z1, x2, z2 = p.x, p.z, q.x, q.z
    y1, xo1, zo1 = x1 & z1, x1 & ~z1, z1 & ~x1
    y2, xo2, zo2 = x2 & z2, x2 & ~z2, z2 & ~x2
    # YZ = iX, YX = -iZ, XY = iZ, XZ = -iY, ZX = iY, ZY = -iX
    plus = (y1 & zo2) | (xo1 & y2) | (zo1 & xo2)
    minus = (y1 & xo2) | (xo1 & zo2) | (zo1 & y2)
    return (plus.bit_count() - minus.bit_count()) % 4


def multiply(p: PauliString, q: PauliString) -> PauliString:
    """Operator product ``p @ q``; raises :class:`PhaseError` if it is not Hermitian."""
    _check_sizes(p, q)
    ph = _product_phase(p, q)
    if ph % 2:
        raise PhaseError(f"product of {p} and {q} has an imaginary phase")
    sign = p.sign * q.sign * (-1 if ph == 2 else 1)
    return PauliString(p.n_qubits, p.x ^ q.x, p.z ^ q.z, sign)


@dataclass(frozen=True)
class CliffordGate:
    """One of H(q), S(q), X(q), CNOT(control, target)."""

    kind: str
    qubits: tuple[int, ...]

    def __post_init__(self):
        if self.kind not in ("H", "S", "X", "CNOT"):
            raise ValueError(f"unknown gate {self.kind!r}")
        need = 2 if self.kind == "CNOT" else 1
        if len(self.qubits) != need:
            raise ValueError(f"{self.kind} takes {need} qubit(s)")
        if need == 2 and self.qubits[0] == self.qubits[1]:
            raise ValueError("CNOT control and target must differ")

    def __str__(self):
        # text form is 1-indexed
        return " ".join([self.kind, *(str(q + 1) for q in self.qubits)])

    @classmethod
    def parse(cls, line: str) -> "CliffordGate":
        parts = line.split()
        kind = parts[0].upper()
        if kind == "CX":
            kind = "CNOT"
        return cls(kind, tuple(int(p) - 1 for p in parts[1:]))


def H(q: int) -> CliffordGate:
    return CliffordGate("H", (q,))


def S(q: int) -> CliffordGate:
    return CliffordGate("S", (q,))


def X(q: int) -> CliffordGate:
    return CliffordGate("X", (q,))


def CNOT(c: int, t: int) -> CliffordGate:
    return CliffordGate("CNOT", (c, t))


def conjugate_by_gate(p: PauliString, g: CliffordGate) -> PauliString:
    """Return ``g p g^dagger``."""
    if max(g.qubits) >= p.n_qubits:
        raise IndexError(f"{g} out of range for {p.n_qubits} qubits")
    x, z, sign = p.x, p.z, p.sign
    if g.kind == "CNOT":
        c, t = g.qubits
        xc, zc = (x >> c) & 1, (z >> c) & 1
        xt, zt = (x >> t) & 1, (z >> t) & 1
        if xc & zt & (xt ^ zc ^ 1):
            sign = -sign
        x ^= xc << t
        z ^= zt << c
        return PauliString(p.n_qubits, x, z, sign)
    (q,) = g.qubits
    xq, zq = (x >> q) & 1, (z >> q) & 1
    if g.kind == "H":
        if xq & zq:
            sign = -sign
        x = (x & ~(1 << q)) | (zq << q)
        z = (z & ~(1 << q)) | (xq << q)
    elif g.kind == "S":
        if xq & zq:
            sign = -sign
        z ^= xq << q
    else:  # X
        if zq:
            sign = -sign
    return PauliString(p.n_qubits, x, z, sign)


def _inverse_gates(g: CliffordGate) -> list[CliffordGate]:
    return [g, g, g] if g.kind == "S" else [g]


@dataclass(frozen=True)
class CliffordCircuit:
    """Ordered gate list on ``n_qubits`` qubits (first gate acts first)."""

    n_qubits: int
    gates: tuple[CliffordGate, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.qubits) >= self.n_qubits or min(g.qubits) < 0:
                raise IndexError(f"{g} out of range for {self.n_qubits} qubits")

    def __len__(self):
        return len(self.gates)

    def __iter__(self):
        return iter(self.gates)

    def then(self, other: "CliffordCircuit | Iterable[CliffordGate]") -> "CliffordCircuit":
        """Circuit that runs ``self`` and afterwards ``other``."""
        gates = other.gates if isinstance(other, CliffordCircuit) else tuple(other)
        return CliffordCircuit(self.n_qubits, self.gates + tuple(gates))

    def inverse(self) -> "CliffordCircuit":
        out: list[CliffordGate] = []
        for g in reversed(self.gates):
            out.extend(_inverse_gates(g))
        return CliffordCircuit(self.n_qubits, out)

    def conjugate(self, p: PauliString) -> PauliString:
        """``U p U^dagger`` for the circuit unitary ``U``."""
        for g in self.gates:
            p = conjugate_by_gate(p, g)
        return p

    def depth(self) -> int:
        layer = [0] * self.n_qubits
        for g in self.gates:
            d = max(layer[q] for q in g.qubits) + 1
            for q in g.qubits:
                layer[q] = d
        return max(layer, default=0)

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for g in self.gates:
            out[g.kind] = out.get(g.kind, 0) + 1
        return out

    def to_text(self) -> str:
        return "".join(f"{g}\n" for g in self.gates)

    @classmethod
    def from_text(cls, n_qubits: int, text: str) -> "CliffordCircuit":
        gates = []
        for line in text.splitlines():
            line = line.split("#", 1)[0].strip()
            if line:
                gates.append(CliffordGate.parse(line))
        return cls(n_qubits, gates)


def conjugate_all(circuit: CliffordCircuit, ps: Sequence[PauliString]) -> list[PauliString]:
    return [circuit.conjugate(p) for p in ps]
