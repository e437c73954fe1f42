"""Stabilizer groups: validation, canonical form, code dimension, overlaps."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from .f2linalg import BinMatrix, symmetric_decompose
from .pauli import (
    CNOT,
    CliffordCircuit,
    CliffordGate,
    H,
    PauliString,
    S,
    X,
    commutes,
    conjugate_by_gate,
    multiply,
)


class TableauError(ValueError):
    """Invalid set of stabilizer generators."""


def _symplectic_key(p: PauliString) -> int:
    return p.x | (p.z << p.n_qubits)


def _reduce(ps: Sequence[PauliString]) -> tuple[list[PauliString], PauliString | None]:
    """Row-reduce signed generators.

    Returns the independent reduced rows, and the first dependent
    combination found (a signed identity), if any.
    """
    basis: dict[int, PauliString] = {}
    for p in ps:
        cur = p
        while True:
            key = _symplectic_key(cur)
            if key == 0:
                return list(basis.values()), cur
            top = key.bit_length() - 1
            if top not in basis:
                basis[top] = cur
                break
            cur = multiply(cur, basis[top])
    return list(basis.values()), None


@dataclass(frozen=True)
class StabilizerTableau:
    """Independent, mutually commuting signed Pauli generators."""

    n_qubits: int
    generators: tuple[PauliString, ...]

    @property
    def n_stabilizers(self) -> int:
        return len(self.generators)

    def x_block(self) -> BinMatrix:
        return BinMatrix([g.x for g in self.generators], self.n_qubits)

    def z_block(self) -> BinMatrix:
        return BinMatrix([g.z for g in self.generators], self.n_qubits)

    def contains(self, p: PauliString) -> bool:
        """Membership of the signed string ``p`` in the generated group."""
        return group_sign(self.generators, p) == p.sign

    def to_text(self) -> str:
        return "".join(f"{g}\n" for g in self.generators)


def from_generators(ps: Iterable[PauliString], n_qubits: int | None = None) -> StabilizerTableau:
    """Validate generators and wrap them in a tableau.

    An empty list is accepted when ``n_qubits`` is given (the trivial group).
    """
    ps = tuple(ps)
    if not ps:
        if n_qubits is None:
            raise TableauError("empty generator list needs an explicit n_qubits")
        return StabilizerTableau(n_qubits, ())
    n = ps[0].n_qubits
    if n_qubits is not None and n != n_qubits:
        raise TableauError(f"generators act on {n} qubits, expected {n_qubits}")
    if any(p.n_qubits != n for p in ps):
        raise TableauError("generators have differing qubit counts")
    for i, p in enumerate(ps):
        for q in ps[i + 1:]:
            if not commutes(p, q):
                raise TableauError(f"not abelian: {p} and {q} anticommute")
    _, dependent = _reduce(ps)
    if dependent is not None:
        if dependent.sign < 0:
            raise TableauError("-I in group: generators multiply to -I")
        raise TableauError("dependent generators")
    return StabilizerTableau(n, ps)


def group_sign(gens: Sequence[PauliString], p: PauliString) -> int | None:
    """Sign with which the unsigned string of ``p`` lies in ``<gens>``, or None."""
    rows, _ = _reduce(gens)
    basis = {_symplectic_key(r).bit_length() - 1: r for r in rows}
    cur = p.unsigned()
    acc = PauliString.identity(p.n_qubits)
    while True:
        key = _symplectic_key(cur)
        if key == 0:
            return acc.sign
        top = key.bit_length() - 1
        if top not in basis:
            return None
        cur = multiply(cur, basis[top])
        acc = multiply(acc, basis[top])


def parse_stabilizer_text(text: str) -> list[PauliString]:
    """One Pauli string per line; '#' starts a comment; blank lines skipped."""
    out = []
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            out.append(PauliString.parse(line))
    return out


def load_stabilizer_file(path: str | Path, n_qubits: int | None = None) -> StabilizerTableau:
    return from_generators(parse_stabilizer_text(Path(path).read_text()), n_qubits)


class _Work:
    """Generators being driven to canonical form, with the emitted gates."""

    def __init__(self, gens: Sequence[PauliString], n: int):
        self.rows = list(gens)
        self.n = n
        self.gates: list[CliffordGate] = []

    def apply(self, g: CliffordGate):
        self.gates.append(g)
        self.rows = [conjugate_by_gate(p, g) for p in self.rows]

    def xbit(self, i: int, q: int) -> int:
        return (self.rows[i].x >> q) & 1

    def zbit(self, i: int, q: int) -> int:
        return (self.rows[i].z >> q) & 1



def _hadamards_for_full_x_rank(w: _Work):
    """Step 1: Hadamards so the X block reaches rank S.

    Row-reduce the X block (pivot set P).  The remaining pure-Z rows have
    full rank on the columns outside P (commutation forbids otherwise), so
    Hadamards on their Z pivots, chosen outside P, complete the X rank.
    """
    s = len(w.rows)
    rows = [(p.x, p.z) for p in w.rows]
    pivots: list[int] = []
    r = 0
    for q in range(w.n):
        piv = next((i for i in range(r, s) if (rows[i][0] >> q) & 1), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(s):
            if i != r and (rows[i][0] >> q) & 1:
                rows[i] = (rows[i][0] ^ rows[r][0], rows[i][1] ^ rows[r][1])
        pivots.append(q)
        r += 1
    lower = [z for x, z in rows[r:]]
    taken = set(pivots)
    for q in range(w.n):
        if q in taken:
            continue
        piv = next((i for i, z in enumerate(lower) if (z >> q) & 1), None)
        if piv is None:
            continue
        zr = lower.pop(piv)
        lower = [z ^ zr if (z >> q) & 1 else z for z in lower]
        w.apply(H(q))
    if lower:
        raise AssertionError("X block could not be brought to full rank")


def _eliminate_x_to_identity(w: _Work):
    """Step 2: CNOTs (column operations only) bringing the X block to (I 0).

    Row ``i`` is made the unit vector ``e_i``: pick a pivot column ``q >= i``
    in row ``i``, move it onto column ``i`` and clear the rest of the row.
    Earlier rows stay untouched because their columns other than their own
    pivot are zero.
    """
    for i in range(len(w.rows)):
        q = next((q for q in range(i, w.n) if w.xbit(i, q)), None)
        if q is None:
            raise AssertionError("X block lost rank during elimination")
        if q != i and not w.xbit(i, i):
            w.apply(CNOT(q, i))
        for k in range(w.n):
            if k != i and w.xbit(i, k):
                w.apply(CNOT(i, k))


def canonical_form(t: StabilizerTableau) -> tuple[CliffordCircuit, list[int]]:
    """Clifford circuit taking generator ``j`` to ``+-Z_j``.

    Returns ``(circuit, sign_fixes)``.  After ``circuit`` generator ``j``
    is ``+-Z_j``; appending X on every qubit in ``sign_fixes``
    makes them all ``+Z_j``.  ``circuit`` contains only H, S and CNOT.
    """
    n, s = t.n_qubits, t.n_stabilizers
    w = _Work(t.generators, n)
    if s == 0:
        return CliffordCircuit(n), []
    if all(p.x == 0 and p.z == 1 << i for i, p in enumerate(t.generators)):
        return CliffordCircuit(n), [i for i, p in enumerate(t.generators) if p.sign < 0]

    _hadamards_for_full_x_rank(w)            # 1
    _eliminate_x_to_identity(w)              # 2: (I 0 | C D)
    for q in range(s, n):                    # 3: (I D | C 0)
        w.apply(H(q))
    for i in range(s):                       # 4: (I 0 | C 0)
        for k in range(s, n):
            if w.xbit(i, k):
                w.apply(CNOT(i, k))

    c = BinMatrix([p.z & ((1 << s) - 1) for p in w.rows], s)
    lam, m = symmetric_decompose(c)
    for i in range(s):                       # 5: C -> M M^T
        if lam[i, i]:
            w.apply(S(i))
    for j in range(s):                       # 6: (M 0 | M 0)
        for k in range(j + 1, s):
            if m[k, j]:
                w.apply(CNOT(k, j))
    for i in range(s):                       # 7: (M 0 | 0)
        w.apply(S(i))
    for i in range(s):                       # 8: (I 0 | 0)
        for j in range(i):
            if w.xbit(i, j):
                w.apply(CNOT(i, j))
    for i in range(s):                       # 9: (0 | I 0)
        w.apply(H(i))

    fixes = []
    for i, p in enumerate(w.rows):
        if p.x != 0 or p.z != 1 << i:
            raise AssertionError(f"canonicalization failed at row {i}: {p}")
        if p.sign < 0:
            fixes.append(i)
    return CliffordCircuit(n, w.gates), fixes


def canonical_circuit(t: StabilizerTableau) -> CliffordCircuit:
    """Canonicalizing circuit with the X sign corrections appended."""
    circ, fixes = canonical_form(t)
    return circ.then(X(q) for q in fixes)


def is_canonical_image(t: StabilizerTableau, circuit: CliffordCircuit) -> bool:
    """True iff conjugating the generators of ``t`` by ``circuit`` gives exactly ``{+Z_0..+Z_{S-1}}``."""
    n, s = t.n_qubits, t.n_stabilizers
    images = {circuit.conjugate(g) for g in t.generators}
    return images == {PauliString.from_literals(n, {j: "Z"}) for j in range(s)}


def codespace_dimension(t: StabilizerTableau) -> int:
    return 2 ** (t.n_qubits - t.n_stabilizers)


def state_overlap_magnitude(a: StabilizerTableau, b: StabilizerTableau) -> float:
    """``|<a|b>|`` for two stabilizer states (S = N on both)."""
    for t in (a, b):
        if t.n_stabilizers != t.n_qubits:
            raise TableauError("overlap needs complete stabilizer states (S == N)")
    if a.n_qubits != b.n_qubits:
        raise TableauError("qubit counts differ")
    n = a.n_qubits
    to_zero = canonical_circuit(a)
    rows = [to_zero.conjugate(g) for g in b.generators]
    # row-reduce the X block of b; leftover rows are pure Z-type
    r = 0
    for q in range(n):
        piv = next((i for i in range(r, n) if (rows[i].x >> q) & 1), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        for i in range(n):
            if i != r and (rows[i].x >> q) & 1:
                rows[i] = multiply(rows[i], rows[r])
        r += 1
    # every +Z-type string stabilizes |0...0>; a -Z one annihilates it
    if any(p.sign < 0 for p in rows[r:]):
        return 0.0
    return math.pow(2.0, -r / 2)
