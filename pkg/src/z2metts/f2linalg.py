"""Dense linear algebra over GF(2) with bit-packed rows.

Each row is stored as a Python int; bit ``j`` holds column ``j``.  Row
reduction is then a sequence of word-level XORs.
"""

from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np


class BinMatrix:
    """Immutable binary matrix with bit-packed rows."""

    __slots__ = ("rows", "n_rows", "n_cols")

    def __init__(self, rows: Sequence[int], n_cols: int):
        mask = (1 << n_cols) - 1
        self.rows = tuple(int(r) & mask for r in rows)
        self.n_rows = len(self.rows)
        self.n_cols = n_cols

    @classmethod
    def from_array(cls, arr) -> "BinMatrix":
        a = np.asarray(arr, dtype=np.int64) & 1
        if a.ndim != 2:
            raise ValueError("expected a 2-d array")
        n_rows, n_cols = a.shape
        rows = []
        for i in range(n_rows):
            r = 0
            for j in np.flatnonzero(a[i]):
                r |= 1 << int(j)
            rows.append(r)
        return cls(rows, n_cols)

    @classmethod
    def zeros(cls, n_rows: int, n_cols: int) -> "BinMatrix":
        return cls([0] * n_rows, n_cols)

    @classmethod
    def identity(cls, n: int) -> "BinMatrix":
        return cls([1 << i for i in range(n)], n)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.n_rows, self.n_cols)

    def __getitem__(self, ij: tuple[int, int]) -> int:
        i, j = ij
        return (self.rows[i] >> j) & 1

    def __eq__(self, other) -> bool:
        if not isinstance(other, BinMatrix):
            return NotImplemented
        return self.shape == other.shape and self.rows == other.rows

    def __hash__(self):
        return hash((self.rows, self.n_cols))

    def __add__(self, other: "BinMatrix") -> "BinMatrix":
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        return BinMatrix([a ^ b for a, b in zip(self.rows, other.rows)], self.n_cols)

    __xor__ = __add__

    def __matmul__(self, other: "BinMatrix") -> "BinMatrix":
        return multiply(self, other)

    def __repr__(self):
        return f"BinMatrix({self.to_array().tolist()})"

    def to_array(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        for i, r in enumerate(self.rows):
            for j in range(self.n_cols):
                out[i, j] = (r >> j) & 1
        return out

    def transpose(self) -> "BinMatrix":
        cols = []
        for j in range(self.n_cols):
            c = 0
            for i, r in enumerate(self.rows):
                if (r >> j) & 1:
                    c |= 1 << i
            cols.append(c)
        return BinMatrix(cols, self.n_rows)

    @property
    def T(self) -> "BinMatrix":
        return self.transpose()

    def is_symmetric(self) -> bool:
        return self.n_rows == self.n_cols and self == self.transpose()


def rank_of_rows(rows: Iterable[int]) -> int:
    """GF(2) rank of a collection of packed rows."""
    # xor basis keyed by leading bit
    basis: dict[int, int] = {}
    for r in rows:
        while r:
            top = r.bit_length() - 1
            if top in basis:
                r ^= basis[top]
            else:
                basis[top] = r
                break
    return len(basis)


def rank(m: BinMatrix) -> int:
    """Dimension of the row space of ``m``."""
    return rank_of_rows(m.rows)


def multiply(a: BinMatrix, b: BinMatrix) -> BinMatrix:
    """Matrix product modulo 2."""
    if a.n_cols != b.n_rows:
        raise ValueError(f"cannot multiply {a.shape} by {b.shape}")
    out = []
    for r in a.rows:
        acc = 0
        k = 0
        while r:
            if r & 1:
                acc ^= b.rows[k]
            r >>= 1
            k += 1
        out.append(acc)
    return BinMatrix(out, b.n_cols)


def symmetric_decompose(a: BinMatrix) -> tuple[BinMatrix, BinMatrix]:
    """Split a symmetric matrix as ``a + lam = m @ m.T`` over GF(2).

    ``lam`` is diagonal and ``m`` is lower-triangular with a unit diagonal.
    Columns of ``m`` are fixed one at a time from the left:
    ``m[i, j] = a[i, j] + sum_{k<j} m[i, k] m[j, k]`` for ``i > j``.
    """
    n = a.n_rows
    if a.n_cols != n:
        raise ValueError(f"expected a square matrix, got {a.shape}")
    if not a.is_symmetric():
        raise ValueError("matrix is not symmetric")
    m = [1 << i for i in range(n)]
    for j in range(n):
        below = (1 << j) - 1
        for i in range(j + 1, n):
            # m[i, k] m[j, k] summed over k < j is the parity of the row overlap
            s = (m[i] & m[j] & below).bit_count() & 1
            if a[i, j] ^ s:
                m[i] |= 1 << j
    lam = []
    for i in range(n):
        diag = (m[i].bit_count() & 1) ^ a[i, i]
        lam.append(diag << i)
    return BinMatrix(lam, n), BinMatrix(m, n)
