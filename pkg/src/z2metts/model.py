"""(1+1)-d Z2 gauge theory with staggered fermions, as qubits.

Qubits are interleaved ``f_1, g_12, f_2, g_23, ..., f_L``: site ``n``
(1-based) sits at index ``2(n-1)`` and link ``(n, n+1)`` at ``2(n-1)+1``.
Units: g = 1, so ``a_g`` is the lattice spacing and ``m_over_g``,
``mu_over_g`` are the mass and chemical potential.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pauli import PauliString
from .statevec import PauliSum

DENSE_LIMIT = 16

LINK_CHARS = {0: "+", 1: "-"}


@dataclass(frozen=True)
class LatticeConfig:
    l_ks: int
    a_g: float = 0.25
    m_over_g: float = 0.01
    mu_over_g: float = 0.0

    def __post_init__(self):
        if self.l_ks < 2:
            raise ValueError("l_ks must be at least 2")
        if self.a_g <= 0:
            raise ValueError("a_g must be positive")

    @property
    def n_qubits(self) -> int:
        return 2 * self.l_ks - 1

    @property
    def l_d(self) -> float:
        return self.l_ks / 2

    def with_mu(self, mu_over_g: float) -> "LatticeConfig":
        return LatticeConfig(self.l_ks, self.a_g, self.m_over_g, mu_over_g)


@dataclass(frozen=True)
class QubitLayout:
    l_ks: int

    @property
    def n_qubits(self) -> int:
        return 2 * self.l_ks - 1

    def site(self, n: int) -> int:
        """Qubit index of staggered site ``n`` (1-based)."""
        if not 1 <= n <= self.l_ks:
            raise IndexError(f"site {n} outside 1..{self.l_ks}")
        return 2 * (n - 1)

    def link(self, n: int) -> int:
        """Qubit index of link ``(n, n+1)``."""
        if not 1 <= n < self.l_ks:
            raise IndexError(f"link ({n},{n + 1}) outside the open chain")
        return 2 * (n - 1) + 1

    def is_link(self, q: int) -> bool:
        return q % 2 == 1

    @property
    def site_qubits(self) -> list[int]:
        return [self.site(n) for n in range(1, self.l_ks + 1)]

    @property
    def link_qubits(self) -> list[int]:
        return [self.link(n) for n in range(1, self.l_ks)]


@dataclass(frozen=True)
class HamiltonianTerms:
    """``H - mu N = H_e + H_o + H_D + constant_offset``."""

    h_e: tuple[tuple[float, PauliString], ...]
    h_o: tuple[tuple[float, PauliString], ...]
    h_d: tuple[tuple[float, PauliString], ...]
    constant_offset: float
    n_qubits: int

    def groups(self) -> dict[str, PauliSum]:
        return {"e": PauliSum(self.h_e), "o": PauliSum(self.h_o), "d": PauliSum(self.h_d)}

    def grand_potential(self, with_offset: bool = True) -> PauliSum:
        """``H - mu N`` as a Pauli sum."""
        return PauliSum(self.h_e + self.h_o + self.h_d, self.constant_offset if with_offset else 0.0)

    def to_matrix(self, with_offset: bool = True) -> np.ndarray:
        return self.grand_potential(with_offset).to_matrix(self.n_qubits)


@dataclass(frozen=True)
class Observable:
    """Sum of mutually commuting Pauli groups, each measurable in one shot."""

    name: str
    groups: tuple[PauliSum, ...]

    def total(self) -> PauliSum:
        out = self.groups[0]
        for g in self.groups[1:]:
            out = out + g
        return out

    def to_matrix(self, n_qubits: int) -> np.ndarray:
        return self.total().to_matrix(n_qubits)


def _hopping(cfg: LatticeConfig, n: int, lay: QubitLayout) -> list[tuple[float, PauliString]]:
    nq = lay.n_qubits
    coeff = -1.0 / (4.0 * cfg.a_g)
    f1, g, f2 = lay.site(n), lay.link(n), lay.site(n + 1)
    return [
        (coeff, PauliString.from_literals(nq, {f1: "X", g: "Z", f2: "X"})),
        (coeff, PauliString.from_literals(nq, {f1: "Y", g: "Z", f2: "Y"})),
    ]


def build_model(cfg: LatticeConfig) -> HamiltonianTerms:
    lay = QubitLayout(cfg.l_ks)
    nq = lay.n_qubits
    h_e, h_o = [], []
    for n in range(1, cfg.l_ks):
        (h_e if n % 2 == 0 else h_o).extend(_hopping(cfg, n, lay))
    h_d = []
    a = cfg.a_g
    for n in range(1, cfg.l_ks):
        h_d.append((-a, PauliString.from_literals(nq, {lay.link(n): "X"})))
    for n in range(1, cfg.l_ks + 1):
        h_d.append((0.5 * cfg.m_over_g * (-1) ** n, PauliString.from_literals(nq, {lay.site(n): "Z"})))
    for n in range(1, cfg.l_ks + 1):
        h_d.append((-0.5 * cfg.mu_over_g, PauliString.from_literals(nq, {lay.site(n): "Z"})))
    return HamiltonianTerms(tuple(h_e), tuple(h_o), tuple(h_d), a * (cfg.l_ks - 1), nq)


def gauss_operators(cfg: LatticeConfig) -> list[PauliString]:
    """``G_n = (-1)^n X_{n-1,n} Z_n X_{n,n+1}`` for ``n = 1..L-1`` (no left link at n=1)."""
    lay = QubitLayout(cfg.l_ks)
    out = []
    for n in range(1, cfg.l_ks):
        lits = {lay.site(n): "Z", lay.link(n): "X"}
        if n > 1:
            lits[lay.link(n - 1)] = "X"
        out.append(PauliString.from_literals(lay.n_qubits, lits, sign=(-1) ** n))
    return out


def observables(cfg: LatticeConfig) -> dict[str, Observable]:
    """Energy density, chiral condensate and number density.

    Energy uses ``H`` without the ``-mu N`` part, split into the three
    commuting groups e / o / D.
    """
    terms = build_model(cfg)
    lay = QubitLayout(cfg.l_ks)
    nq = lay.n_qubits
    l_d = cfg.l_d
    zs = [PauliString.from_literals(nq, {q: "Z"}) for q in lay.site_qubits]
    # drop the chemical-potential strings: the last L entries of h_d
    h_d = terms.h_d[: len(terms.h_d) - cfg.l_ks]
    energy = Observable(
        "energy",
        tuple(
            g.scaled(1.0 / l_d)
            for g in (
                PauliSum(terms.h_e),
                PauliSum(terms.h_o),
                PauliSum(h_d, terms.constant_offset),
            )
            if g.terms
        ),
    )
    chiral = Observable(
        "chiral",
        (PauliSum(tuple(((-1) ** n / cfg.l_ks, z) for n, z in enumerate(zs, start=1))),),
    )
    number = Observable("number", (PauliSum(tuple((1.0 / (2 * l_d), z) for z in zs)),))
    return {"energy": energy, "chiral": chiral, "number": number}


def number_operator(cfg: LatticeConfig) -> PauliSum:
    """``N = (1/2) sum_n Z_n``."""
    lay = QubitLayout(cfg.l_ks)
    return PauliSum(tuple((0.5, PauliString.from_literals(lay.n_qubits, {q: "Z"})) for q in lay.site_qubits))


class LabelCodec:
    """Bitstring <-> label, e.g. ``"010" <-> "0-0"``.

    Site bits print as ``0``/``1``; link bit 0 prints ``+`` and 1 prints ``-``
    (in the physical-Z basis links are read out in the X eigenbasis).
    """

    def __init__(self, layout: QubitLayout):
        self.layout = layout

    def encode(self, bits: str) -> str:
        n = self.layout.n_qubits
        if len(bits) != n or any(b not in "01" for b in bits):
            raise ValueError(f"expected {n} bits, got {bits!r}")
        return "".join(LINK_CHARS[int(b)] if q % 2 else b for q, b in enumerate(bits))

    def decode(self, label: str) -> str:
        label = label.strip().replace("−", "-")
        n = self.layout.n_qubits
        if len(label) != n:
            raise ValueError(f"label {label!r} should have {n} characters")
        out = []
        for q, ch in enumerate(label):
            if q % 2:
                if ch not in "+-":
                    raise ValueError(f"link character {ch!r} in {label!r}")
                out.append("0" if ch == "+" else "1")
            else:
                if ch not in "01":
                    raise ValueError(f"site character {ch!r} in {label!r}")
                out.append(ch)
        return "".join(out)


def label_codec(layout: QubitLayout) -> LabelCodec:
    return LabelCodec(layout)


def gauss_eigenvalues(cfg: LatticeConfig, bits: str) -> list[int]:
    """Gauss eigenvalues of the physical-Z basis state labelled by ``bits``."""
    lay = QubitLayout(cfg.l_ks)
    link_sign = [1] + [1 - 2 * int(bits[lay.link(n)]) for n in range(1, cfg.l_ks)]
    out = []
    for n in range(1, cfg.l_ks):
        z = 1 - 2 * int(bits[lay.site(n)])
        out.append((-1) ** n * link_sign[n - 1] * z * link_sign[n])
    return out


def is_physical_bits(cfg: LatticeConfig, bits: str) -> bool:
    return all(g == 1 for g in gauss_eigenvalues(cfg, bits))


def solve_links(cfg: LatticeConfig, site_bits: str) -> str:
    """Physical-Z bitstring with the given site bits and links fixed by Gauss's law."""
    if len(site_bits) != cfg.l_ks:
        raise ValueError(f"need {cfg.l_ks} site bits")
    out = []
    prev = 1
    for n in range(1, cfg.l_ks + 1):
        out.append(site_bits[n - 1])
        if n < cfg.l_ks:
            z = 1 - 2 * int(site_bits[n - 1])
            cur = (-1) ** n * z * prev
            out.append("0" if cur == 1 else "1")
            prev = cur
    return "".join(out)


def default_initial_bits(cfg: LatticeConfig) -> str:
    """All sites 0 with links solved left to right (``0-0`` for L=2)."""
    return solve_links(cfg, "0" * cfg.l_ks)


def physical_bitstrings(cfg: LatticeConfig) -> list[str]:
    """The 2^L physical-Z basis bitstrings, in order of their site bits."""
    return [solve_links(cfg, format(k, f"0{cfg.l_ks}b")) for k in range(2**cfg.l_ks)]


def physical_projector(cfg: LatticeConfig, dense_limit: int = DENSE_LIMIT) -> np.ndarray:
    """Dense ``prod_n (I + G_n)/2``."""
    nq = cfg.n_qubits
    if nq > dense_limit:
        raise ValueError(f"{nq} qubits exceeds the dense limit {dense_limit}")
    proj = np.eye(2**nq, dtype=complex)
    for g in gauss_operators(cfg):
        proj = proj @ (0.5 * (np.eye(2**nq) + g.to_matrix()))
    return proj
