"""QMETTS Markov chain with alternating gauge-invariant measurement bases."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from typing import Mapping, Sequence, TextIO

import numpy as np

from .ite import TrotterPlan, apply_ite, propagator
from .model import LabelCodec, LatticeConfig, Observable, QubitLayout, default_initial_bits, gauss_operators, observables
from .mupb import MeasurementBasis
from .statevec import (
    StateVector,
    apply_circuit,
    circuit_unitary,
    expectation,
    init_basis_state,
    measure_in_basis,
    pauli_expectation,
    sample_pauli_group,
)

MODES = ("exact", "single_shot", "multi_shot")
SCHEDULES = ("alternate", "z_only")
OBS_ORDER = ("energy", "chiral", "number")


@dataclass(frozen=True)
class ChainConfig:
    n_chain: int = 1000
    n_burn: int = 0
    estimator_mode: str = "single_shot"
    n_shot: int = 1
    basis_schedule: str = "alternate"
    seed: int | Sequence[int] = 0
    initial_state: str = "auto"
    record_exact: bool = False  # also log mu_k alongside sampled O_k

    def __post_init__(self):
        if self.n_chain < 1:
            raise ValueError("n_chain must be >= 1")
        if self.n_burn < 0:
            raise ValueError("n_burn must be >= 0")
        if self.estimator_mode not in MODES:
            raise ValueError(f"estimator_mode must be one of {MODES}")
        if self.estimator_mode == "multi_shot" and self.n_shot < 1:
            raise ValueError("n_shot must be >= 1")
        if self.basis_schedule not in SCHEDULES:
            raise ValueError(f"basis_schedule must be one of {SCHEDULES}")


@dataclass
class ChainRecord:
    """Per-step log.  ``o`` holds the recorded estimates O_k; ``mu`` the exact mu_k if kept."""

    basis: list[str] = field(default_factory=list)
    bits: list[str] = field(default_factory=list)
    labels: list[str] = field(default_factory=list)
    physical: list[bool] = field(default_factory=list)
    o: dict[str, list[float]] = field(default_factory=dict)
    mu: dict[str, list[float]] | None = None

    def __len__(self):
        return len(self.bits)

    def series(self, name: str, exact: bool = False) -> np.ndarray:
        src = self.mu if exact else self.o
        if src is None:
            raise KeyError("exact values were not recorded")
        return np.asarray(src[name], dtype=float)

    def collapses(self, tag: str = "Z_phys") -> list[str]:
        """Bitstrings of the collapses performed in basis ``tag``."""
        return [b for b, t in zip(self.bits, self.basis) if t == tag]

    def unphysical_count(self) -> int:
        return sum(1 for p in self.physical if not p)

    def write_csv(self, out: TextIO, extra: Mapping[str, object] | None = None):
        extra = dict(extra or {})
        names = [n for n in OBS_ORDER if n in self.o] + [n for n in self.o if n not in OBS_ORDER]
        header = ["step", "basis", "bitstring", "label"] + [f"o_{n}" for n in names]
        if self.mu is not None:
            header += [f"mu_{n}" for n in names]
        header += list(extra)
        w = csv.writer(out)
        w.writerow(header)
        for k in range(len(self)):
            row = [k, self.basis[k], self.bits[k], self.labels[k]]
            row += [repr(self.o[n][k]) for n in names]
            if self.mu is not None:
                row += [repr(self.mu[n][k]) for n in names]
            row += list(extra.values())
            w.writerow(row)

    def to_csv(self, extra: Mapping[str, object] | None = None) -> str:
        buf = io.StringIO()
        self.write_csv(buf, extra)
        return buf.getvalue()


def make_rngs(seed: int | Sequence[int]) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent (collapse, estimation) streams from one master seed."""
    ss = np.random.SeedSequence(seed)
    a, b = ss.spawn(2)
    return np.random.Generator(np.random.Philox(a)), np.random.Generator(np.random.Philox(b))


def estimate_step(
    s: StateVector,
    obs: Mapping[str, Observable],
    mode: str,
    rng: np.random.Generator,
    n_shot: int = 1,
) -> dict[str, float]:
    """Observable estimates on one METTS.

    ``exact`` returns expectation values; ``single_shot`` draws one eigenvalue
    per commuting group (groups summed); ``multi_shot`` averages ``n_shot``
    such draws.
    """
    out = {}
    for name, ob in obs.items():
        if mode == "exact":
            out[name] = sum(expectation(s, g) for g in ob.groups)
        elif mode in ("single_shot", "multi_shot"):
            shots = 1 if mode == "single_shot" else n_shot
            acc = 0.0
            for _ in range(shots):
                acc += sum(sample_pauli_group(s, g, rng) for g in ob.groups)
            out[name] = acc / shots
        else:
            raise ValueError(f"unknown estimator mode {mode!r}")
    return out


def _basis_state(basis: MeasurementBasis, bits: str, unitary: np.ndarray | None) -> StateVector:
    n = basis.n_qubits
    if unitary is not None:
        k = int(bits, 2)
        return StateVector(n, unitary[k].conj())
    return apply_circuit(init_basis_state(n, bits), basis.circuit.inverse())


def run_chain(
    lattice: LatticeConfig,
    bases: tuple[MeasurementBasis, MeasurementBasis],
    plan: TrotterPlan,
    beta: float,
    cfg: ChainConfig,
    obs: Mapping[str, Observable] | None = None,
) -> ChainRecord:
    """Run one QMETTS chain.

    Starts from a physical-Z basis state.  Step ``k`` evolves the current
    state to its METTS, records estimates, then collapses in the X basis for
    even ``k`` and the Z basis for odd ``k`` (always Z for ``z_only``).
    """
    z_basis, x_basis = bases
    n = lattice.n_qubits
    codec = LabelCodec(QubitLayout(lattice.l_ks))
    gauss = gauss_operators(lattice)
    obs = observables(lattice) if obs is None else obs
    dense = n <= 12
    unitaries = {b.tag: circuit_unitary(b.circuit) if dense else None for b in (z_basis, x_basis)}
    if dense:
        propagator(plan, beta)  # warm the cache once

    bits0 = default_initial_bits(lattice) if cfg.initial_state == "auto" else codec.decode(cfg.initial_state)
    state = _basis_state(z_basis, bits0, unitaries[z_basis.tag])
    if not _is_physical(state, gauss):
        raise ValueError(f"initial state {codec.encode(bits0)} is not physical")

    rng_collapse, rng_est = make_rngs(cfg.seed)
    rec = ChainRecord(o={k: [] for k in obs}, mu={k: [] for k in obs} if cfg.record_exact or cfg.estimator_mode == "exact" else None)
    for k in range(cfg.n_burn + cfg.n_chain):
        phi = apply_ite(state, plan, beta)
        keep = k >= cfg.n_burn
        if keep:
            est = estimate_step(phi, obs, cfg.estimator_mode, rng_est, cfg.n_shot)
            for name, v in est.items():
                rec.o[name].append(v)
            if rec.mu is not None:
                exact = est if cfg.estimator_mode == "exact" else estimate_step(phi, obs, "exact", rng_est)
                for name, v in exact.items():
                    rec.mu[name].append(v)
        if cfg.basis_schedule == "alternate" and k % 2 == 0:
            basis = x_basis
        else:
            basis = z_basis
        bits, state = measure_in_basis(phi, basis.circuit, rng_collapse, unitaries[basis.tag])
        phys = _is_physical(state, gauss)
        if not phys:
            raise RuntimeError(f"collapse to unphysical state {bits} at step {k}")
        if keep:
            rec.basis.append(basis.tag)
            rec.bits.append(bits)
            rec.labels.append(codec.encode(bits))
            rec.physical.append(phys)
    return rec


def _is_physical(s: StateVector, gauss, tol: float = 1e-8) -> bool:
    return all(pauli_expectation(s, g) > 1 - tol for g in gauss)


def empirical_distribution(bits: Sequence[str]) -> dict[str, float]:
    out: dict[str, float] = {}
    for b in bits:
        out[b] = out.get(b, 0) + 1
    total = len(bits)
    return {b: c / total for b, c in out.items()}


def tv_distance(p: Mapping[str, float], q: Mapping[str, float]) -> float:
    keys = set(p) | set(q)
    return 0.5 * sum(abs(p.get(k, 0.0) - q.get(k, 0.0)) for k in keys)


@dataclass
class BalanceReport:
    max_violation: float
    pairs_checked: int
    probs: dict[str, np.ndarray]

    @property
    def passed(self) -> bool:
        return self.max_violation < 1e-8


def detailed_balance_check(
    lattice: LatticeConfig,
    bases: tuple[MeasurementBasis, MeasurementBasis],
    plan: TrotterPlan,
    beta: float,
    floor: float = 1e-13,
) -> BalanceReport:
    """Check ``T_{i->j} Prob_i == T_{j->i} Prob_j`` for every pair of physical basis states.

    Both sides use the same Trotterized propagator; pairs within each basis
    and across the two bases are covered.
    """
    from .mupb import physical_states

    gauss = gauss_operators(lattice)
    prop = propagator(plan, beta)
    sets = {b.tag: physical_states(b, gauss) for b in bases}
    z_norm = None
    weights = {}
    for tag, st in sets.items():
        w = np.linalg.norm(prop @ st, axis=0) ** 2
        weights[tag] = w
        if z_norm is None:
            z_norm = w.sum()
    worst = 0.0
    pairs = 0
    tags = list(sets)
    for a in tags:
        for b in tags:
            amp = sets[b].conj().T @ prop @ sets[a]  # amp[j, i] = <j|P|i>
            t_ab = np.abs(amp) ** 2 / weights[a][None, :]
            flow_ab = t_ab * (weights[a][None, :] / z_norm)
            amp_back = sets[a].conj().T @ prop @ sets[b]
            t_ba = np.abs(amp_back) ** 2 / weights[b][None, :]
            flow_ba = (t_ba * (weights[b][None, :] / z_norm)).T
            scale = np.maximum(flow_ab, flow_ba)
            mask = scale > floor
            pairs += int(mask.sum())
            if mask.any():
                worst = max(worst, float((np.abs(flow_ab - flow_ba)[mask] / scale[mask]).max()))
    probs = {tag: w / z_norm for tag, w in weights.items()}
    return BalanceReport(worst, pairs, probs)
