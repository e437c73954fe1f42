"""Gauge-invariant thermal sampling for the 1+1D Z2 lattice gauge theory with stabilizer tools."""

from .f2linalg import BinMatrix, rank, symmetric_decompose
from .pauli import CliffordCircuit, CliffordGate, PauliString, PhaseError
from .tableau import StabilizerTableau, TableauError, canonical_form, from_generators
from .model import LatticeConfig, build_model, gauss_operators, observables
from .mupb import build_1p1d, build_general, verify_mupb
from .ite import apply_ite, trotter_sequence
from .qmetts import ChainConfig, run_chain
from .stats import summarize, tau_int

__all__ = [
    "BinMatrix", "rank", "symmetric_decompose",
    "CliffordCircuit", "CliffordGate", "PauliString", "PhaseError",
    "StabilizerTableau", "TableauError", "canonical_form", "from_generators",
    "LatticeConfig", "build_model", "gauss_operators", "observables",
    "build_1p1d", "build_general", "verify_mupb",
    "apply_ite", "trotter_sequence",
    "ChainConfig", "run_chain",
    "summarize", "tau_int",
]
