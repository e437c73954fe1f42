"""Command-line driver: exact tables, chains, sweeps, verification and variance studies.

Configuration is an INI file with sections ``[model] [thermo] [ite] [chain]
[stats] [limits] [variance]``; any key can be overridden with
``--set section.key=value``.  List values are comma separated.

Exit codes: 0 success, 2 a verification or variance check failed, 3 bad
configuration or input file.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import exactref, mupb, stats
from .ite import trotter_sequence
from .model import DENSE_LIMIT, LatticeConfig, build_model, gauss_operators, observables
from .qmetts import MODES, SCHEDULES, ChainConfig, empirical_distribution, run_chain, tv_distance
from .tableau import (
    TableauError,
    canonical_circuit,
    from_generators,
    is_canonical_image,
    load_stabilizer_file,
)

EXIT_OK = 0
EXIT_CHECK_FAILED = 2
EXIT_CONFIG = 3

WORKERS_ENV = "QMETTS_WORKERS"

DEFAULT_BETA_GRID = (0.2, 0.4, 0.7, 1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 10.0, 14.0)

SUMMARY_FIELDS = [
    "beta_g", "mu_over_g", "observable", "mean", "stderr", "tau", "n_eff", "window",
    "l_ks", "a_g", "m_over_g", "delta_beta", "n_chain", "estimator_mode", "basis_schedule",
    "seed", "point",
]


class ConfigError(Exception):
    pass


@dataclass
class RunConfig:
    l_ks: int = 4
    a_g: float = 0.25
    m_over_g: float = 0.01
    beta_g: list[float] = field(default_factory=lambda: list(DEFAULT_BETA_GRID))
    mu_over_g: list[float] = field(default_factory=lambda: [0.0])
    delta_beta: float = 0.01
    n_chain: int = 1000
    n_burn: int = 0
    estimator_mode: str = "single_shot"
    n_shot: int = 1
    seed: int = 0
    basis_schedule: str = "alternate"
    initial_state: str = "auto"
    window_w: int = 10
    dense_max_qubits: int = DENSE_LIMIT
    n_est: int = 2000
    budget_n_shot: int = 10
    n_rep: int = 50
    n_tau: int = 20000

    def lattice(self, mu: float) -> LatticeConfig:
        return LatticeConfig(self.l_ks, self.a_g, self.m_over_g, mu)

    def grid(self) -> list[tuple[float, float]]:
        return [(b, m) for m in self.mu_over_g for b in self.beta_g]

    def chain_config(self, point: int, **kw) -> ChainConfig:
        base = dict(
            n_chain=self.n_chain, n_burn=self.n_burn, estimator_mode=self.estimator_mode,
            n_shot=self.n_shot, basis_schedule=self.basis_schedule,
            seed=point_seed(self.seed, point), initial_state=self.initial_state,
        )
        base.update(kw)
        return ChainConfig(**base)

    def provenance(self, point: int) -> dict:
        return dict(
            l_ks=self.l_ks, a_g=self.a_g, m_over_g=self.m_over_g, delta_beta=self.delta_beta,
            n_chain=self.n_chain, estimator_mode=self.estimator_mode,
            basis_schedule=self.basis_schedule, seed=self.seed, point=point,
        )


def _float_list(s: str) -> list[float]:
    return [float(v) for v in s.replace(";", ",").split(",") if v.strip()]


# (section, key, attribute, parser)
_KEYS: list[tuple[str, str, str, Callable]] = [
    ("model", "l_ks", "l_ks", int),
    ("model", "a_g", "a_g", float),
    ("model", "m_over_g", "m_over_g", float),
    ("thermo", "beta_g", "beta_g", _float_list),
    ("thermo", "mu_over_g", "mu_over_g", _float_list),
    ("ite", "delta_beta", "delta_beta", float),
    ("chain", "n_chain", "n_chain", int),
    ("chain", "n_burn", "n_burn", int),
    ("chain", "estimator_mode", "estimator_mode", str),
    ("chain", "n_shot", "n_shot", int),
    ("chain", "seed", "seed", int),
    ("chain", "basis_schedule", "basis_schedule", str),
    ("chain", "initial_state", "initial_state", str),
    ("stats", "window_w", "window_w", int),
    ("limits", "dense_max_qubits", "dense_max_qubits", int),
    ("variance", "n_est", "n_est", int),
    ("variance", "n_shot", "budget_n_shot", int),
    ("variance", "n_rep", "n_rep", int),
    ("variance", "n_tau", "n_tau", int),
]


def point_seed(master: int, point: int) -> int:
    """Per-grid-point seed derived from the master seed and the point index."""
    return int(np.random.SeedSequence([master, point]).generate_state(1, np.uint64)[0])


def load_config(path: str | Path | None = None, overrides: Sequence[str] = ()) -> RunConfig:
    parser = configparser.ConfigParser()
    if path is not None:
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except (OSError, configparser.Error) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override must look like section.key=value, got {item!r}")
        lhs, value = item.split("=", 1)
        sec, key = lhs.strip().split(".", 1)
        if not parser.has_section(sec):
            parser.add_section(sec)
        parser.set(sec, key, value.strip())

    known = {(s, k) for s, k, _, _ in _KEYS}
    for sec in parser.sections():
        for key in parser[sec]:
            if (sec, key) not in known:
                raise ConfigError(f"unknown config key {sec}.{key}")

    cfg = RunConfig()
    for sec, key, attr, conv in _KEYS:
        if parser.has_option(sec, key):
            raw = parser.get(sec, key)
            try:
                setattr(cfg, attr, conv(raw))
            except ValueError as exc:
                raise ConfigError(f"bad value for {sec}.{key}: {raw!r}") from exc
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    if cfg.l_ks < 2:
        raise ConfigError("model.l_ks must be >= 2")
    if not cfg.beta_g or not cfg.mu_over_g:
        raise ConfigError("thermo.beta_g and thermo.mu_over_g must be nonempty")
    if any(b < 0 for b in cfg.beta_g):
        raise ConfigError("thermo.beta_g must be >= 0")
    if cfg.delta_beta <= 0:
        raise ConfigError("ite.delta_beta must be positive")
    if cfg.estimator_mode not in MODES:
        raise ConfigError(f"chain.estimator_mode must be one of {MODES}")
    if cfg.basis_schedule not in SCHEDULES:
        raise ConfigError(f"chain.basis_schedule must be one of {SCHEDULES}")
    if cfg.n_chain < 1 or cfg.n_burn < 0 or cfg.n_shot < 1:
        raise ConfigError("chain lengths must be positive")
    if cfg.window_w < 0 or cfg.window_w >= cfg.n_chain:
        raise ConfigError("stats.window_w must be in [0, n_chain)")
    if cfg.n_est % cfg.budget_n_shot:
        raise ConfigError("variance.n_est must be divisible by variance.n_shot")
    n_qubits = 2 * cfg.l_ks - 1
    if n_qubits > cfg.dense_max_qubits:
        raise ConfigError(f"{n_qubits} qubits exceeds limits.dense_max_qubits={cfg.dense_max_qubits}")


def n_workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}")


def _map(fn, items: list, workers: int) -> list:
    """Grid-ordered results, optionally from a process pool."""
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _fmt(v) -> str:
    if isinstance(v, np.generic):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_rows(out, fields: list[str], rows: list[dict]):
    w = csv.DictWriter(out, fieldnames=fields, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: _fmt(v) for k, v in r.items()})


# ---- exact -------------------------------------------------------------------


def exact_rows(cfg: RunConfig) -> list[dict]:
    rows = []
    for point, (beta, mu) in enumerate(cfg.grid()):
        lat = cfg.lattice(mu)
        sol = exactref.solve(lat, cfg.dense_max_qubits)
        for name, obs in observables(lat).items():
            rows.append(dict(
                beta_g=beta, mu_over_g=mu, observable=name,
                mean=exactref.thermal_expectation(sol, beta, obs),
                stderr=0.0, tau="", n_eff="", window="",
                **{**cfg.provenance(point), "estimator_mode": "exact_diag", "n_chain": ""},
            ))
    return rows


# ---- chain -------------------------------------------------------------------


@dataclass
class PointResult:
    point: int
    beta: float
    mu: float
    summary_rows: list[dict]
    steps_csv: str
    freq_rows: list[dict]
    unphysical: int


def _chain_point(args) -> PointResult:
    cfg, point, beta, mu, with_exact = args
    lat = cfg.lattice(mu)
    bases = mupb.build_1p1d(lat)
    plan = trotter_sequence(build_model(lat), cfg.delta_beta)
    rec = run_chain(lat, bases, plan, beta, cfg.chain_config(point))
    prov = cfg.provenance(point)
    sol = exactref.solve(lat, cfg.dense_max_qubits) if with_exact else None
    rows = []
    for name, obs in observables(lat).items():
        s = stats.summarize(rec.series(name), min(cfg.window_w, len(rec) - 1))
        row = dict(beta_g=beta, mu_over_g=mu, observable=name, mean=s.mean, stderr=s.stderr,
                   tau=s.tau, n_eff=s.n_eff, window=s.window, **prov)
        if sol is not None:
            row["exact"] = exactref.thermal_expectation(sol, beta, obs)
        rows.append(row)
    freq = []
    collapses = rec.collapses(mupb.Z_PHYS)
    if collapses:
        emp = empirical_distribution(collapses)
        ref = exactref.stationary_distribution(sol, beta) if sol is not None else {}
        codec_labels = dict(zip(rec.bits, rec.labels))
        for bits in sorted(set(emp) | set(ref)):
            freq.append(dict(beta_g=beta, mu_over_g=mu, bitstring=bits,
                             label=codec_labels.get(bits, ""),
                             empirical=emp.get(bits, 0.0), exact=ref.get(bits, ""),
                             n_z_collapses=len(collapses), seed=cfg.seed, point=point))
        if ref:
            for r in freq:
                r["tv_distance"] = tv_distance(emp, ref)
    return PointResult(point, beta, mu, rows, rec.to_csv(extra=prov), freq, rec.unphysical_count())


def chain_results(cfg: RunConfig, with_exact: bool = True) -> list[PointResult]:
    items = [(cfg, i, b, m, with_exact) for i, (b, m) in enumerate(cfg.grid())]
    return _map(_chain_point, items, n_workers())


# ---- variance study ----------------------------------------------------------

VARIANCE_FIELDS = [
    "beta_g", "mu_over_g", "observable", "tau_mu", "tau_o", "alpha",
    "tau_o_predicted", "tau_o_predicted_half", "sigma_mu2", "sigma_shot2", "sigma_gibbs2",
    "var_single", "var_multi", "se_single", "se_multi", "single_not_worse",
    "l_ks", "n_tau", "n_est", "n_shot", "n_rep", "window", "seed", "point",
]


def _variance_point(args) -> list[dict]:
    cfg, point, beta, mu, with_budget = args
    lat = cfg.lattice(mu)
    bases = mupb.build_1p1d(lat)
    plan = trotter_sequence(build_model(lat), cfg.delta_beta)
    rec = run_chain(lat, bases, plan, beta,
                    cfg.chain_config(point, n_chain=cfg.n_tau, estimator_mode="single_shot",
                                     record_exact=True))
    sol = exactref.solve(lat, cfg.dense_max_qubits)
    budget = None
    if with_budget:
        budget = stats.fixed_budget_comparison(
            lat, beta, cfg.n_est, cfg.budget_n_shot, cfg.n_rep, cfg.delta_beta,
            seed=point_seed(cfg.seed + 1, point))
    rows = []
    for name, obs in observables(lat).items():
        rep = stats.variance_decomposition(rec.series(name, exact=True), rec.series(name),
                                           exactref.gibbs_variance(sol, beta, obs), cfg.window_w)
        row = dict(beta_g=beta, mu_over_g=mu, observable=name, tau_mu=rep.tau_mu, tau_o=rep.tau_o,
                   alpha=rep.alpha, tau_o_predicted=rep.tau_o_predicted,
                   tau_o_predicted_half=rep.tau_o_predicted_half, sigma_mu2=rep.sigma_mu2,
                   sigma_shot2=rep.sigma_shot2, sigma_gibbs2=rep.sigma_gibbs2,
                   l_ks=cfg.l_ks, n_tau=cfg.n_tau, n_est=cfg.n_est, n_shot=cfg.budget_n_shot,
                   n_rep=cfg.n_rep, window=cfg.window_w, seed=cfg.seed, point=point)
        if budget is not None:
            row.update(var_single=budget.var_single[name], var_multi=budget.var_multi[name],
                       se_single=budget.se_single[name], se_multi=budget.se_multi[name],
                       single_not_worse=budget.single_not_worse(name))
        rows.append(row)
    return rows


# ---- commands ----------------------------------------------------------------


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def cmd_exact(cfg: RunConfig, args) -> int:
    out, close = _open_out(args.out)
    try:
        _write_rows(out, SUMMARY_FIELDS, exact_rows(cfg))
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_chain(cfg: RunConfig, args) -> int:
    if args.z_only:
        cfg = replace(cfg, basis_schedule="z_only")
    with_exact = not args.no_exact
    results = chain_results(cfg, with_exact=with_exact or args.self_test)
    rows = [r for res in results for r in res.summary_rows]
    fields = SUMMARY_FIELDS + (["exact"] if with_exact or args.self_test else [])
    out, close = _open_out(args.out)
    try:
        _write_rows(out, fields, rows)
    finally:
        if close:
            out.close()
    if args.out_dir:
        d = Path(args.out_dir)
        d.mkdir(parents=True, exist_ok=True)
        for res in results:
            (d / f"steps_{res.point:03d}.csv").write_text(res.steps_csv)
            if res.freq_rows:
                with open(d / f"freq_{res.point:03d}.csv", "w", newline="") as fh:
                    _write_rows(fh, ["beta_g", "mu_over_g", "bitstring", "label", "empirical",
                                     "exact", "tv_distance", "n_z_collapses", "seed", "point"],
                                res.freq_rows)
    if any(res.unphysical for res in results):
        print("unphysical collapses detected", file=sys.stderr)
        return EXIT_CHECK_FAILED
    if args.self_test:
        bad = [r for r in rows if abs(r["mean"] - r["exact"]) > 3 * r["stderr"] + 1e-9]
        for r in bad:
            print(f"self-test: {r['observable']} at beta_g={r['beta_g']} mu_over_g={r['mu_over_g']} "
                  f"off by {r['mean'] - r['exact']:.3g} (stderr {r['stderr']:.3g})", file=sys.stderr)
        if bad:
            return EXIT_CHECK_FAILED
    return EXIT_OK


SWEEP_FIELDS = ["mu_over_g", "beta_g", "t_over_g", "observable", "mean", "stderr", "tau",
                "exact", "l_ks", "a_g", "m_over_g", "delta_beta", "n_chain", "estimator_mode",
                "seed", "point"]


def cmd_sweep(cfg: RunConfig, args) -> int:
    results = chain_results(cfg, with_exact=not args.no_exact)
    rows = []
    for res in results:
        for r in res.summary_rows:
            if r["observable"] in ("chiral", "number"):
                rows.append({**r, "t_over_g": 1.0 / r["beta_g"] if r["beta_g"] > 0 else float("inf")})
    out, close = _open_out(args.out)
    try:
        _write_rows(out, SWEEP_FIELDS, rows)
    finally:
        if close:
            out.close()
    return EXIT_OK


def cmd_verify(cfg: RunConfig, args) -> int:
    lines = []
    ok = True
    if args.stabilizers:
        try:
            tab = load_stabilizer_file(args.stabilizers, args.n_qubits)
        except (TableauError, ValueError, OSError) as exc:
            print(f"invalid stabilizer file: {exc}", file=sys.stderr)
            return EXIT_CONFIG
        circ = canonical_circuit(tab)
        canon_ok = is_canonical_image(tab, circ)
        ok &= canon_ok
        lines.append(f"canonical_form {'PASS' if canon_ok else 'FAIL'} gates={len(circ.gates)} "
                     f"S={tab.n_stabilizers} N={tab.n_qubits}")
        z, x = mupb.build_general(tab)
        rep = mupb.verify_mupb(z, x, tab.generators, n_qubits=tab.n_qubits)
        ok &= rep.passed
        lines.append(f"build_general {rep.summary()}")
    else:
        lat = cfg.lattice(cfg.mu_over_g[0])
        gauss = gauss_operators(lat)
        z, x = mupb.build_1p1d(lat)
        rep = mupb.verify_mupb(z, x, gauss)
        ok &= rep.passed
        lines.append(f"build_1p1d L_KS={cfg.l_ks} {rep.summary()}")
        tab = from_generators(gauss, lat.n_qubits)
        circ = canonical_circuit(tab)
        tab_circ_ok = is_canonical_image(tab, circ)
        ok &= tab_circ_ok
        lines.append(f"canonical_form {'PASS' if tab_circ_ok else 'FAIL'} gates={len(circ.gates)}")
        zg, xg = mupb.build_general(tab)
        rep = mupb.verify_mupb(zg, xg, gauss)
        ok &= rep.passed
        lines.append(f"build_general L_KS={cfg.l_ks} {rep.summary()}")
    for ln in lines:
        print(ln)
    print("OVERALL", "PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_CHECK_FAILED


def cmd_variance_study(cfg: RunConfig, args) -> int:
    items = [(cfg, i, b, m, not args.skip_budget) for i, (b, m) in enumerate(cfg.grid())]
    rows = [r for rs in _map(_variance_point, items, n_workers()) for r in rs]
    out, close = _open_out(args.out)
    try:
        _write_rows(out, VARIANCE_FIELDS, rows)
    finally:
        if close:
            out.close()
    if any(r.get("single_not_worse") is False for r in rows):
        return EXIT_CHECK_FAILED
    return EXIT_OK


def cmd_canon(cfg: RunConfig | None, args) -> int:
    try:
        tab = load_stabilizer_file(args.file, args.n_qubits)
    except (TableauError, ValueError, OSError) as exc:
        print(f"invalid stabilizer file: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    circ = canonical_circuit(tab)
    sys.stdout.write(circ.to_text())
    if not circ.to_text().endswith("\n") and circ.gates:
        sys.stdout.write("\n")
    print(f"# gates={len(circ)} depth={circ.depth()}", file=sys.stderr)
    return EXIT_OK


# ---- entry point -------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="z2metts", description=__doc__.splitlines()[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="INI configuration file")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override one configuration value (repeatable)")
    common.add_argument("-o", "--out", help="summary CSV path (default stdout)")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("exact", parents=[common], help="exact-diagonalization table over the grid")

    c = sub.add_parser("chain", parents=[common], help="run chains over the grid")
    c.add_argument("--out-dir", help="write per-step and collapse-frequency CSVs here")
    c.add_argument("--z-only", action="store_true", help="collapse in the physical Z basis only")
    c.add_argument("--no-exact", action="store_true", help="skip exact reference columns")
    c.add_argument("--self-test", action="store_true",
                   help="exit 2 unless every mean is within 3 stderr of the exact value")

    s = sub.add_parser("sweep", parents=[common], help="(mu, T) phase-diagram grid")
    s.add_argument("--no-exact", action="store_true")

    v = sub.add_parser("verify", parents=[common], help="check MUPB and canonical-form construction")
    v.add_argument("--stabilizers", help="Gauss-operator file, one Pauli string per line")
    v.add_argument("--n-qubits", type=int, help="qubit count (needed for an empty file)")

    vs = sub.add_parser("variance-study", parents=[common], help="tau and fixed-budget variance study")
    vs.add_argument("--skip-budget", action="store_true", help="only the autocorrelation part")

    k = sub.add_parser("canon", help="print the canonicalizing circuit of a stabilizer file")
    k.add_argument("file")
    k.add_argument("--n-qubits", type=int)
    return p


COMMANDS = {
    "exact": cmd_exact,
    "chain": cmd_chain,
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "variance-study": cmd_variance_study,
}


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "canon":
        return cmd_canon(None, args)
    try:
        cfg = load_config(args.config, args.set)
        n_workers()
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # e.g. an unphysical initial label
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
