"""Scenario runner and report emitter.

Scenarios are described by JSON config files (one object per file).  Running
one executes the corresponding verifier, writes a machine-readable report
(plus CSV tables and figures where the scenario produces them) into
`<outdir>/<scenario-name>/`, and exits 0 when every verdict passes, 1 when a
verdict fails, and 2 on configuration or I/O errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import copy_dynamics as cd
from . import hilbert as hb
from . import povm as pv
from . import theorems as th
from .figures import render_povm_figure, render_sweep_figure
from .optimizer import OptimizationConfig, sweep_overlap_frontier

__all__ = ["ConfigError", "Verdict", "RunReport", "load_config", "run", "run_suite", "main"]

KINDS = (
    "identity",
    "record-orthogonality",
    "actionability",
    "mixtures",
    "purified",
    "bell",
    "povm",
    "sweep",
)

_COMMON_KEYS = {"kind", "name", "seed", "dims", "optimizer"}
_KIND_KEYS = {
    "identity": {"trials", "apparatus_dim", "disturb"},
    "record-orthogonality": {"trials"},
    "actionability": {"scenarios", "test_dim"},
    "mixtures": {"quadruples", "include_trivial", "test_dim"},
    "purified": {"trials", "alternating_example"},
    "bell": set(),
    "povm": {"qutrit_trials"},
    "sweep": {"grid"},
}
_OPTIMIZER_KEYS = {"restarts", "max_iterations", "penalty_weight", "convergence_tol", "step_init"}


class ConfigError(ValueError):
    """Schema violation or unreadable configuration; exits with status 2."""


@dataclass
class Verdict:
    name: str
    value: float
    threshold: float
    op: str
    passed: bool

    def as_record(self) -> dict:
        return {
            "name": self.name,
            "residual": self.value,
            "threshold": self.threshold,
            "op": self.op,
            "pass": self.passed,
        }


def _check(name: str, value: float, threshold: float, op: str = "<") -> Verdict:
    value = float(value)
    passed = value < threshold if op == "<" else value > threshold
    return Verdict(name, value, float(threshold), op, bool(passed))


@dataclass
class RunReport:
    scenario: dict
    verdicts: list
    artifacts: list
    wall_time: float

    @property
    def passed(self) -> bool:
        return all(v.passed for v in self.verdicts)

    def as_record(self) -> dict:
        return {
            "scenario": self.scenario,
            "verdicts": [v.as_record() for v in self.verdicts],
            "artifacts": self.artifacts,
            "pass": self.passed,
            "wall_time": self.wall_time,
        }


def load_config(path) -> dict:
    """Read and validate a scenario config; raises ConfigError naming the
    offending field."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"config {path}: top level must be an object")

    kind = cfg.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"config {path}: field 'kind' must be one of {KINDS}, got {kind!r}")
    if "seed" not in cfg:
        raise ConfigError(f"config {path}: field 'seed' is required (no implicit randomness)")
    if not isinstance(cfg["seed"], int):
        raise ConfigError(f"config {path}: field 'seed' must be an integer")

    allowed = _COMMON_KEYS | _KIND_KEYS[kind]
    for key in cfg:
        if key not in allowed:
            raise ConfigError(f"config {path}: unknown field '{key}' for kind '{kind}'")
    if "dims" in cfg:
        dims = cfg["dims"]
        if (not isinstance(dims, list) or not dims
                or not all(isinstance(d, int) and d >= 1 for d in dims)):
            raise ConfigError(f"config {path}: field 'dims' must be a list of positive integers")
    if "optimizer" in cfg:
        opt = cfg["optimizer"]
        if not isinstance(opt, dict):
            raise ConfigError(f"config {path}: field 'optimizer' must be an object")
        for key in opt:
            if key not in _OPTIMIZER_KEYS:
                raise ConfigError(f"config {path}: unknown optimizer field '{key}'")
    cfg.setdefault("name", path.stem)
    return cfg


def _opt_config(cfg: dict, defaults: dict) -> OptimizationConfig:
    params = dict(defaults)
    params.update(cfg.get("optimizer", {}))
    params.setdefault("seed", cfg["seed"])
    return OptimizationConfig(**params)


# ---------------------------------------------------------------------------
# scenario runners


def _random_block_sizes(dim: int, rng) -> list:
    sizes = []
    left = dim
    while left > 0:
        n = int(rng.integers(1, left + 1)) if left > 1 else 1
        sizes.append(n)
        left -= n
    return sizes if len(sizes) > 1 else [1, dim - 1] if dim > 1 else [1]


def _confined_pure_state(decomp, k: int, rng) -> hb.StateVector:
    proj = decomp.projectors[k]
    w, vecs = np.linalg.eigh(proj)
    cols = vecs[:, w > 0.5]
    amps = rng.standard_normal(cols.shape[1]) + 1j * rng.standard_normal(cols.shape[1])
    vec = cols @ (amps / np.linalg.norm(amps))
    return hb.StateVector(vec)


def _run_identity(cfg: dict):
    trials = cfg.get("trials", 200)
    system_dims = cfg.get("dims", [2, 3, 4])
    apparatus_dim = cfg.get("apparatus_dim", 2)
    disturb = cfg.get("disturb", True)
    max_residual = 0.0
    dichotomy_failures = 0
    for t in range(trials):
        rng = np.random.default_rng([cfg["seed"], t])
        dim = int(rng.choice(system_dims))
        decomp = cd.random_decomposition(dim, _random_block_sizes(dim, rng), rng)
        if disturb:
            decomp = cd.random_disturbances(decomp, rng)
        tags = cd.random_tag_spec(apparatus_dim, decomp.size, rng)
        copy = cd.build_controlled_copy(decomp, tags)
        j = int(rng.integers(decomp.size))
        k = int(rng.integers(decomp.size))
        u = _confined_pure_state(decomp, j, rng)
        v = _confined_pure_state(decomp, k, rng)
        report = th.verify_scalar_product_identity(
            u, v, copy, tags.ready_state, decomposition=decomp)
        max_residual = max(max_residual, report.residual)
        if not report.dichotomy:
            dichotomy_failures += 1
    return [
        _check("scalar_product_identity_max_residual", max_residual, 1e-9),
        _check("dichotomy_failures", dichotomy_failures, 1),
    ], []


def _run_record_orthogonality(cfg: dict):
    trials = cfg.get("trials", 50)
    dims = cfg.get("dims", [4, 2, 2])
    system_dim, app_dims = dims[0], tuple(dims[1:])
    max_residuals = [0.0] * len(app_dims)
    dichotomy_failures = 0
    for t in range(trials):
        rng = np.random.default_rng([cfg["seed"], t])
        decomp = cd.random_decomposition(system_dim, _random_block_sizes(system_dim, rng), rng)
        decomp = cd.random_disturbances(decomp, rng)
        tags = tuple(cd.random_tag_spec(d, decomp.size, rng) for d in app_dims)
        chain = cd.CopyChain(system_dim, app_dims, decomp, tags)
        blocks = [int(rng.integers(decomp.size)) for _ in range(2)]
        rhos = []
        for b in blocks:
            rank_max = int(round(np.trace(decomp.projectors[b]).real))
            rank = int(rng.integers(1, rank_max + 1))
            rhos.append(cd.random_confined_density(decomp, b, rank, rng))
        result_u = cd.run_copy_chain(rhos[0], chain)
        result_v = cd.run_copy_chain(rhos[1], chain)
        report = th.verify_record_orthogonality(rhos[0], rhos[1], result_u, result_v)
        for i, step_report in enumerate(report.step_reports):
            max_residuals[i] = max(max_residuals[i], step_report.residual)
        if not report.dichotomy:
            dichotomy_failures += 1
    verdicts = [
        _check(f"norm_bookkeeping_step{i + 1}_max_residual", r, 1e-9)
        for i, r in enumerate(max_residuals)
    ]
    verdicts.append(_check("dichotomy_failures", dichotomy_failures, 1))
    return verdicts, []


def _mixed_apparatus_scenario(seed: int):
    """Copy chain with a mixed rank-2 apparatus in dimension 4, driven by a
    conditional shift between orthogonal support blocks."""
    ready = hb.random_density(4, 2, seed)
    w, vecs = np.linalg.eigh(ready.matrix)
    vecs = vecs[:, np.argsort(w)[::-1]]
    swap = np.zeros((4, 4), dtype=complex)
    swap[:, :2] = vecs[:, 2:]
    swap[:, 2:] = vecs[:, :2]
    shift = swap @ vecs.conj().T
    decomp = cd.RecordDecomposition(
        (np.diag([1.0, 0.0]), np.diag([0.0, 1.0])), (0.0, 1.0))
    coupling = cd.controlled_apparatus_unitary(decomp, [np.eye(4), shift])
    comp_u = cd.run_mixed_copy(hb.pure_density(hb.basis_state((2,), 0)), [ready], [coupling]).final
    comp_v = cd.run_mixed_copy(hb.pure_density(hb.basis_state((2,), 1)), [ready], [coupling]).final
    return comp_u, comp_v


def _run_actionability(cfg: dict):
    scenarios = cfg.get("scenarios", ["cnot", "identical", "mixed-apparatus"])
    test_dim = cfg.get("test_dim", 2)
    opt = _opt_config(cfg, {"restarts": 32, "max_iterations": 800})
    zero = hb.pure_density(hb.basis_state((2,), 0))
    one = hb.pure_density(hb.basis_state((2,), 1))
    verdicts = []
    for scenario in scenarios:
        if scenario == "cnot":
            verdict = th.actionability_test(zero, one, 0, test_dim, opt)
            verdicts.append(_check("cnot_best_score", verdict.best_score, 0.99, ">"))
            verdicts.append(_check("cnot_product_residual", verdict.product_residual, th.TOL_PROD))
            verdicts.append(_check("cnot_s_overlap", verdict.s_overlap, 1e-9))
        elif scenario == "identical":
            verdict = th.actionability_test(zero, zero, 0, test_dim, opt)
            verdicts.append(_check("identical_best_score", verdict.best_score, th.TOL_OPT))
        elif scenario == "mixed-apparatus":
            comp_u, comp_v = _mixed_apparatus_scenario(cfg["seed"])
            verdict = th.actionability_test(comp_u, comp_v, 1, test_dim, opt)
            verdicts.append(_check("mixed_apparatus_best_score", verdict.best_score, 0.4, ">"))
            verdicts.append(_check("mixed_apparatus_s_overlap", verdict.s_overlap, 1e-9))
        else:
            raise ConfigError(f"unknown actionability scenario '{scenario}'")
    return verdicts, []


def _orthogonal_record_pair(dim: int):
    rho_u = hb.pure_density(hb.basis_state((dim,), 0))
    rest = np.zeros((dim, dim), dtype=complex)
    for k in range(1, dim):
        rest[k, k] = 1.0 / (dim - 1)
    return rho_u, hb.DensityOperator(rest)


def _run_mixtures(cfg: dict):
    dim = cfg.get("dims", [2])[0]
    quadruples = cfg.get("quadruples", [[0.5, 0.5, 0.25, 0.75], [0.3, 0.7, 0.6, 0.4]])
    include_trivial = cfg.get("include_trivial", True)
    test_dim = cfg.get("test_dim", 2)
    opt = _opt_config(cfg, {"restarts": 64, "max_iterations": 800})
    rho_u, rho_v = _orthogonal_record_pair(dim)
    verdicts = []
    for i, (a, b, c, d) in enumerate(quadruples):
        verdict = th.mixtures_dont_mix_check(rho_u, rho_v, (a, b), (c, d), opt, test_dim)
        verdicts.append(_check(f"nontrivial_{i}_best_score", verdict.best_score, th.TOL_OPT))
    if include_trivial:
        for name, ab, cdq in (("endpoint_uv", (1.0, 0.0), (0.0, 1.0)),
                              ("endpoint_vu", (0.0, 1.0), (1.0, 0.0))):
            verdict = th.mixtures_dont_mix_check(rho_u, rho_v, ab, cdq, opt, test_dim)
            verdicts.append(_check(f"{name}_best_score", verdict.best_score, th.THR_ACTION, ">"))
    return verdicts, []


def _shared_purifier_pair(dim: int, rng):
    weights = rng.dirichlet(np.ones(dim))
    coeffs = np.sqrt(weights)
    basis_u = hb.random_unitary(dim, rng).matrix
    basis_v = hb.random_unitary(dim, rng).matrix
    amps_u = np.zeros(dim * dim, dtype=complex)
    amps_v = np.zeros(dim * dim, dtype=complex)
    purifier = np.eye(dim)
    for k in range(dim):
        amps_u += coeffs[k] * np.kron(basis_u[:, k], purifier[:, k])
        amps_v += coeffs[k] * np.kron(basis_v[:, k], purifier[:, k])
    dims = hb.CompositeDims((dim, dim))
    return hb.StateVector(amps_u, dims), hb.StateVector(amps_v, dims)


def _alternating_sign_pair():
    """Purification pair whose weighted overlap terms are (+1/2, -1/2)."""
    dims = hb.CompositeDims((2, 2))
    r2 = np.sqrt(2.0)
    gamma_u = hb.StateVector(np.array([1, 0, 0, 1]) / r2, dims)
    gamma_v = hb.StateVector(np.array([1, 0, 0, -1]) / r2, dims)
    return gamma_u, gamma_v


def _run_purified(cfg: dict):
    trials = cfg.get("trials", 50)
    dim = cfg.get("dims", [3])[0]
    max_residual = 0.0
    for t in range(trials):
        rng = np.random.default_rng([cfg["seed"], t])
        gamma_u, gamma_v = _shared_purifier_pair(dim, rng)
        purifier = [hb.basis_state((dim,), k) for k in range(dim)]
        report = th.purified_orthogonality(gamma_u, gamma_v, purifier_basis=purifier)
        max_residual = max(max_residual, report.residual)
    verdicts = [_check("schmidt_sum_max_residual", max_residual, 1e-9)]
    if cfg.get("alternating_example", True):
        gamma_u, gamma_v = _alternating_sign_pair()
        purifier = [hb.basis_state((2,), 0), hb.basis_state((2,), 1)]
        report = th.purified_orthogonality(gamma_u, gamma_v, purifier_basis=purifier)
        verdicts.append(_check("alternating_sign_overlap", abs(report.lhs), 1e-12))
        verdicts.append(_check("alternating_sign_residual", report.residual, 1e-9))
        largest_term = max(abs(t) for t in report.terms)
        verdicts.append(_check("alternating_sign_term_size", largest_term, 0.4, ">"))
    return verdicts, []


def _run_bell(cfg: dict):
    opt = _opt_config(cfg, {"restarts": 64, "max_iterations": 600})
    report = th.bell_phase_demo(opt)
    verdicts = [
        _check("reduced_state_equality", abs(report.reduced_overlap_after - 0.5), 1e-9),
        _check("global_orthogonality", abs(report.global_overlap), 1e-12),
        _check("local_actionability_best_score", report.local_verdict.best_score, th.TOL_OPT),
        _check("tag_orthogonality", report.tag_overlap, 1e-9),
        _check("global_record_best_score", report.global_verdict.best_score, th.THR_ACTION, ">"),
    ]
    return verdicts, []


def _write_csv(path: Path, header, rows) -> None:
    def fmt(x):
        if isinstance(x, float):
            return f"{x:.17g}"
        return str(x)

    lines = [",".join(header)]
    lines.extend(",".join(fmt(x) for x in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _run_povm(cfg: dict, outdir: Path):
    r2 = np.sqrt(2.0)
    plus = hb.StateVector(np.array([1, 1]) / r2)
    minus = hb.StateVector(np.array([1, -1]) / r2)
    z0, z1 = hb.basis_state((2,), 0), hb.basis_state((2,), 1)
    m = pv.build_sequential_povm([plus, minus], [z0, z1], hb.UnitaryOperator(np.eye(2)))
    validity = pv.check_povm(m)

    element_err = 0.0
    for k, yk in enumerate((plus, minus)):
        target = 0.5 * np.outer(yk.amplitudes, yk.amplitudes.conj())
        for l in range(2):
            element_err = max(element_err, float(np.max(np.abs(m.element(k, l).matrix - target))))
    probs = pv.outcome_probabilities(m, hb.pure_density(z0))
    prob_err = max(abs(p - 0.25) for _, _, p in probs)

    qutrit_trials = cfg.get("qutrit_trials", 20)
    dim = cfg.get("dims", [3])[0]
    oracle_err = 0.0
    identity_res = validity.identity_residual
    for t in range(qutrit_trials):
        rng = np.random.default_rng([cfg["seed"], t])
        y_mat = hb.random_unitary(dim, rng).matrix
        z_mat = hb.random_unitary(dim, rng).matrix
        u_t = hb.random_unitary(dim, rng)
        ys = [hb.StateVector(y_mat[:, k]) for k in range(dim)]
        zs = [hb.StateVector(z_mat[:, k]) for k in range(dim)]
        mt = pv.build_sequential_povm(ys, zs, u_t)
        identity_res = max(identity_res, pv.check_povm(mt).identity_residual)
        rho = hb.random_density(dim, dim, rng)
        formula = pv.outcome_probabilities(mt, rho)
        simulated = pv.two_step_probabilities(mt, rho)
        oracle_err = max(
            oracle_err,
            max(abs(p1 - p2) for (_, _, p1), (_, _, p2) in zip(formula, simulated)),
        )

    csv_path = outdir / "povm_probabilities.csv"
    _write_csv(csv_path, ("k", "l", "p"), probs)
    fig_path = outdir / "povm_probabilities.png"
    render_povm_figure(probs, fig_path)
    verdicts = [
        _check("qubit_element_error", element_err, 1e-12),
        _check("qubit_probability_error", prob_err, 1e-12),
        _check("identity_residual", identity_res, 1e-9),
        _check("two_step_probability_mismatch", oracle_err, 1e-9),
    ]
    return verdicts, [csv_path.name, fig_path.name]


def _run_sweep(cfg: dict, outdir: Path):
    grid = cfg.get("grid", [round(0.1 * i, 1) for i in range(11)])
    opt = _opt_config(cfg, {"restarts": 16, "max_iterations": 400})
    table = sweep_overlap_frontier(grid, opt)
    csv_path = outdir / "sweep_frontier.csv"
    _write_csv(csv_path, ("s", "max_distinguishability"), table)
    fig_path = outdir / "sweep_frontier.png"
    render_sweep_figure(table, fig_path)
    verdicts = []
    interior = [d for s, d in table if 1e-12 < s < 1.0 - 1e-12]
    if interior:
        verdicts.append(_check("interior_max_distinguishability", max(interior), 1e-4))
    for s, d in table:
        if s <= 1e-12:
            verdicts.append(_check("orthogonal_point_distinguishability", d, 0.999, ">"))
        if s >= 1.0 - 1e-12:
            verdicts.append(_check("identical_point_distinguishability", d, 1e-6))
    return verdicts, [csv_path.name, fig_path.name]


_RUNNERS = {
    "identity": lambda cfg, outdir: _run_identity(cfg),
    "record-orthogonality": lambda cfg, outdir: _run_record_orthogonality(cfg),
    "actionability": lambda cfg, outdir: _run_actionability(cfg),
    "mixtures": lambda cfg, outdir: _run_mixtures(cfg),
    "purified": lambda cfg, outdir: _run_purified(cfg),
    "bell": lambda cfg, outdir: _run_bell(cfg),
    "povm": _run_povm,
    "sweep": _run_sweep,
}


def run(config_path, outdir="out", seed_override=None, quiet=False) -> tuple:
    """Execute one scenario; returns (RunReport, exit_status)."""
    cfg = load_config(config_path)
    if seed_override is not None:
        cfg["seed"] = int(seed_override)
    scenario_dir = Path(outdir) / cfg["name"]
    scenario_dir.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    verdicts, artifacts = _RUNNERS[cfg["kind"]](cfg, scenario_dir)
    report = RunReport(
        scenario=cfg,
        verdicts=verdicts,
        artifacts=artifacts,
        wall_time=time.perf_counter() - start,
    )
    report_path = scenario_dir / "report.json"
    report_path.write_text(json.dumps(report.as_record(), indent=2) + "\n", encoding="utf-8")
    if not quiet:
        for v in verdicts:
            status = "pass" if v.passed else "FAIL"
            print(f"[{cfg['name']}] {v.name}: {v.value:.3e} {v.op} {v.threshold:.3e}  {status}")
        print(f"[{cfg['name']}] report: {report_path}")
    return report, (0 if report.passed else 1)


def run_suite(directory, outdir="out", seed_override=None, quiet=False) -> tuple:
    """Run every *.json config in a directory (sorted by name)."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigError(f"suite directory {directory} does not exist")
    entries = []
    status = 0
    for path in sorted(directory.glob("*.json")):
        report, code = run(path, outdir=outdir, seed_override=seed_override, quiet=quiet)
        entries.append({
            "name": report.scenario["name"],
            "pass": report.passed,
            "report": f"{report.scenario['name']}/report.json",
        })
        status = max(status, code)
    aggregate = {"scenarios": entries, "pass": all(e["pass"] for e in entries)}
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "suite_report.json").write_text(
        json.dumps(aggregate, indent=2) + "\n", encoding="utf-8")
    if not quiet:
        print(f"suite: {len(entries)} scenarios, pass={aggregate['pass']}")
    return aggregate, status


def default_suite_dir() -> Path:
    """Directory holding the bundled default scenario suite."""
    return Path(__file__).resolve().parent / "configs"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="qreclab",
        description="Run quantum-record scenarios and emit machine-readable reports.",
    )
    parser.add_argument("--config", help="path to a single scenario config (JSON)")
    parser.add_argument("--suite", help="directory of scenario configs, or 'default'")
    parser.add_argument("--outdir", default="out", help="output directory (default ./out)")
    parser.add_argument("--seed", type=int, default=None, help="override the config seed")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command")
    povm_parser = sub.add_parser("povm", help="run the sequential-measurement scenario")
    povm_parser.add_argument("--config", help="optional povm scenario config")
    povm_parser.add_argument("--outdir", default="out")
    povm_parser.add_argument("--seed", type=int, default=None)
    povm_parser.add_argument("--quiet", action="store_true")

    args = parser.parse_args(argv)
    try:
        if args.command == "povm":
            if args.config:
                _, status = run(args.config, args.outdir, args.seed, args.quiet)
                return status
            cfg_path = default_suite_dir() / "povm.json"
            _, status = run(cfg_path, args.outdir, args.seed, args.quiet)
            return status
        if args.config and args.suite:
            raise ConfigError("pass either --config or --suite, not both")
        if args.config:
            _, status = run(args.config, args.outdir, args.seed, args.quiet)
            return status
        if args.suite:
            suite = default_suite_dir() if args.suite == "default" else args.suite
            _, status = run_suite(suite, args.outdir, args.seed, args.quiet)
            return status
        parser.print_help()
        return 2
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
