"""Experiment runner CLI.

Subcommands:

* ``run --config FILE [--mode M] [--out DIR]`` — generate an instance,
  solve it with the requested weight-handling modes, and write trace CSVs,
  a metrics JSON, solution vectors and report figures.
* ``verify [--seeds A..B]`` — run the oracle/invariant suite and print a
  pass/fail table.
* ``generate --spec FILE --out FILE`` — write a portable instance record.

Configs are YAML (JSON parses as YAML, so machine-generated configs work
unchanged). One config-level seed feeds every random draw through named
sub-seeds, so a config maps to byte-identical CSV/JSON outputs.

Exit codes: 0 success, 1 config parse failure, 2 I/O failure, 3 failed
verification. The ``BLINDSPARSE_LOG`` environment variable sets the log
level.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import zlib
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
import yaml

from .linops import LinearOperator, adjoint_test, make_sparsifying_transform
from .pareto import ParetoConfig, solve_bpdn, solve_fixed_weights
from .projections import project_l1, project_l1_oracle
from .spg import SpgConfig, solve_lasso
from .synth import (ProblemSpec, generate, generate_record, joint_oracle,
                    recovery_metrics)
from .varpro import Instance, eval_projected_objective, normalize_pair

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_IO = 2
EXIT_VERIFY = 3

MODES = ("true-weights", "unit-weights", "estimated-weights")
EMIT_KINDS = ("trace-csv", "metrics-json", "solution-vectors", "figures")
TRACE_SCHEMA = "blindsparse-trace-v1"
METRICS_SCHEMA_VERSION = 1


class ConfigError(Exception):
    """Raised for unparseable or invalid configuration input."""


def _subseed(seed, name):
    """Derive a named child seed from the config-level seed."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(name.encode("utf-8"))])
    return int(ss.generate_state(1)[0])


@dataclass
class ExperimentConfig:
    seed: int
    problem: ProblemSpec
    solver_raw: dict
    modes: tuple[str, ...]
    output_dir: Path
    emit: tuple[str, ...]

    def pareto_config(self, instance_sigma):
        raw = dict(self.solver_raw)
        sub_raw = raw.pop("subproblem", {})
        sigma = raw.pop("sigma", "auto")
        if sigma == "auto":
            sigma = instance_sigma
        try:
            sub = SpgConfig(**sub_raw)
            return ParetoConfig(sigma=float(sigma), subproblem_cfg=sub, **raw)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad solver settings: {exc}") from exc


def _require_known_keys(section, mapping, known):
    unknown = set(mapping) - set(known)
    if unknown:
        raise ConfigError(f"unknown {section} key(s): {', '.join(sorted(unknown))}")


def _parse_problem(mapping, seed):
    _require_known_keys("problem", mapping,
                        ("n", "k", "channels", "rows_per_channel",
                         "weight_model", "noise_level", "transform", "seed"))
    fields = dict(mapping)
    fields.setdefault("seed", _subseed(seed, "instance"))
    try:
        return ProblemSpec(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad problem settings: {exc}") from exc


def parse_experiment_config(doc):
    """Validate a config mapping into an :class:`ExperimentConfig`."""
    if not isinstance(doc, dict):
        raise ConfigError("config must be a mapping")
    _require_known_keys("config", doc,
                        ("seed", "problem", "solver", "mode", "output_dir", "emit"))
    seed = doc.get("seed", 0)
    if not isinstance(seed, int) or seed < 0:
        raise ConfigError("seed must be a nonnegative integer")
    problem = _parse_problem(doc.get("problem", {}), seed)

    solver_raw = doc.get("solver", {})
    if not isinstance(solver_raw, dict):
        raise ConfigError("solver must be a mapping")
    _require_known_keys("solver", solver_raw,
                        ("sigma", "root_tol", "max_newton_steps",
                         "total_iteration_budget", "bracket_expansion", "subproblem"))
    _require_known_keys("solver.subproblem", solver_raw.get("subproblem", {}),
                        ("max_iters", "opt_tol", "step_min", "step_max",
                         "memory", "sufficient_decrease", "max_backtracks"))

    mode = doc.get("mode", "all")
    modes = tuple(MODES) if mode == "all" else tuple(np.atleast_1d(mode))
    if not modes:
        raise ConfigError("at least one mode is required")
    for m in modes:
        if m not in MODES:
            raise ConfigError(f"unknown mode {m!r}; choose from {MODES} or 'all'")

    emit = doc.get("emit", list(EMIT_KINDS))
    if emit is None:
        emit = []
    for kind in emit:
        if kind not in EMIT_KINDS:
            raise ConfigError(f"unknown emit kind {kind!r}; choose from {EMIT_KINDS}")

    return ExperimentConfig(seed=seed, problem=problem, solver_raw=solver_raw,
                            modes=modes, output_dir=Path(doc.get("output_dir", "results")),
                            emit=tuple(emit))


def _load_yaml(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from exc


def _fmt(x):
    return repr(float(x))


def _write_trace_csv(path, mode, trace):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={TRACE_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["mode", "newton_step", "inner_iter", "tau", "objective",
                         "projected_grad_norm", "cumulative_iters"])
        cumulative = 0
        for si, step in enumerate(trace.steps):
            if not step.history:
                writer.writerow([mode, si, 0, _fmt(step.tau), _fmt(step.value),
                                 "", cumulative])
                continue
            for j, (value, pg_norm, _) in enumerate(step.history):
                if j > 0:
                    cumulative += 1
                writer.writerow([mode, si, j, _fmt(step.tau), _fmt(value),
                                 _fmt(pg_norm), cumulative])


def _write_solution_csv(path, x):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={TRACE_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["index", "x"])
        for i, v in enumerate(x):
            writer.writerow([i, _fmt(v)])


def _write_weights_csv(path, alpha):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(f"# schema={TRACE_SCHEMA}\n")
        writer = csv.writer(fh)
        writer.writerow(["channel", "alpha_re", "alpha_im", "amplitude", "phase"])
        for i, a in enumerate(alpha):
            writer.writerow([i, _fmt(a.real), _fmt(a.imag), _fmt(abs(a)),
                             _fmt(np.angle(a))])


def run_experiment(cfg):
    """Execute one experiment config; returns a process exit code."""
    inst, truth = generate(cfg.problem)
    pcfg = cfg.pareto_config(inst.sigma)
    sig2 = pcfg.sigma ** 2
    target_norm = float(np.linalg.norm(truth.alpha_true))

    traces, solutions, weights, metrics = {}, {}, {}, {}
    for mode in cfg.modes:
        if mode == "true-weights":
            trace = solve_fixed_weights(inst, truth.alpha_true, pcfg)
        elif mode == "unit-weights":
            trace = solve_fixed_weights(inst, np.ones(inst.n_channels), pcfg)
        else:
            trace = solve_bpdn(inst, pcfg)
        x_hat, a_hat = trace.final_x, trace.final_weights
        if np.linalg.norm(a_hat) > 0:
            x_hat, a_hat = normalize_pair(x_hat, a_hat, target_norm)
        traces[mode] = trace
        solutions[mode], weights[mode] = x_hat, a_hat
        metrics[mode] = recovery_metrics(x_hat, a_hat, truth, target_norm)
        logger.info("mode %s finished: status=%s tau=%.6g value=%.6g",
                    mode, trace.status, trace.final_tau, trace.final_value)

    if cfg.emit:
        try:
            cfg.output_dir.mkdir(parents=True, exist_ok=True)
            if "trace-csv" in cfg.emit:
                for mode in cfg.modes:
                    _write_trace_csv(cfg.output_dir / f"trace_{mode}.csv",
                                     mode, traces[mode])
            if "metrics-json" in cfg.emit:
                doc = {
                    "schema_version": METRICS_SCHEMA_VERSION,
                    "seed": cfg.seed,
                    "sigma": pcfg.sigma,
                    "problem": asdict(cfg.problem),
                    "modes": {
                        mode: {
                            "status": traces[mode].status,
                            "tau": traces[mode].final_tau,
                            "objective": traces[mode].final_value,
                            "root_residual": abs(traces[mode].final_value - sig2),
                            "l1_norm": float(np.abs(solutions[mode]).sum()),
                            "newton_steps": len(traces[mode].steps),
                            "total_inner_iterations": traces[mode].total_inner_iterations,
                            "recovery": metrics[mode].as_dict(),
                        } for mode in cfg.modes
                    },
                }
                with open(cfg.output_dir / "metrics.json", "w", encoding="utf-8") as fh:
                    json.dump(doc, fh, indent=2, sort_keys=True)
                    fh.write("\n")
            if "solution-vectors" in cfg.emit:
                for mode in cfg.modes:
                    _write_solution_csv(cfg.output_dir / f"solution_{mode}.csv",
                                        solutions[mode])
                    _write_weights_csv(cfg.output_dir / f"weights_{mode}.csv",
                                       weights[mode])
            if "figures" in cfg.emit:
                from . import plots
                xt, at = normalize_pair(truth.x_true, truth.alpha_true, target_norm)
                plots.render_convergence(traces, pcfg.sigma,
                                         cfg.output_dir / "convergence.png")
                plots.render_weights(weights, at, cfg.output_dir / "weights.png")
                plots.render_models(solutions, xt, cfg.output_dir / "models.png")
        except OSError as exc:
            print(f"error: cannot write outputs: {exc}", file=sys.stderr)
            return EXIT_IO

    for mode in cfg.modes:
        print(f"{mode}: status={traces[mode].status} tau={traces[mode].final_tau:.6g} "
              f"objective={traces[mode].final_value:.6g} "
              f"model_error={metrics[mode].model_error:.4g}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# verification suite


def _negated_adjoint(op):
    return LinearOperator(op.domain_dim, op.range_dim, op.forward,
                          lambda w: -op.adjoint(w),
                          domain_field=op.domain_field, range_field=op.range_field)


def _small_spec(seed, **overrides):
    fields = dict(n=32, k=4, channels=3, rows_per_channel=4,
                  weight_model="random-phase", noise_level=0.05,
                  seed=seed, transform="dct")
    fields.update(overrides)
    return ProblemSpec(**fields)


def _fd_gradient(f, x, h):
    grad = np.empty_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        grad[j] = (f(x + e) - f(x - e)) / (2.0 * h)
    return grad


def _check_adjoints(seed, inject_fault=False):
    inst, _ = generate(_small_spec(seed))
    worst = 0.0
    for i, ch in enumerate(inst.channels):
        op = _negated_adjoint(ch) if (inject_fault and i == 0) else ch
        worst = max(worst, adjoint_test(op, trials=20, seed=seed + i))
    return worst


def _check_transforms(seed):
    worst = 0.0
    for kind in ("identity", "dct", "orthonormal-wavelet"):
        op = make_sparsifying_transform(kind, 32)
        worst = max(worst, adjoint_test(op, trials=20, seed=seed))
    return worst


def _check_fault_detector(seed):
    inst, _ = generate(_small_spec(seed, channels=2, rows_per_channel=2))
    return min(adjoint_test(_negated_adjoint(ch), trials=20, seed=seed)
               for ch in inst.channels)


def _check_projection(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        dim = int(rng.integers(1, 33))
        z = rng.standard_normal(dim) * rng.uniform(0.5, 3.0)
        tau = rng.uniform(0.0, 1.2) * np.abs(z).sum()
        worst = max(worst, float(np.max(np.abs(project_l1(z, tau)
                                               - project_l1_oracle(z, tau)))))
    return worst


def _check_gradient(seed):
    inst, _ = generate(_small_spec(seed, n=16, k=3, rows_per_channel=2))
    rng = np.random.default_rng(seed + 1)
    worst = 0.0
    for _ in range(3):
        x = rng.standard_normal(inst.domain_dim)
        ev = eval_projected_objective(inst, x)
        h = 1e-6 * np.linalg.norm(x)
        fd = _fd_gradient(lambda v: eval_projected_objective(inst, v).value, x, h)
        worst = max(worst, float(np.linalg.norm(fd - ev.gradient)
                                 / max(np.linalg.norm(ev.gradient), 1e-300)))
    return worst


def _check_subproblem_oracle(seed):
    rng = np.random.default_rng(seed)
    n, m = 8, 5
    ops, data = [], []
    x_true = project_l1(rng.standard_normal(n), 2.0)
    for _ in range(2):
        mat = (rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n)))
        op = LinearOperator(n, m, lambda u, a=mat: a @ u,
                            lambda w, a=mat: a.conj().T @ w)
        alpha = np.exp(1j * rng.uniform(-np.pi, np.pi))
        noise = (rng.standard_normal(m) + 1j * rng.standard_normal(m)) * 0.05
        ops.append(op)
        data.append(alpha * op.forward(x_true) + noise)
    inst = Instance(channels=tuple(ops), data=tuple(data))
    tau = 0.6 * np.abs(x_true).sum()
    spg = solve_lasso(inst, tau, cfg=SpgConfig(max_iters=2000, opt_tol=1e-10))
    oracle = joint_oracle(inst, tau, restarts=20, seed=seed + 1)
    scale = max(oracle.value, 1e-12 * inst.data_energy)
    return abs(spg.value - oracle.value) / scale


def run_verification(seeds, inject_fault=False):
    """Run the oracle/invariant suite; returns (rows, all_passed)."""
    checks = [
        ("adjoint:channel-operators",
         lambda s: _check_adjoints(s, inject_fault), 1e-10, "<="),
        ("adjoint:transforms", _check_transforms, 1e-10, "<="),
        ("adjoint:fault-detector", _check_fault_detector, 0.5, ">="),
        ("projection:oracle-equivalence", _check_projection, 1e-10, "<="),
        ("varpro:gradient-fd", _check_gradient, 1e-6, "<="),
        ("subproblem:oracle-equivalence", _check_subproblem_oracle, 1e-4, "<="),
    ]
    rows = []
    all_ok = True
    for name, fn, threshold, sense in checks:
        values = [fn(s) for s in seeds]
        worst = max(values) if sense == "<=" else min(values)
        ok = (worst <= threshold) if sense == "<=" else (worst >= threshold)
        rows.append((name, worst, f"{sense}{threshold:g}", ok))
        all_ok &= ok
    return rows, all_ok


def _parse_seed_range(text):
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            return range(int(lo), int(hi))
        value = int(text)
        return range(value, value + 1)
    except ValueError as exc:
        raise ConfigError(f"bad seed range {text!r}; expected A..B") from exc


# ---------------------------------------------------------------------------
# subcommands


def _cmd_run(args):
    doc = _load_yaml(args.config)
    cfg = parse_experiment_config(doc)
    if args.mode:
        cfg = replace(cfg, modes=tuple(MODES) if args.mode == "all" else (args.mode,))
    if args.out:
        cfg = replace(cfg, output_dir=Path(args.out))
    return run_experiment(cfg)


def _cmd_verify(args):
    seeds = list(_parse_seed_range(args.seeds))
    if not seeds:
        print("0 checks (empty seed range)")
        return EXIT_OK
    rows, all_ok = run_verification(seeds, inject_fault=args.inject_adjoint_fault)
    width = max(len(name) for name, *_ in rows)
    for name, worst, threshold, ok in rows:
        print(f"{name:<{width}}  {worst:>12.4e}  {threshold:>10}  "
              f"{'pass' if ok else 'FAIL'}")
    if not all_ok:
        first = next(name for name, _, _, ok in rows if not ok)
        print(f"FAIL: {first}")
        return EXIT_VERIFY
    print(f"all {len(rows)} checks passed over seeds {seeds[0]}..{seeds[-1] + 1}")
    return EXIT_OK


def _cmd_generate(args):
    doc = _load_yaml(args.spec)
    if not isinstance(doc, dict):
        raise ConfigError("spec must be a mapping")
    fields = doc.get("problem", doc)
    _require_known_keys("problem spec", fields,
                        ("n", "k", "channels", "rows_per_channel",
                         "weight_model", "noise_level", "transform", "seed"))
    try:
        spec = ProblemSpec(**fields)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad problem spec: {exc}") from exc
    record = generate_record(spec)
    try:
        out = Path(args.out)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        print(f"error: cannot write {args.out}: {exc}", file=sys.stderr)
        return EXIT_IO
    print(f"wrote instance with {spec.channels} channels to {args.out}")
    return EXIT_OK


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="blindsparse",
        description="Sparse recovery experiments with unknown per-channel weights.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("--config", required=True, help="YAML/JSON experiment config")
    p_run.add_argument("--mode", choices=MODES + ("all",), default=None,
                       help="override the config's mode selection")
    p_run.add_argument("--out", default=None, help="override the output directory")
    p_run.set_defaults(func=_cmd_run)

    p_verify = sub.add_parser("verify", help="run the oracle/invariant suite")
    p_verify.add_argument("--seeds", default="0..4",
                          help="seed range A..B (half-open), default 0..4")
    p_verify.add_argument("--inject-adjoint-fault", action="store_true",
                          help="debug: corrupt one adjoint to prove the detector trips")
    p_verify.set_defaults(func=_cmd_verify)

    p_gen = sub.add_parser("generate", help="write a portable instance record")
    p_gen.add_argument("--spec", required=True, help="YAML/JSON problem spec")
    p_gen.add_argument("--out", required=True, help="output JSON path")
    p_gen.set_defaults(func=_cmd_generate)
    return parser


def main(argv=None):
    level = os.environ.get("BLINDSPARSE_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
