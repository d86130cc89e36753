"""Command-line driver: channel optimisation, STM benchmarks, timestep sweeps, diagnostics.

Every command reads one config document and writes comma-separated tables
plus a ``manifest.json`` into the output directory.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import datetime as _dt
import hashlib
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channels import N_ANGLES, bridge_diagnostics, bridge_ptm, ptm_l1
from .config import ConfigError, ExperimentConfig, load_config, override_seed
from .learning import stm_task, timestep_sweep
from .optimize import (
    OptimizationDiverged,
    bridge_objective,
    optimize_bridge,
    optimize_purifier,
    purification_objective,
)
from .reservoir import ReservoirSpec

log = logging.getLogger("bridgeqrc")

OUT_ENV = "BRIDGEQRC_OUT"
PAULI_LABELS = [a + b for a in "IXYZ" for b in "IXYZ"]

PUBLISHED_THETA = np.array([0, 0, 0, 0, 0, 0, 0.216, 0.469, 1.023, 0, 0, 0, 0, 0, 0], dtype=float)
PUBLISHED_GAMMA = np.array([0, 0, 0, 0, 0, 0, 0.44, 1.13, 0.44, 0, 0, 0, 0, 0, 0], dtype=float)
# theta_7 = pi/4 gives maximally entangled basis states; a pi/4 Z rotation on b turns
# them into the standard Bell states
BELL_THETA = np.array([0, 0, 0, 0, 0, np.pi / 4, np.pi / 4, 0, 0, 0, 0, 0, 0, 0, 0], dtype=float)


def angle_names(prefix: str) -> list[str]:
    return [f"{prefix}_{i}" for i in range(1, N_ANGLES + 1)]


def write_record(path: Path, kind: str, angles: np.ndarray, **meta) -> None:
    prefix = "theta" if kind == "bridge" else "gamma"
    record = {"kind": kind, "angles": dict(zip(angle_names(prefix), map(float, angles)))}
    record.update({k: (float(v) if isinstance(v, (np.floating, float)) else v) for k, v in meta.items()})
    path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def read_record(path: str | Path) -> dict:
    record = json.loads(Path(path).read_text())
    angles = record.get("angles")
    if not isinstance(angles, dict) or len(angles) != N_ANGLES:
        raise ValueError(f"{path}: parameter record needs {N_ANGLES} named angles")
    prefix = "theta" if record.get("kind", "bridge") == "bridge" else "gamma"
    record["vector"] = np.array([float(angles[n]) for n in angle_names(prefix)])
    return record


def write_table(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])


def write_manifest(out: Path, cfg: ExperimentConfig | None, command: str, files: list[Path], started, **extra) -> None:
    manifest = {
        "command": command,
        "artifact_version": __version__,
        "config_hash": cfg.digest() if cfg else None,
        "seeds": (
            {"reservoir": cfg.reservoir.seed, "optimizer": cfg.optimizer.seed, "signal": cfg.task.signal_seed}
            if cfg
            else {}
        ),
        "started": started.isoformat(),
        "finished": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "outputs": {f.name: hashlib.sha256(f.read_bytes()).hexdigest() for f in files},
    }
    manifest.update(extra)
    (out / f"manifest_{command}.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=str) + "\n")


def _angles_from(value, kind: str, cfg: ExperimentConfig) -> np.ndarray | None:
    if isinstance(value, (list, tuple)):
        if len(value) != N_ANGLES:
            raise ConfigError(f"{kind} needs {N_ANGLES} angles, got {len(value)}")
        return np.asarray(value, dtype=float)
    if value == "none":
        return None
    if value == "zeros":
        return np.zeros(N_ANGLES)
    if value == "published":
        return PUBLISHED_THETA.copy() if kind == "bridge" else PUBLISHED_GAMMA.copy()
    if value == "bell" and kind == "bridge":
        return BELL_THETA.copy()
    if value == "optimize":
        if kind == "bridge":
            theta, _ = optimize_bridge(cfg.optimizer)
            return theta
        gamma, _, _ = _optimize_purifier(cfg)
        return gamma
    if isinstance(value, str) and Path(value).exists():
        return read_record(value)["vector"]
    raise ConfigError(f"cannot resolve {kind} parameters from {value!r}")


def _optimize_purifier(cfg: ExperimentConfig):
    p = cfg.purifier
    return optimize_purifier(cfg.optimizer, p.n_states, tuple(p.purity_range), p.fidelity_floor, p.objective_cut)


def _base_spec(cfg: ExperimentConfig, theta, gamma, tau: float) -> ReservoirSpec:
    r = cfg.reservoir
    return ReservoirSpec(
        n_A=r.n_A,
        n_B=r.n_B,
        tau=tau,
        K=r.K,
        encoding_qubit=r.encoding_qubit,
        bridge_qubits=tuple(r.bridge_qubits) if r.bridge_qubits else None,
        readout=cfg.task.readout,
        theta=theta,
        gamma_A=gamma,
        gamma_B=gamma,
        pipeline=r.pipeline,
        coupling_scale=r.coupling_scale,
        seed=r.seed,
    )


def _sweep(cfg: ExperimentConfig, spec: ReservoirSpec, n_jobs: int):
    t = cfg.task
    return timestep_sweep(
        spec, t.tau_candidates, t.sweep_samples, t.d_max, cfg.split, t.signal_seed, t.ridge_lambda, n_jobs
    )


def _resolve_tau(cfg: ExperimentConfig, spec: ReservoirSpec, n_jobs: int) -> float:
    tau = cfg.reservoir.tau
    if isinstance(tau, (int, float)):
        return float(tau)
    if tau == "sweep":
        return _sweep(cfg, spec, n_jobs).best_tau
    manifest = json.loads(Path(tau).read_text())
    return float(manifest["selected_tau"])


def cmd_optimize_bridge(cfg: ExperimentConfig, out: Path, n_jobs: int) -> list[Path]:
    cfg.optimizer.n_jobs = n_jobs
    theta, trace = optimize_bridge(cfg.optimizer)
    mode = cfg.optimizer.mode
    R = bridge_ptm(theta)
    diag = bridge_diagnostics(R)
    params = out / "bridge_params.json"
    write_record(
        params,
        "bridge",
        theta,
        objective=bridge_objective(theta, mode, cfg.optimizer.penalty_weight),
        mode=mode,
        norm=ptm_l1(R, mode),
        norm_entrywise=ptm_l1(R, "entrywise"),
        norm_max_column=ptm_l1(R, "max_column"),
        reshaped_rank=diag.reshaped_rank,
        seed=cfg.optimizer.seed,
        iterations=len(trace.values),
    )
    trace_path = out / "bridge_trace.csv"
    write_table(trace_path, ["iteration", "objective"], enumerate(trace.values))
    ptm_path = out / "bridge_ptm.csv"
    write_table(ptm_path, ["out/in"] + PAULI_LABELS, ([lab] + list(row) for lab, row in zip(PAULI_LABELS, R)))
    log.info("bridge norm (%s) = %.6f", mode, ptm_l1(R, mode))
    return [params, trace_path, ptm_path]


def cmd_optimize_purifier(cfg: ExperimentConfig, out: Path, n_jobs: int) -> list[Path]:
    cfg.optimizer.n_jobs = n_jobs
    gamma, trace, report = _optimize_purifier(cfg)
    params = out / "purifier_params.json"
    write_record(
        params,
        "purifier",
        gamma,
        objective=purification_objective(gamma),
        mean_purity_in=report.mean_purity_in,
        mean_purity_out=report.mean_purity_out,
        mean_fidelity=report.mean_fidelity,
        seed=cfg.optimizer.seed,
        iterations=len(trace.values),
    )
    trace_path = out / "purifier_trace.csv"
    write_table(trace_path, ["iteration", "objective"], enumerate(trace.values))
    report_path = out / "purifier_validation.csv"
    write_table(
        report_path,
        ["index", "purity_in", "purity_out", "fidelity"],
        zip(range(len(report.fidelity)), report.purity_in, report.purity_out, report.fidelity),
    )
    log.info("purity %.4f -> %.4f, fidelity %.4f", report.mean_purity_in, report.mean_purity_out, report.mean_fidelity)
    return [params, trace_path, report_path]


def cmd_run_stm(cfg: ExperimentConfig, out: Path, n_jobs: int) -> tuple[list[Path], dict]:
    cfg.optimizer.n_jobs = n_jobs
    theta = _angles_from(cfg.bridge.theta, "bridge", cfg)
    gamma = _angles_from(cfg.purifier.gamma, "purifier", cfg)
    t = cfg.task
    setups = t.setups or [[cfg.reservoir.n_A, cfg.reservoir.n_B]]
    files, taus = [], {}
    for n_A, n_B in setups:
        same = (n_A, n_B) == (cfg.reservoir.n_A, cfg.reservoir.n_B)
        section = dataclasses.replace(
            cfg.reservoir, n_A=n_A, n_B=n_B, bridge_qubits=cfg.reservoir.bridge_qubits if same else None
        )
        cfg_pair = dataclasses.replace(cfg, reservoir=section)
        base = _base_spec(cfg_pair, theta, gamma, 1.0)
        tau = _resolve_tau(cfg_pair, base, n_jobs)
        taus[f"{n_A}+{n_B}"] = tau
        rows = []
        for p in t.noise_levels:
            for purify in t.purification:
                g = gamma if purify else None
                if purify and gamma is None:
                    continue
                spec = base.replace(tau=tau, depolarization_p=float(p), gamma_A=g, gamma_B=g)
                res = stm_task(spec, t.d_max, t.n_samples, cfg.split, t.signal_seed, t.ridge_lambda, n_jobs)
                for r in res.rows():
                    rows.append([n_A, n_B, tau, float(p), int(purify), r["d"], r["ma_mean"], r["ma_std"], r["loss_mean"], r["loss_std"], r["n_samples"]])
                log.info("setup %d+%d p=%g purify=%s MA=%s", n_A, n_B, p, purify, np.round(res.ma_mean, 3))
        path = out / f"stm_nA{n_A}_nB{n_B}.csv"
        header = ["n_A", "n_B", "tau", "p", "purification", "d", "ma_mean", "ma_std", "loss_mean", "loss_std", "n_samples"]
        write_table(path, header, rows)
        files.append(path)
    return files, {"tau_by_setup": taus}


def cmd_sweep_timestep(cfg: ExperimentConfig, out: Path, n_jobs: int) -> tuple[list[Path], dict]:
    cfg.optimizer.n_jobs = n_jobs
    theta = _angles_from(cfg.bridge.theta, "bridge", cfg)
    gamma = _angles_from(cfg.purifier.gamma, "purifier", cfg)
    res = _sweep(cfg, _base_spec(cfg, theta, gamma, 1.0), n_jobs)
    path = out / "tau_sweep.csv"
    write_table(
        path,
        ["tau", "summed_loss", "echo_state_gap", "echo_state_ok"],
        ([r["tau"], r["summed_loss"], r["echo_state_gap"], int(r["echo_state_ok"])] for r in res.rows()),
    )
    log.info("selected tau = %g", res.best_tau)
    return [path], {"selected_tau": res.best_tau}


def diagnostics_report(theta: np.ndarray) -> dict:
    R = bridge_ptm(theta)
    d = bridge_diagnostics(R)
    return {
        "reshaped_rank": d.reshaped_rank,
        "row_l1_sums": [round(float(x), 12) for x in d.row_l1_sums],
        "col_l1_sums": [round(float(x), 12) for x in d.col_l1_sums],
        "total_l1": round(d.total_l1, 12),
        "norm_entrywise": round(ptm_l1(R, "entrywise"), 12),
        "norm_max_column": round(ptm_l1(R, "max_column"), 12),
        "verdict": "transfer possible" if d.transfers else "no transfer",
    }


def cmd_diagnostics(params: Path) -> dict:
    return diagnostics_report(read_record(params)["vector"])


COMMANDS = {
    "optimize-bridge": cmd_optimize_bridge,
    "optimize-purifier": cmd_optimize_purifier,
    "run-stm": cmd_run_stm,
    "sweep-timestep": cmd_sweep_timestep,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bridgeqrc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, type=Path)
        p.add_argument("--out", type=Path, default=None, help=f"output directory (default: ${OUT_ENV} or ./results)")
        p.add_argument("--seed", type=int, default=None, help="override every seed in the config")
        p.add_argument("--jobs", type=int, default=1)
        p.add_argument("-v", "--verbose", action="store_true")
    p = sub.add_parser("diagnostics")
    p.add_argument("params", type=Path, help="bridge parameter record (JSON)")
    p.add_argument("--out", type=Path, default=None, help="also write diagnostics.json here")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING, format="%(message)s")
    started = _dt.datetime.now(_dt.timezone.utc)

    if args.command == "diagnostics":
        try:
            report = cmd_diagnostics(args.params)
        except (OSError, ValueError, KeyError) as exc:
            print(f"error: cannot read parameter record {args.params}: {exc}", file=sys.stderr)
            return 2
        for key, value in report.items():
            print(f"{key}: {value}")
        if args.out:
            args.out.mkdir(parents=True, exist_ok=True)
            (args.out / "diagnostics.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
        return 0

    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"error: {args.config}: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: cannot read config {args.config}: {exc}", file=sys.stderr)
        return 2
    if args.seed is not None:
        override_seed(cfg, args.seed)
    out = args.out or Path(os.environ.get(OUT_ENV, "results"))
    out.mkdir(parents=True, exist_ok=True)

    try:
        result = COMMANDS[args.command](cfg, out, args.jobs)
    except (ConfigError, OptimizationDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    files, extra = result if isinstance(result, tuple) else (result, {})
    for f in files:
        if not f.exists() or f.stat().st_size == 0:
            print(f"error: output {f} was not written", file=sys.stderr)
            return 1
    write_manifest(out, cfg, args.command, files, started, **extra)
    return 0


if __name__ == "__main__":
    sys.exit(main())
