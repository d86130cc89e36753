"""Adam over finite-difference gradients, and the bridge / purifier objectives."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from joblib import Parallel, delayed

from .channels import (
    ENTANGLING_FLOOR,
    N_ANGLES,
    affine_map,
    bridge_ptm,
    entangling_weight,
    ptm_l1,
    purification_kraus,
)
from .quantum import fidelity, purity, sample_qubit_with_purity

PURIFIER_SENTINEL = 1e6


class OptimizationDiverged(RuntimeError):
    pass


@dataclass
class OptimizerConfig:
    learning_rate: float = 0.01
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon_hat: float = 1e-8
    max_iters: int = 5000
    fd_step: float = 1e-4
    n_restarts: int = 16
    penalty_weight: float = 100.0
    seed: int = 0
    mode: str = "entrywise"
    # stop a restart once the best value has not moved by more than
    # ``tol`` for ``patience`` iterations; patience=0 disables
    patience: int = 500
    tol: float = 1e-9
    n_jobs: int = 1

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if self.fd_step <= 0:
            raise ValueError("fd_step must be positive")
        if self.max_iters < 1 or self.n_restarts < 1:
            raise ValueError("max_iters and n_restarts must be at least 1")
        if self.mode not in ("entrywise", "max_column"):
            raise ValueError(f"unknown norm mode {self.mode!r}")


@dataclass
class OptimizationTrace:
    values: list[float] = field(default_factory=list)
    best_x: np.ndarray | None = None
    best_value: float = np.inf

    def record(self, x: np.ndarray, value: float) -> None:
        self.values.append(value)
        if value < self.best_value:
            self.best_value = value
            self.best_x = x.copy()


def finite_diff_gradient(f: Callable[[np.ndarray], float], x: np.ndarray, h: float = 1e-4) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    step = np.zeros_like(x)
    for i in range(x.size):
        step[i] = h
        fp, fm = f(x + step), f(x - step)
        step[i] = 0.0
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise OptimizationDiverged(f"objective is not finite near coordinate {i}")
        grad[i] = (fp - fm) / (2 * h)
    return grad


def adam_minimize(
    f: Callable[[np.ndarray], float],
    x0: Sequence[float],
    config: OptimizerConfig,
    grad: Callable[[np.ndarray], np.ndarray] | None = None,
) -> tuple[np.ndarray, OptimizationTrace]:
    """Minimise ``f`` with bias-corrected Adam; returns the best iterate seen."""
    x = np.array(x0, dtype=float)
    grad = grad or (lambda z: finite_diff_gradient(f, z, config.fd_step))
    m = np.zeros_like(x)
    v = np.zeros_like(x)
    b1, b2 = config.beta1, config.beta2
    trace = OptimizationTrace()
    stale, anchor = 0, np.inf
    for t in range(1, config.max_iters + 1):
        value = f(x)
        if not np.isfinite(value):
            raise OptimizationDiverged(f"objective became {value} at iteration {t}")
        trace.record(x, value)
        if config.patience:
            if trace.best_value < anchor - config.tol:
                anchor, stale = trace.best_value, 0
            else:
                stale += 1
                if stale >= config.patience:
                    break
        g = grad(x)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        m_hat = m / (1 - b1**t)
        v_hat = v / (1 - b2**t)
        x = x - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon_hat)
    else:
        value = f(x)
        if not np.isfinite(value):
            raise OptimizationDiverged(f"objective became {value} after the last update")
        trace.record(x, value)
    return trace.best_x, trace


def bridge_objective(theta: Sequence[float], mode: str = "entrywise", penalty_weight: float = 100.0) -> float:
    """Negative bridge PTM norm plus a hinge penalty keeping the entangling angles off zero."""
    hinge = max(0.0, ENTANGLING_FLOOR - entangling_weight(theta))
    return -ptm_l1(bridge_ptm(theta), mode) + penalty_weight * hinge


def bridge_norm(theta: Sequence[float], mode: str = "entrywise") -> float:
    return ptm_l1(bridge_ptm(theta), mode)


def _with_fixed(free: np.ndarray, template: np.ndarray, mask: np.ndarray) -> np.ndarray:
    full = template.copy()
    full[mask] = free
    return full


def _restart_inits(seed: int, n_restarts: int, size: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.uniform(-np.pi, np.pi, size=size) for _ in range(n_restarts)]


def _run_restarts(f, inits, config):
    def one(x0):
        try:
            return adam_minimize(f, x0, config)
        except OptimizationDiverged:
            return None

    if config.n_jobs == 1:
        return [one(x0) for x0 in inits]
    return Parallel(n_jobs=config.n_jobs)(delayed(one)(x0) for x0 in inits)


def optimize_bridge(
    config: OptimizerConfig, fixed: dict[int, float] | None = None
) -> tuple[np.ndarray, OptimizationTrace]:
    """Multi-start search for the bridge angles maximising the PTM norm.

    ``fixed`` pins selected angles (0-based index -> value); the rest are free.
    """
    fixed = fixed or {}
    mask = np.ones(N_ANGLES, dtype=bool)
    template = np.zeros(N_ANGLES)
    for i, val in fixed.items():
        mask[i] = False
        template[i] = val

    def f(free):
        return bridge_objective(_with_fixed(free, template, mask), config.mode, config.penalty_weight)

    inits = _restart_inits(config.seed, config.n_restarts, int(mask.sum()))
    results = [r for r in _run_restarts(f, inits, config) if r is not None]
    if not results:
        raise OptimizationDiverged("every bridge restart diverged")
    best_free, trace = min(results, key=lambda r: r[1].best_value)
    theta = _with_fixed(best_free, template, mask)
    trace.best_x = theta
    return theta, trace


def purification_objective(gamma: Sequence[float]) -> float:
    """| ||Gamma^T Gamma||_F / ||q|| - 1 | for the ancilla-assisted purification channel."""
    amap = affine_map(purification_kraus(gamma))
    qn = np.linalg.norm(amap.q)
    if qn < 1e-9:
        return PURIFIER_SENTINEL
    return abs(np.linalg.norm(amap.Gamma.T @ amap.Gamma) / qn - 1.0)


@dataclass
class PurifierValidation:
    purity_in: np.ndarray
    purity_out: np.ndarray
    fidelity: np.ndarray

    @property
    def mean_purity_in(self) -> float:
        return float(self.purity_in.mean())

    @property
    def mean_purity_out(self) -> float:
        return float(self.purity_out.mean())

    @property
    def mean_fidelity(self) -> float:
        return float(self.fidelity.mean())

    @property
    def purity_gain(self) -> float:
        return self.mean_purity_out - self.mean_purity_in


def validation_states(n: int, p_range=(0.51, 0.53), seed: int = 0) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [sample_qubit_with_purity(p_range, rng) for _ in range(n)]


def validate_purifier(gamma: Sequence[float], states: Sequence[np.ndarray]) -> PurifierValidation:
    K0, K1 = purification_kraus(gamma)
    p_in, p_out, fid = [], [], []
    for rho in states:
        out = K0 @ rho @ K0.conj().T + K1 @ rho @ K1.conj().T
        p_in.append(purity(rho))
        p_out.append(purity(out))
        fid.append(fidelity(out, rho))
    return PurifierValidation(np.array(p_in), np.array(p_out), np.array(fid))


def optimize_purifier(
    config: OptimizerConfig,
    n_validation: int = 1000,
    p_range: tuple[float, float] = (0.51, 0.53),
    fidelity_floor: float = 0.8,
    objective_cut: float = 0.1,
) -> tuple[np.ndarray, OptimizationTrace, PurifierValidation]:
    """Multi-start minimisation of the purifier objective, then selection on held-out states.

    Restarts under ``objective_cut`` are scored by mean purity gain among
    those keeping mean fidelity at or above ``fidelity_floor``.
    """
    inits = _restart_inits(config.seed, config.n_restarts, N_ANGLES)
    results = [r for r in _run_restarts(purification_objective, inits, config) if r is not None]
    states = validation_states(n_validation, p_range, seed=config.seed + 1)
    best = None
    for gamma, trace in results:
        if trace.best_value >= objective_cut:
            continue
        report = validate_purifier(gamma, states)
        if report.mean_fidelity < fidelity_floor:
            continue
        if best is None or report.purity_gain > best[2].purity_gain:
            best = (gamma, trace, report)
    if best is None:
        raise OptimizationDiverged("no purifier restart met the objective cut and fidelity floor")
    return best
