"""Two Ising reservoirs joined by a measurement bridge, driven one input at a time.

Register layout: qubits 0..n_A-1 belong to reservoir A, n_A..n_A+n_B-1 to B.
Bridge and encoding indices in :class:`ReservoirSpec` are local to their
reservoir.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .channels import bridge_projectors, build_ansatz, depolarization_kraus, purification_kraus
from .quantum import X, Z, HermitianEvolution, apply_local_kraus, embed_operator, local_superoperator

DEFAULT_PIPELINE = ("encode", "evolve_first", "bridge", "purify_A", "evolve_second", "purify_B", "depolarize")
# all K samples taken before the bridge, which then acts at the end of the interval
BRIDGE_LAST_PIPELINE = ("encode", "evolve_full", "bridge", "purify_A", "purify_B", "depolarize")
PIPELINES = {"default": DEFAULT_PIPELINE, "bridge_last": BRIDGE_LAST_PIPELINE}

STAGES = {"encode", "evolve_first", "evolve_second", "evolve_full", "bridge", "purify_A", "purify_B", "depolarize"}


def sample_couplings(n: int, scale: float = 1.0, rng: np.random.Generator | int | None = None):
    """Symmetric J with zero diagonal, entries U[-scale/2, scale/2]; fields U[-scale, scale]."""
    if scale < 0:
        raise ValueError("coupling scale must be non-negative")
    rng = np.random.default_rng(rng)
    upper = np.triu(rng.uniform(-scale / 2, scale / 2, size=(n, n)), k=1)
    J = upper + upper.T
    h = rng.uniform(-scale, scale, size=n)
    return J, h


def ising_hamiltonian(J: np.ndarray, h: np.ndarray) -> np.ndarray:
    """sum_{i<j} J_ij X_i X_j + sum_i h_i Z_i."""
    J = np.asarray(J, dtype=float)
    h = np.asarray(h, dtype=float)
    n = len(h)
    if J.shape != (n, n):
        raise ValueError(f"coupling matrix shape {J.shape} does not match {n} fields")
    if not np.allclose(J, J.T) or np.any(np.diag(J) != 0):
        raise ValueError("coupling matrix must be symmetric with zero diagonal")
    H = np.zeros((2**n, 2**n), dtype=complex)
    for i in range(n):
        H += h[i] * embed_operator(Z, [i], n)
        for j in range(i + 1, n):
            if J[i, j] != 0:
                H += J[i, j] * embed_operator(np.kron(X, X), [i, j], n)
    return H


@dataclass
class ReservoirSpec:
    n_A: int = 3
    n_B: int = 4
    tau: float = 1.0
    K: int = 10
    encoding_qubit: int = 0
    bridge_qubits: tuple[int, int] | None = None  # (a in A, b in B); default (n_A-1, 0)
    readout: str | Sequence[int] = "both"
    depolarization_p: float = 0.0
    theta: Sequence[float] = field(default_factory=lambda: np.zeros(15))
    gamma_A: Sequence[float] | None = None
    gamma_B: Sequence[float] | None = None
    pipeline: Sequence[str] = DEFAULT_PIPELINE
    coupling_scale: float = 1.0
    seed: int = 0
    J_A: np.ndarray | None = None
    h_A: np.ndarray | None = None
    J_B: np.ndarray | None = None
    h_B: np.ndarray | None = None

    def __post_init__(self):
        if self.n_A < 1 or self.n_B < 1:
            raise ValueError("each reservoir needs at least one qubit")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.tau < 0:
            raise ValueError("tau must be non-negative")
        if not 0 <= self.encoding_qubit < self.n_A:
            raise ValueError("encoding qubit must lie in reservoir A")
        if self.bridge_qubits is None:
            self.bridge_qubits = (self.n_A - 1, 0)
        a, b = self.bridge_qubits
        if not (0 <= a < self.n_A and 0 <= b < self.n_B):
            raise ValueError(f"bridge qubits {self.bridge_qubits} must be (index in A, index in B)")
        if not 0.0 <= self.depolarization_p <= 1.0:
            raise ValueError("depolarization probability must be in [0, 1]")
        if isinstance(self.pipeline, str):
            self.pipeline = PIPELINES[self.pipeline]
        unknown = set(self.pipeline) - STAGES
        if unknown:
            raise ValueError(f"unknown pipeline stages: {sorted(unknown)}")
        evolves = [s for s in self.pipeline if s.startswith("evolve")]
        if sorted(evolves) not in (["evolve_full"], ["evolve_first", "evolve_second"]):
            raise ValueError("pipeline must contain evolve_full, or evolve_first and evolve_second")
        self.theta = np.asarray(self.theta, dtype=float)
        if self.J_A is None or self.h_A is None or self.J_B is None or self.h_B is None:
            rng = np.random.default_rng(self.seed)
            J_A, h_A = sample_couplings(self.n_A, self.coupling_scale, rng)
            J_B, h_B = sample_couplings(self.n_B, self.coupling_scale, rng)
            self.J_A = J_A if self.J_A is None else self.J_A
            self.h_A = h_A if self.h_A is None else self.h_A
            self.J_B = J_B if self.J_B is None else self.J_B
            self.h_B = h_B if self.h_B is None else self.h_B

    @property
    def n_total(self) -> int:
        return self.n_A + self.n_B

    @property
    def bridge_global(self) -> tuple[int, int]:
        a, b = self.bridge_qubits
        return a, self.n_A + b

    @property
    def readout_qubits(self) -> list[int]:
        if isinstance(self.readout, str):
            if self.readout == "both":
                return list(range(self.n_total))
            if self.readout == "A":
                return list(range(self.n_A))
            if self.readout == "B":
                return list(range(self.n_A, self.n_total))
            raise ValueError(f"unknown readout selection {self.readout!r}")
        return sorted(int(q) for q in self.readout)

    def replace(self, **changes) -> "ReservoirSpec":
        return replace(self, **changes)


def build_hamiltonians(spec: ReservoirSpec) -> tuple[np.ndarray, np.ndarray]:
    return ising_hamiltonian(spec.J_A, spec.h_A), ising_hamiltonian(spec.J_B, spec.h_B)


def encoding_vector(s: float) -> np.ndarray:
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"input value {s} outside [0, 1]")
    return np.array([np.sqrt(1 - s), np.sqrt(s)], dtype=complex)


def encode(rho: np.ndarray, s: float, qubit: int) -> np.ndarray:
    """Replace ``qubit`` by |psi_s><psi_s|, leaving the rest of the register's marginal intact."""
    psi = encoding_vector(s)
    # replacement channel: K_j = |psi><j|
    ops = (np.outer(psi, [1, 0]), np.outer(psi, [0, 1]))
    return apply_local_kraus(rho, ops, [qubit])


def z_signs(n: int) -> np.ndarray:
    """(2^n, n) table of <b|Z_q|b> for every basis label b."""
    bits = (np.arange(2**n)[:, None] >> (n - 1 - np.arange(n))[None, :]) & 1
    return 1.0 - 2.0 * bits


def expectation_z(rho: np.ndarray, qubit: int) -> float:
    n = int(round(np.log2(rho.shape[0])))
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range")
    return float(np.real(np.diag(rho)) @ z_signs(n)[:, qubit])


def ground_state(n: int) -> np.ndarray:
    rho = np.zeros((2**n, 2**n), dtype=complex)
    rho[0, 0] = 1.0
    return rho


@dataclass
class ReservoirState:
    rho: np.ndarray
    step_index: int = 0


class Reservoir:
    """A ReservoirSpec compiled into cached unitaries and Kraus sets."""

    def __init__(self, spec: ReservoirSpec):
        self.spec = spec
        n = spec.n_total
        H_A, H_B = build_hamiltonians(spec)
        evo_A, evo_B = HermitianEvolution(H_A), HermitianEvolution(H_B)

        self._readout = spec.readout_qubits
        zsigns = z_signs(n)[:, self._readout]
        K = spec.K
        first, second = (K + 1) // 2, K // 2
        self._segments = {}
        for name, duration, count in (
            ("evolve_first", spec.tau / 2, first),
            ("evolve_second", spec.tau / 2, second),
            ("evolve_full", spec.tau, K),
        ):
            local = (evo_A.unitary(duration), evo_B.unitary(duration))
            obs = None
            if count:
                # Heisenberg-picture Z observables at each sampled sub-time. With
                # rho viewed as interleaved (re, im) floats, <Z_q>(t_k) = obs[k*n_read + q] . rho
                blocks = []
                for k in range(1, count + 1):
                    t = duration * k / count
                    Uk = np.kron(evo_A.unitary(t), evo_B.unitary(t))
                    for col in zsigns.T:
                        # tr(U rho U^dag Z) = sum_ij rho_ij (U^dag Z U)_ji
                        Ot = ((Uk.conj().T * col) @ Uk).T.ravel()
                        row = np.empty(2 * Ot.size)
                        row[0::2], row[1::2] = Ot.real, -Ot.imag
                        blocks.append(row)
                obs = np.array(blocks)
            self._segments[name] = (local, obs)
        self._bridge_op = local_superoperator(bridge_projectors(build_ansatz(spec.theta)))
        self._pur_A = None if spec.gamma_A is None else local_superoperator(purification_kraus(spec.gamma_A))
        self._pur_B = None if spec.gamma_B is None else local_superoperator(purification_kraus(spec.gamma_B))
        p = spec.depolarization_p
        self._depol = local_superoperator(depolarization_kraus(p)) if p > 0 else None
        bridge = set(spec.bridge_global)
        self._noisy = [q for q in range(n) if q not in bridge]
        self._dims = (2**spec.n_A, 2**spec.n_B)

    @property
    def n_features(self) -> int:
        return self.spec.K * len(self._readout)

    def initial_state(self) -> ReservoirState:
        return ReservoirState(ground_state(self.spec.n_total))

    def _left(self, U_A: np.ndarray, U_B: np.ndarray, M: np.ndarray) -> np.ndarray:
        """(U_A kron U_B) @ M, applying each factor on its own axis."""
        dA, dB = self._dims
        d = dA * dB
        M = (U_A @ M.reshape(dA, dB * d)).reshape(dA, dB, d)
        return np.matmul(U_B, M).reshape(d, d)

    def _evolve(self, rho: np.ndarray, stage: str, rows: list) -> np.ndarray:
        (U_A, U_B), obs = self._segments[stage]
        if obs is not None:
            rows.append(obs @ np.ascontiguousarray(rho).view(float).ravel())
        half = self._left(U_A, U_B, rho)
        return self._left(U_A, U_B, half.conj().T)

    def step(self, state: ReservoirState, s: float, check: bool = False) -> tuple[ReservoirState, np.ndarray]:
        """Run one input interval; returns the new state and K * len(readout) features.

        Features are ordered sub-time major, readout qubit minor.
        """
        spec = self.spec
        a, b = spec.bridge_global
        rho = state.rho
        rows: list[np.ndarray] = []
        for stage in spec.pipeline:
            if stage == "encode":
                rho = encode(rho, s, spec.encoding_qubit)
            elif stage.startswith("evolve"):
                rho = self._evolve(rho, stage, rows)
            elif stage == "bridge":
                rho = apply_local_kraus(rho, self._bridge_op, [a, b])
            elif stage == "purify_A" and self._pur_A is not None:
                rho = apply_local_kraus(rho, self._pur_A, [a])
            elif stage == "purify_B" and self._pur_B is not None:
                rho = apply_local_kraus(rho, self._pur_B, [b])
            elif stage == "depolarize" and self._depol is not None:
                for q in self._noisy:
                    rho = apply_local_kraus(rho, self._depol, [q])
            if check:
                _check_state(rho, stage)
        return ReservoirState(rho, state.step_index + 1), np.concatenate(rows)

    def run(self, signal: Sequence[float], initial: ReservoirState | None = None, check: bool = False) -> np.ndarray:
        """Feature matrix (T, n_features) for the signal, without the bias column."""
        signal = np.asarray(signal, dtype=float)
        if signal.size == 0:
            raise ValueError("signal is empty")
        state = initial or self.initial_state()
        out = np.empty((signal.size, self.n_features))
        for i, s in enumerate(signal):
            state, out[i] = self.step(state, s, check=check)
        return out


def _check_state(rho: np.ndarray, stage: str, tol: float = 1e-10) -> None:
    if abs(np.trace(rho) - 1) > tol:
        raise FloatingPointError(f"trace drifted after {stage}")
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise FloatingPointError(f"state lost Hermiticity after {stage}")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise FloatingPointError(f"state lost positivity after {stage}")


@dataclass
class ReadoutDataset:
    features: np.ndarray  # (T, n_features + 1), bias last
    signal: np.ndarray


def with_bias(features: np.ndarray) -> np.ndarray:
    return np.hstack([features, np.ones((features.shape[0], 1))])


def run_sequence(spec: ReservoirSpec, signal: Sequence[float], check: bool = False) -> ReadoutDataset:
    feats = Reservoir(spec).run(signal, check=check)
    return ReadoutDataset(with_bias(feats), np.asarray(signal, dtype=float))
