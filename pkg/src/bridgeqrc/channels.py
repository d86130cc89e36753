"""Bridge, purification and depolarization channels plus their Pauli-basis algebra.

Pauli-transfer matrices (PTMs) use the basis order (I, X, Y, Z) per qubit,
row-major over qubits, and the normalisation 1/d so that the identity
channel maps to the identity matrix.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Sequence

import numpy as np

from .quantum import I2, PAULIS, X, Y, Z, apply_local_kraus, bloch_of, kron

N_ANGLES = 15
ENTANGLING = slice(6, 9)
ENTANGLING_FLOOR = 1e-3

XX = np.kron(X, X)
YY = np.kron(Y, Y)
ZZ = np.kron(Z, Z)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


def _kron(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    # np.kron without its generic-shape overhead; these sit inside optimiser loops
    (m, n), (p, q) = A.shape, B.shape
    return (A[:, None, :, None] * B[None, :, None, :]).reshape(m * p, n * q)


def single_qubit_rotation(angles: Sequence[float]) -> np.ndarray:
    """exp(-i(aX + bY + cZ)) in closed form."""
    a, b, c = (float(x) for x in angles)
    norm = math.sqrt(a * a + b * b + c * c)
    if norm < 1e-300:
        return I2.copy()
    C, S = math.cos(norm), math.sin(norm) / norm
    return np.array([[C - 1j * S * c, -S * b - 1j * S * a], [S * b - 1j * S * a, C + 1j * S * c]])


def _canonical_gate(c1: float, c2: float, c3: float) -> np.ndarray:
    """exp(-i(c1 XX + c2 YY + c3 ZZ)).

    The generator is block diagonal on span{|00>, |11>} (as c3 I + (c1 - c2) X)
    and span{|01>, |10>} (as -c3 I + (c1 + c2) X).
    """
    u, v = c1 - c2, c1 + c2
    pu, pv = complex(math.cos(c3), -math.sin(c3)), complex(math.cos(c3), math.sin(c3))
    cu, su, cv, sv = math.cos(u), math.sin(u), math.cos(v), math.sin(v)
    G = np.zeros((4, 4), dtype=complex)
    G[0, 0] = G[3, 3] = pu * cu
    G[0, 3] = G[3, 0] = -1j * pu * su
    G[1, 1] = G[2, 2] = pv * cv
    G[1, 2] = G[2, 1] = -1j * pv * sv
    return G


def build_ansatz(theta: Sequence[float]) -> np.ndarray:
    """Fifteen-angle two-qubit unitary (U_a x U_b) . exp(-i(t7 XX + t8 YY + t9 ZZ)) . (V_a x V_b)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (N_ANGLES,):
        raise ValueError(f"ansatz needs {N_ANGLES} angles, got shape {theta.shape}")
    if not np.all(np.isfinite(theta)):
        raise ValueError("ansatz angles must be finite")
    pre = _kron(single_qubit_rotation(theta[0:3]), single_qubit_rotation(theta[3:6]))
    post = _kron(single_qubit_rotation(theta[9:12]), single_qubit_rotation(theta[12:15]))
    return pre @ _canonical_gate(*theta[6:9]) @ post


def entangling_weight(theta: Sequence[float]) -> float:
    t = np.asarray(theta, dtype=float)[ENTANGLING]
    return float(t @ t)


def bridge_projectors(U: np.ndarray) -> list[np.ndarray]:
    """Rank-one projectors U|ij><ij|U^dagger for ij in 00, 01, 10, 11."""
    if U.shape != (4, 4) or not np.allclose(U @ U.conj().T, np.eye(4), atol=1e-10):
        raise ValueError("bridge basis rotation must be a 4x4 unitary")
    return [np.outer(U[:, k], U[:, k].conj()) for k in range(4)]


@dataclass(frozen=True)
class KrausChannel:
    """A CPTP map given by Kraus operators acting on ``acting_qubits`` (in factor order)."""

    kraus_ops: tuple[np.ndarray, ...]
    acting_qubits: tuple[int, ...] = field(default=())

    def __post_init__(self):
        ops = tuple(np.asarray(K, dtype=complex) for K in self.kraus_ops)
        if not ops:
            raise ValueError("channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(K.shape != (d, d) for K in ops):
            raise ValueError("Kraus operators must share one square shape")
        total = sum(K.conj().T @ K for K in ops)
        if not np.allclose(total, np.eye(d), atol=1e-10):
            raise ValueError("Kraus operators are not trace preserving")
        object.__setattr__(self, "kraus_ops", ops)
        if not self.acting_qubits:
            object.__setattr__(self, "acting_qubits", tuple(range(int(np.log2(d)))))

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.kraus_ops[0].shape[0])))

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        """Apply to ``rho``; a channel-sized input is treated as the whole register."""
        if rho.shape[0] == self.kraus_ops[0].shape[0]:
            return sum(K @ rho @ K.conj().T for K in self.kraus_ops)
        return apply_local_kraus(rho, self.kraus_ops, self.acting_qubits)

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """Composition ``other`` after ``self`` on the same qubits."""
        ops = tuple(B @ A for A, B in product(self.kraus_ops, other.kraus_ops))
        return KrausChannel(ops, self.acting_qubits)


def identity_channel(k: int = 1) -> KrausChannel:
    return KrausChannel((np.eye(2**k, dtype=complex),))


def bridge_channel(theta: Sequence[float], a: int = 0, b: int = 1) -> KrausChannel:
    return KrausChannel(tuple(bridge_projectors(build_ansatz(theta))), (a, b))


def apply_bridge(rho: np.ndarray, theta: Sequence[float], a: int, b: int) -> np.ndarray:
    """Nonselective measurement of qubits (a, b) in the basis rotated by the ansatz."""
    if a == b:
        raise ValueError("bridge qubits must differ")
    return apply_local_kraus(rho, bridge_projectors(build_ansatz(theta)), [a, b])


def depolarization_kraus(p: float) -> tuple[np.ndarray, ...]:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"depolarization probability must be in [0, 1], got {p}")
    return (
        np.sqrt(1 - 3 * p / 4) * I2,
        np.sqrt(p / 4) * X,
        np.sqrt(p / 4) * Y,
        np.sqrt(p / 4) * Z,
    )


def depolarization_channel(p: float, qubit: int = 0) -> KrausChannel:
    return KrausChannel(depolarization_kraus(p), (qubit,))


def apply_depolarization(rho: np.ndarray, qubit: int, p: float) -> np.ndarray:
    ops = depolarization_kraus(p)
    if p == 0.0:
        return rho.copy()
    return apply_local_kraus(rho, ops, [qubit])


def purification_kraus(gamma: Sequence[float]) -> tuple[np.ndarray, ...]:
    """Kraus pair <j|_anc U(gamma) |0>_anc; the ansatz acts on (target, ancilla)."""
    U = build_ansatz(gamma).reshape(2, 2, 2, 2)
    return (U[:, 0, :, 0].copy(), U[:, 1, :, 0].copy())


def purification_channel(gamma: Sequence[float], qubit: int = 0) -> KrausChannel:
    return KrausChannel(purification_kraus(gamma), (qubit,))


def apply_purification(rho: np.ndarray, gamma: Sequence[float], qubit: int) -> np.ndarray:
    """Couple ``qubit`` to a fresh |0> ancilla through the ansatz and discard the ancilla."""
    n = int(round(np.log2(rho.shape[0])))
    if not 0 <= qubit < n:
        raise ValueError(f"qubit {qubit} out of range for {n} qubits")
    return apply_local_kraus(rho, purification_kraus(gamma), [qubit])


@lru_cache(maxsize=None)
def pauli_basis(k: int) -> np.ndarray:
    """Array of shape (4^k, 2^k, 2^k) holding the k-qubit Pauli strings in PTM order."""
    return np.array([kron(*combo) if k > 1 else combo[0] for combo in product(PAULIS, repeat=k)])


@lru_cache(maxsize=None)
def _pauli_vec(k: int) -> np.ndarray:
    basis = pauli_basis(k)
    return basis.reshape(len(basis), -1).T  # columns are row-major vec(P_j)


def superoperator(kraus_ops: Sequence[np.ndarray]) -> np.ndarray:
    """Row-major vectorised superoperator: vec(K rho K^dagger) = (K kron conj K) vec(rho)."""
    return sum(_kron(K, K.conj()) for K in kraus_ops)


def ptm_from_kraus(kraus_ops: Sequence[np.ndarray]) -> np.ndarray:
    d = kraus_ops[0].shape[0]
    k = int(round(np.log2(d)))
    B = _pauli_vec(k)
    return np.real(B.conj().T @ superoperator(kraus_ops) @ B) / d


def ptm(channel: KrausChannel, k: int | None = None) -> np.ndarray:
    """Pauli-transfer matrix R_ij = tr(P_i channel[P_j]) / 2^k."""
    if k is not None and k != channel.n_qubits:
        raise ValueError(f"channel acts on {channel.n_qubits} qubits, not {k}")
    R = ptm_from_kraus(channel.kraus_ops)
    e0 = np.zeros(R.shape[1])
    e0[0] = 1.0
    if not np.allclose(R[0], e0, atol=1e-8):
        raise ValueError("channel is not trace preserving (PTM first row is not e0)")
    return R


def ptm_l1(R: np.ndarray, mode: str = "entrywise") -> float:
    """Entrywise sum of |R_ij|, or the maximum absolute column sum."""
    A = np.abs(R)
    if mode == "entrywise":
        return float(A.sum())
    if mode == "max_column":
        return float(A.sum(axis=0).max())
    raise ValueError(f"unknown norm mode {mode!r}")


def bridge_ptm(theta: Sequence[float]) -> np.ndarray:
    """PTM of the bridge measurement without going through the superoperator.

    For rank-one projectors |u_k><u_k| the entries reduce to
    sum_k <u_k|P_i|u_k><u_k|P_j|u_k> / 4.
    """
    U = build_ansatz(theta)
    v = np.real(np.einsum("ik,pij,jk->pk", U.conj(), pauli_basis(2), U))
    return v @ v.T / 4


@dataclass(frozen=True)
class QubitAffineMap:
    """Bloch-vector action r -> q + Gamma r of a single-qubit channel."""

    q: np.ndarray
    Gamma: np.ndarray

    def __call__(self, r: Sequence[float]) -> np.ndarray:
        return self.q + self.Gamma @ np.asarray(r, dtype=float)


def affine_map(channel: KrausChannel | Sequence[np.ndarray]) -> QubitAffineMap:
    ops = channel.kraus_ops if isinstance(channel, KrausChannel) else tuple(channel)
    if ops[0].shape != (2, 2):
        raise ValueError("affine_map needs a single-qubit channel")
    # q_i = tr(s_i P[I]) / 2 and Gamma_ij = tr(s_i P[s_j]) / 2 are the PTM's
    # first column and lower-right block.
    R = ptm_from_kraus(ops)
    return QubitAffineMap(q=R[1:, 0].copy(), Gamma=R[1:, 1:].copy())


def affine_map_direct(channel: KrausChannel) -> QubitAffineMap:
    """Same map obtained by pushing I and the Paulis through the channel one at a time."""
    q = 0.5 * bloch_of(channel(I2))
    Gamma = np.column_stack([0.5 * bloch_of(channel(P)) for P in (X, Y, Z)])
    return QubitAffineMap(q=q, Gamma=Gamma)


@dataclass(frozen=True)
class BridgeDiagnostics:
    reshaped_rank: int
    row_l1_sums: np.ndarray
    col_l1_sums: np.ndarray
    total_l1: float
    singular_values: np.ndarray

    @property
    def transfers(self) -> bool:
        """Rank one means the bridge cannot move signal between the reservoirs."""
        return self.reshaped_rank > 1


def reshape_bridge(R: np.ndarray) -> np.ndarray:
    """Regroup R[(a,b),(a',b')] as M[(a,a'),(b,b')]: A-side rows, B-side columns."""
    if R.shape != (16, 16):
        raise ValueError(f"bridge diagnostics need a 16x16 PTM, got {R.shape}")
    return R.reshape(4, 4, 4, 4).transpose(0, 2, 1, 3).reshape(16, 16)


def bridge_diagnostics(R: np.ndarray, rel_tol: float = 1e-10) -> BridgeDiagnostics:
    M = reshape_bridge(R)
    s = np.linalg.svd(M, compute_uv=False)
    rank = int(np.sum(s > rel_tol * s[0])) if s[0] > 0 else 0
    A = np.abs(M)
    return BridgeDiagnostics(
        reshaped_rank=rank,
        row_l1_sums=A.sum(axis=1),
        col_l1_sums=A.sum(axis=0),
        total_l1=float(A.sum()),
        singular_values=s,
    )
