"""Dense density-matrix primitives for small qubit registers.

Qubit 0 is the leftmost tensor factor, i.e. the most significant bit of a
computational-basis label. Every function here follows that convention.
"""

from __future__ import annotations

from functools import reduce
from typing import Sequence

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (I2, X, Y, Z)

PSD_TOL = 1e-10


def kron(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of any number of matrices, left to right."""
    return reduce(np.kron, ops)


def n_qubits_of(mat: np.ndarray) -> int:
    n = int(round(np.log2(mat.shape[0])))
    if 2**n != mat.shape[0]:
        raise ValueError(f"dimension {mat.shape[0]} is not a power of two")
    return n


def partial_trace(rho: np.ndarray, keep: Sequence[int]) -> np.ndarray:
    """Reduce ``rho`` to the qubits in ``keep`` (returned in ascending order)."""
    n = n_qubits_of(rho)
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep must name at least one qubit")
    if keep[0] < 0 or keep[-1] >= n:
        raise ValueError(f"qubit index out of range for {n} qubits: {keep}")
    drop = [q for q in range(n) if q not in keep]
    t = rho.reshape((2,) * (2 * n))
    # ket axes are 0..n-1, bra axes n..2n-1
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    ket = list(letters[:n])
    bra = list(letters[n : 2 * n])
    for q in drop:
        bra[q] = ket[q]
    out = "".join(ket[q] for q in keep) + "".join(bra[q] for q in keep)
    red = np.einsum("".join(ket) + "".join(bra) + "->" + out, t)
    d = 2 ** len(keep)
    return red.reshape(d, d)


def embed_operator(op: np.ndarray, targets: Sequence[int], n: int) -> np.ndarray:
    """Full-register matrix acting as ``op`` on ``targets`` and identity elsewhere.

    ``targets`` is ordered: its first entry is the most significant factor of ``op``.
    """
    targets = list(targets)
    k = len(targets)
    if op.shape != (2**k, 2**k):
        raise ValueError(f"operator shape {op.shape} does not match {k} target qubits")
    if len(set(targets)) != k or min(targets) < 0 or max(targets) >= n:
        raise ValueError(f"invalid targets {targets} for {n} qubits")
    rest = [q for q in range(n) if q not in targets]
    full = np.kron(op, np.eye(2 ** len(rest), dtype=complex))
    # axes of ``full`` are ordered targets + rest; permute back to 0..n-1
    order = targets + rest
    perm = np.argsort(order)
    t = full.reshape((2,) * (2 * n))
    t = t.transpose(list(perm) + [n + p for p in perm])
    return t.reshape(2**n, 2**n)


def local_superoperator(kraus_ops: Sequence[np.ndarray]) -> np.ndarray:
    """S[(i,l),(j,k)] = sum_K K_ij conj(K_lk), the channel on (ket, bra) index pairs."""
    d = kraus_ops[0].shape[0]
    return sum(np.einsum("ij,lk->iljk", K, K.conj()) for K in kraus_ops).reshape(d * d, d * d)


def apply_local_kraus(
    rho: np.ndarray, kraus_ops: Sequence[np.ndarray] | np.ndarray, targets: Sequence[int]
) -> np.ndarray:
    """Apply a channel on ``targets`` without building register-sized operators.

    ``kraus_ops`` may be a list of Kraus operators or a precomputed
    :func:`local_superoperator`.
    """
    n = n_qubits_of(rho)
    targets = list(targets)
    k = len(targets)
    S = kraus_ops if isinstance(kraus_ops, np.ndarray) and kraus_ops.shape == (4**k, 4**k) else local_superoperator(kraus_ops)
    rest = [q for q in range(n) if q not in targets]
    axes = targets + [n + q for q in targets] + rest + [n + q for q in rest]
    t = rho.reshape((2,) * (2 * n)).transpose(axes).reshape(4**k, -1)
    out = (S @ t).reshape((2,) * (2 * n))
    return out.transpose(np.argsort(axes)).reshape(2**n, 2**n)


def herm_expm(H: np.ndarray, t: float) -> np.ndarray:
    """exp(-iHt) for Hermitian ``H`` by eigendecomposition."""
    if not np.allclose(H, H.conj().T, atol=1e-12):
        raise ValueError("herm_expm requires a Hermitian matrix")
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


class HermitianEvolution:
    """Cached eigensystem of a Hamiltonian; hands out exp(-iHt) for any t."""

    def __init__(self, H: np.ndarray):
        if not np.allclose(H, H.conj().T, atol=1e-12):
            raise ValueError("Hamiltonian is not Hermitian")
        self.energies, self.vectors = np.linalg.eigh(H)

    def unitary(self, t: float) -> np.ndarray:
        v = self.vectors
        return (v * np.exp(-1j * self.energies * t)) @ v.conj().T


def purity(rho: np.ndarray) -> float:
    return float(np.real(np.einsum("ij,ji->", rho, rho)))


def _psd_sqrt(rho: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh((rho + rho.conj().T) / 2)
    if w.min() < -PSD_TOL:
        raise ValueError(f"matrix is not positive semidefinite (min eigenvalue {w.min():.3e})")
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.conj().T


def fidelity(rho: np.ndarray, sigma: np.ndarray) -> float:
    """Uhlmann root fidelity tr sqrt(sqrt(rho) sigma sqrt(rho))."""
    if rho.shape != sigma.shape:
        raise ValueError("states must have equal dimension")
    s = _psd_sqrt(rho)
    inner = s @ sigma @ s
    w = np.linalg.eigvalsh((inner + inner.conj().T) / 2)
    if w.min() < -PSD_TOL:
        raise ValueError("sigma is not positive semidefinite")
    return float(min(1.0, np.sum(np.sqrt(np.clip(w, 0.0, None)))))


def bloch_of(rho: np.ndarray) -> np.ndarray:
    if rho.shape != (2, 2):
        raise ValueError("bloch_of expects a single-qubit state")
    return np.real([np.trace(rho @ P) for P in (X, Y, Z)])


def state_of(r: Sequence[float]) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.linalg.norm(r) > 1 + PSD_TOL:
        raise ValueError(f"Bloch vector norm {np.linalg.norm(r):.6f} exceeds 1")
    return 0.5 * (I2 + r[0] * X + r[1] * Y + r[2] * Z)


def is_density_matrix(rho: np.ndarray, tol: float = PSD_TOL) -> bool:
    if not np.allclose(rho, rho.conj().T, atol=tol):
        return False
    if abs(np.trace(rho) - 1) > tol:
        return False
    return bool(np.linalg.eigvalsh(rho).min() >= -tol)


def sample_qubit_with_purity(
    p_range: tuple[float, float], rng: np.random.Generator | int | None = None
) -> np.ndarray:
    """Qubit state with uniformly random Bloch direction and purity uniform in ``p_range``."""
    lo, hi = p_range
    if not (0.5 <= lo <= hi <= 1.0):
        raise ValueError(f"purity range must lie in [0.5, 1], got {p_range}")
    rng = np.random.default_rng(rng)
    P = rng.uniform(lo, hi)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    radius = np.sqrt(max(2 * P - 1, 0.0))
    return state_of(radius * direction)


def random_density_matrix(n: int, rng: np.random.Generator | int | None = None, rank: int | None = None) -> np.ndarray:
    """Ginibre-ensemble random mixed state over ``n`` qubits."""
    rng = np.random.default_rng(rng)
    d = 2**n
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_hermitian(d: int, rng: np.random.Generator | int | None = None) -> np.ndarray:
    rng = np.random.default_rng(rng)
    A = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return (A + A.conj().T) / 2
