import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bridgeqrc.quantum import (
    I2,
    X,
    Y,
    Z,
    HermitianEvolution,
    apply_local_kraus,
    bloch_of,
    embed_operator,
    fidelity,
    herm_expm,
    is_density_matrix,
    kron,
    partial_trace,
    purity,
    random_density_matrix,
    random_hermitian,
    sample_qubit_with_purity,
    state_of,
)

from conftest import random_unitary

seeds = st.integers(0, 2**32 - 1)


def ket(bits: str) -> np.ndarray:
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1
    return v


def test_qubit_zero_is_most_significant():
    # X on qubit 0 of |00> gives |10>, index 2
    out = embed_operator(X, [0], 2) @ ket("00")
    assert np.allclose(out, ket("10"))


def test_partial_trace_of_product_returns_factors(rng):
    a, b, c = (random_density_matrix(1, rng) for _ in range(3))
    rho = kron(a, b, c)
    assert np.allclose(partial_trace(rho, [0]), a)
    assert np.allclose(partial_trace(rho, [1]), b)
    assert np.allclose(partial_trace(rho, [0, 2]), kron(a, c))
    assert np.allclose(partial_trace(rho, [2, 0]), kron(a, c))


def test_partial_trace_of_bell_state_is_maximally_mixed():
    psi = (ket("00") + ket("11")) / np.sqrt(2)
    assert np.allclose(partial_trace(np.outer(psi, psi.conj()), [1]), I2 / 2)


def test_partial_trace_rejects_bad_indices():
    with pytest.raises(ValueError):
        partial_trace(np.eye(4) / 4, [2])
    with pytest.raises(ValueError):
        partial_trace(np.eye(4) / 4, [])


def test_embed_operator_matches_kron_for_contiguous_targets(rng):
    U = random_unitary(4, rng)
    assert np.allclose(embed_operator(U, [1, 2], 4), kron(I2, U, I2))


def test_embed_operator_reversed_targets_swaps_factors(rng):
    A, B = random_unitary(2, rng), random_unitary(2, rng)
    assert np.allclose(embed_operator(kron(A, B), [2, 0], 3), kron(B, I2, A))


def test_embed_operator_rejects_mismatched_shape():
    with pytest.raises(ValueError):
        embed_operator(np.eye(4), [0], 3)
    with pytest.raises(ValueError):
        embed_operator(np.eye(4), [0, 0], 3)


@given(seeds, st.sampled_from([[0], [2], [1, 3], [3, 0], [2, 1, 0]]))
def test_local_kraus_matches_embedded_kraus_sum(seed, targets):
    rng = np.random.default_rng(seed)
    rho = random_density_matrix(4, rng)
    k = len(targets)
    # two-element channel built from a random isometry
    V = random_unitary(2 ** (k + 1), rng)[:, : 2**k]
    ops = [V[: 2**k], V[2**k :]]
    full = sum(embed_operator(K, targets, 4) @ rho @ embed_operator(K, targets, 4).conj().T for K in ops)
    assert np.allclose(apply_local_kraus(rho, ops, targets), full, atol=1e-12)


def test_herm_expm_matches_pauli_rotation():
    t = 0.37
    expected = np.cos(t) * I2 - 1j * np.sin(t) * X
    assert np.allclose(herm_expm(X, t), expected)


@given(seeds, st.floats(-5, 5))
def test_herm_expm_is_unitary_and_composes(seed, t):
    H = random_hermitian(8, seed)
    U = herm_expm(H, t)
    assert np.allclose(U @ U.conj().T, np.eye(8), atol=1e-10)
    assert np.allclose(herm_expm(H, t / 2) @ herm_expm(H, t / 2), U, atol=1e-10)
    assert np.allclose(HermitianEvolution(H).unitary(t), U, atol=1e-10)


def test_herm_expm_rejects_non_hermitian():
    with pytest.raises(ValueError):
        herm_expm(np.array([[0, 1], [0, 0]], dtype=complex), 1.0)


def test_purity_landmarks():
    assert purity(np.eye(8) / 8) == pytest.approx(1 / 8)
    assert purity(np.outer(ket("01"), ket("01"))) == pytest.approx(1.0)


def test_fidelity_pure_states_is_overlap_modulus():
    a = np.array([1, 0], dtype=complex)
    b = np.array([np.cos(0.3), np.sin(0.3)], dtype=complex)
    assert fidelity(np.outer(a, a), np.outer(b, b)) == pytest.approx(np.cos(0.3), abs=1e-7)


def test_fidelity_commuting_states_is_bhattacharyya():
    p, q = np.array([0.7, 0.3]), np.array([0.2, 0.8])
    assert fidelity(np.diag(p), np.diag(q)) == pytest.approx(np.sum(np.sqrt(p * q)))


@given(seeds)
def test_fidelity_symmetric_and_bounded(seed):
    rng = np.random.default_rng(seed)
    a, b = random_density_matrix(2, rng), random_density_matrix(2, rng)
    f = fidelity(a, b)
    assert 0 <= f <= 1
    assert f == pytest.approx(fidelity(b, a), abs=1e-7)
    assert fidelity(a, a) == pytest.approx(1.0, abs=1e-7)


def test_fidelity_rejects_negative_matrix():
    with pytest.raises(ValueError):
        fidelity(np.diag([1.2, -0.2]), np.eye(2) / 2)


def test_bloch_roundtrip():
    r = np.array([0.1, -0.4, 0.5])
    assert np.allclose(bloch_of(state_of(r)), r)
    with pytest.raises(ValueError):
        state_of([1, 1, 0])


@given(seeds, st.floats(0.5, 1.0), st.floats(0.0, 0.5))
def test_sampled_purity_lies_in_range(seed, lo, width):
    hi = min(1.0, lo + width)
    rho = sample_qubit_with_purity((lo, hi), seed)
    assert is_density_matrix(rho)
    assert lo - 1e-12 <= purity(rho) <= hi + 1e-12


def test_sample_purity_rejects_invalid_range():
    with pytest.raises(ValueError):
        sample_qubit_with_purity((0.4, 0.6))


@given(seeds, st.integers(1, 3))
def test_random_density_matrix_is_valid(seed, n):
    assert is_density_matrix(random_density_matrix(n, seed))


def test_is_density_matrix_rejects():
    assert not is_density_matrix(np.diag([0.6, 0.6]))
    assert not is_density_matrix(np.diag([1.1, -0.1]))
    assert not is_density_matrix(np.array([[0.5, 0.5], [0, 0.5]]))


def test_pauli_algebra():
    assert np.allclose(X @ Y, 1j * Z)
