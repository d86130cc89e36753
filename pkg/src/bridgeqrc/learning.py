"""Ridge readout and the short-term-memory benchmark."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .quantum import random_density_matrix
from .reservoir import Reservoir, ReservoirSpec, ReservoirState, with_bias

DEFAULT_LAMBDA = 1e-8


@dataclass
class LinearReadout:
    W: np.ndarray  # (L_out, n_features + 1)
    lam: float


def ridge_fit(Z: np.ndarray, Y: np.ndarray, lam: float = DEFAULT_LAMBDA) -> LinearReadout:
    """W^T = (Z^T Z + lam I)^-1 Z^T Y, solved as a stacked least-squares problem.

    Stacking [Z; sqrt(lam) I] against [Y; 0] gives the same minimiser without
    squaring the condition number of Z.
    """
    Z = np.asarray(Z, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Z.shape[0] != Y.shape[0]:
        raise ValueError(f"{Z.shape[0]} feature rows but {Y.shape[0]} target rows")
    if lam < 0:
        raise ValueError("regulariser must be non-negative")
    p = Z.shape[1]
    if lam == 0:
        if np.linalg.matrix_rank(Z) < p:
            raise np.linalg.LinAlgError("normal equations are singular at lambda = 0; raise lambda")
        A, B = Z, Y
    else:
        A = np.vstack([Z, np.sqrt(lam) * np.eye(p)])
        B = np.vstack([Y, np.zeros((p, Y.shape[1]))])
    Wt, *_ = np.linalg.lstsq(A, B, rcond=None)
    return LinearReadout(W=Wt.T, lam=lam)


def ridge_closed_form(Z: np.ndarray, Y: np.ndarray, lam: float) -> np.ndarray:
    """Literal normal-equation solve, kept as an independent check of :func:`ridge_fit`."""
    Y = Y[:, None] if Y.ndim == 1 else Y
    return np.linalg.inv(Z.T @ Z + lam * np.eye(Z.shape[1])) @ Z.T @ Y


def predict(Z: np.ndarray, readout: LinearReadout) -> np.ndarray:
    if Z.shape[1] != readout.W.shape[1]:
        raise ValueError(f"feature width {Z.shape[1]} does not match readout width {readout.W.shape[1]}")
    return Z @ readout.W.T


def memory_accuracy(y_mod: np.ndarray, y_test: np.ndarray) -> float:
    """Squared Pearson correlation; 0 when either side has no variance."""
    y_mod = np.ravel(y_mod)
    y_test = np.ravel(y_test)
    if y_mod.shape != y_test.shape:
        raise ValueError("prediction and target lengths differ")
    if y_mod.size < 2:
        raise ValueError("need at least two points")
    vm, vt = y_mod.var(), y_test.var()
    if vm <= 1e-300 or vt <= 1e-300:
        return 0.0
    cov = np.mean((y_mod - y_mod.mean()) * (y_test - y_test.mean()))
    return float(min(1.0, cov * cov / (vm * vt)))


def generalization_loss(y_mod: np.ndarray, y_test: np.ndarray) -> float:
    y_mod = np.ravel(y_mod)
    y_test = np.ravel(y_test)
    if y_mod.shape != y_test.shape:
        raise ValueError("prediction and target lengths differ")
    return float(np.linalg.norm(y_mod - y_test))


@dataclass(frozen=True)
class Split:
    washout: int = 100
    train: int = 1000
    test: int = 500

    @property
    def length(self) -> int:
        return self.washout + self.train + self.test


@dataclass
class STMResult:
    """Per-sample, per-offset scores; rows index signal samples, columns offsets d."""

    ma: np.ndarray
    loss_train: np.ndarray
    loss_test: np.ndarray

    @property
    def d_max(self) -> int:
        return self.ma.shape[1] - 1

    @property
    def n_samples(self) -> int:
        return self.ma.shape[0]

    @property
    def ma_mean(self) -> np.ndarray:
        return self.ma.mean(axis=0)

    @property
    def ma_std(self) -> np.ndarray:
        return self.ma.std(axis=0)

    @property
    def loss_mean(self) -> np.ndarray:
        return self.loss_test.mean(axis=0)

    @property
    def loss_std(self) -> np.ndarray:
        return self.loss_test.std(axis=0)

    def rows(self) -> list[dict]:
        return [
            {
                "d": d,
                "ma_mean": self.ma_mean[d],
                "ma_std": self.ma_std[d],
                "loss_mean": self.loss_mean[d],
                "loss_std": self.loss_std[d],
                "train_loss_mean": self.loss_train[:, d].mean(),
                "n_samples": self.n_samples,
            }
            for d in range(self.d_max + 1)
        ]


def score_features(features: np.ndarray, signal: np.ndarray, d_max: int, split: Split, lam: float = DEFAULT_LAMBDA):
    """Fit one readout per offset on the train block; score it on the test block."""
    Z = with_bias(features)
    tr = slice(split.washout, split.washout + split.train)
    te = slice(split.washout + split.train, split.length)
    idx_tr = np.arange(split.length)[tr]
    idx_te = np.arange(split.length)[te]
    ma, l_tr, l_te = [], [], []
    for d in range(d_max + 1):
        readout = ridge_fit(Z[tr], signal[idx_tr - d], lam)
        y_tr = predict(Z[tr], readout).ravel()
        y_te = predict(Z[te], readout).ravel()
        ma.append(memory_accuracy(y_te, signal[idx_te - d]))
        l_tr.append(generalization_loss(y_tr, signal[idx_tr - d]))
        l_te.append(generalization_loss(y_te, signal[idx_te - d]))
    return np.array(ma), np.array(l_tr), np.array(l_te)


def binary_signal(length: int, seed) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, 2, size=length).astype(float)


def _one_sample(spec: ReservoirSpec, seed, d_max: int, split: Split, lam: float):
    signal = binary_signal(split.length, seed)
    feats = Reservoir(spec).run(signal)
    return score_features(feats, signal, d_max, split, lam)


def stm_task(
    spec: ReservoirSpec,
    d_max: int = 8,
    n_samples: int = 20,
    split: Split = Split(),
    signal_seed: int = 0,
    lam: float = DEFAULT_LAMBDA,
    n_jobs: int = 1,
) -> STMResult:
    """Short-term-memory benchmark: recall s[i - d] from features at step i, d = 0..d_max."""
    if min(split.train, split.test) < 2 or split.washout < 0:
        raise ValueError(f"invalid split {split}")
    if d_max < 0 or d_max > split.washout or d_max >= split.train:
        raise ValueError("d_max must be within the washout and below the train length")
    seeds = np.random.SeedSequence(signal_seed).spawn(n_samples)
    if n_jobs == 1:
        out = [_one_sample(spec, s, d_max, split, lam) for s in seeds]
    else:
        out = Parallel(n_jobs=n_jobs)(delayed(_one_sample)(spec, s, d_max, split, lam) for s in seeds)
    ma, l_tr, l_te = (np.array(x) for x in zip(*out))
    return STMResult(ma=ma, loss_train=l_tr, loss_test=l_te)


def echo_state_gap(spec: ReservoirSpec, steps: int = 100, seed: int = 0) -> float:
    """Feature distance after ``steps`` inputs between runs from two different initial states."""
    res = Reservoir(spec)
    signal = binary_signal(steps, seed)
    a = res.run(signal)
    b = res.run(signal, initial=ReservoirState(random_density_matrix(spec.n_total, seed)))
    return float(np.linalg.norm(a[-1] - b[-1]))


@dataclass
class SweepResult:
    taus: np.ndarray
    summed_loss: np.ndarray  # mean over samples of sum_d test loss
    per_sample: np.ndarray  # (n_taus, n_samples)
    echo_gap: np.ndarray
    best_tau: float

    def rows(self) -> list[dict]:
        return [
            {"tau": t, "summed_loss": l, "echo_state_gap": g, "echo_state_ok": bool(g < 1e-6)}
            for t, l, g in zip(self.taus, self.summed_loss, self.echo_gap)
        ]


def timestep_sweep(
    spec: ReservoirSpec,
    taus,
    n_samples: int = 5,
    d_max: int = 8,
    split: Split = Split(),
    signal_seed: int = 0,
    lam: float = DEFAULT_LAMBDA,
    n_jobs: int = 1,
) -> SweepResult:
    """Pick the evolution time minimising the summed STM test loss over offsets 0..d_max."""
    taus = np.asarray(list(taus), dtype=float)
    if taus.size == 0:
        raise ValueError("need at least one tau candidate")
    per_sample, gaps = [], []
    for tau in taus:
        trial = spec.replace(tau=float(tau))
        res = stm_task(trial, d_max, n_samples, split, signal_seed, lam, n_jobs)
        per_sample.append(res.loss_test.sum(axis=1))
        gaps.append(echo_state_gap(trial))
    per_sample = np.array(per_sample)
    summed = per_sample.mean(axis=1)
    return SweepResult(taus, summed, per_sample, np.array(gaps), float(taus[int(np.argmin(summed))]))
