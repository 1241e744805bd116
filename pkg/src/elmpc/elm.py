"""Extreme learning machine regressor for the one-step predictive error."""

from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np
from scipy.linalg import solve
from scipy.special import expit

from .errors import InvalidDataError, InvalidInputError
from .npz import write_npz

FEATURES = ("X", "Y", "phi", "r", "vx", "vy", "s_fl", "s_fr")
LABEL = "e"
N_FEATURES = len(FEATURES)
ACTIVATIONS = {"sigmoid": expit, "tanh": np.tanh}


@dataclass(frozen=True)
class TrainConfig:
    C: float = 100.0
    hidden: int = 55
    seed: int = 0
    activation: str = "sigmoid"

    def __post_init__(self):
        if not self.C > 0:
            raise InvalidInputError("regularization C must be > 0")
        if int(self.hidden) != self.hidden or self.hidden < 1:
            raise InvalidInputError("hidden node count must be a positive integer")
        if self.activation not in ACTIVATIONS:
            raise InvalidInputError(f"unknown activation {self.activation!r}")


@dataclass(frozen=True)
class TrainingSample:
    features: np.ndarray
    label: float


class Dataset(NamedTuple):
    features: np.ndarray  # (N, 8)
    labels: np.ndarray  # (N,)

    @classmethod
    def from_samples(cls, samples):
        if not samples:
            return cls(np.zeros((0, N_FEATURES)), np.zeros(0))
        F = np.array([s.features for s in samples], dtype=float).reshape(len(samples), -1)
        return cls(F, np.array([s.label for s in samples], dtype=float))

    def __len__(self):
        return self.labels.shape[0]

    def subset(self, idx):
        return Dataset(self.features[idx], self.labels[idx])

    @staticmethod
    def concat(parts):
        parts = list(parts)
        if not parts:
            return Dataset(np.zeros((0, N_FEATURES)), np.zeros(0))
        return Dataset(np.vstack([p.features for p in parts]), np.concatenate([p.labels for p in parts]))


@dataclass(frozen=True)
class ElmModel:
    input_weights: np.ndarray  # (l, d)
    biases: np.ndarray  # (l,)
    output_weights: np.ndarray  # (l,)
    activation: str
    norm_mean: np.ndarray
    norm_std: np.ndarray
    seed: int = 0

    @property
    def hidden(self):
        return self.biases.shape[0]


def init_elm(config, n_features=N_FEATURES):
    """Random hidden layer: weights ~ U[-1, 1], biases ~ U[0, 1]."""
    rng = np.random.default_rng(config.seed)
    W = rng.uniform(-1.0, 1.0, size=(config.hidden, n_features))
    b = rng.uniform(0.0, 1.0, size=config.hidden)
    return ElmModel(
        input_weights=W,
        biases=b,
        output_weights=np.zeros(config.hidden),
        activation=config.activation,
        norm_mean=np.zeros(n_features),
        norm_std=np.ones(n_features),
        seed=config.seed,
    )


def hidden_output(model, x):
    """Hidden activations for one sample (d,) or a batch (N, d)."""
    x = np.asarray(x, dtype=float)
    z = ((x - model.norm_mean) / model.norm_std) @ model.input_weights.T + model.biases
    return ACTIVATIONS[model.activation](z)


def predict(model, x):
    return hidden_output(model, x) @ model.output_weights


def normalization_stats(F):
    mean = F.mean(axis=0)
    std = F.std(axis=0)
    # constant columns (zero slip, held speed) would otherwise blow up rounding noise
    degenerate = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    std = np.where(degenerate, 1.0, std)
    return mean, std


def ridge_weights(H, L, C):
    """``beta = (I/C + H'H)^-1 H'L`` via a symmetric positive-definite solve."""
    gram = H.T @ H
    gram[np.diag_indices_from(gram)] += 1.0 / C
    return solve(gram, H.T @ L, assume_a="pos")


def train(model, data, C):
    F, L = np.asarray(data.features, dtype=float), np.asarray(data.labels, dtype=float)
    if F.ndim != 2 or F.shape[0] == 0 or F.shape[0] != L.shape[0]:
        raise InvalidDataError("need at least one sample with matching features and labels")
    bad = np.flatnonzero(~(np.isfinite(F).all(axis=1) & np.isfinite(L)))
    if bad.size:
        raise InvalidDataError(f"non-finite values in rows {bad.tolist()}", rows=bad)
    if not C > 0:
        raise InvalidInputError("regularization C must be > 0")
    mean, std = normalization_stats(F)
    model = replace(model, norm_mean=mean, norm_std=std)
    H = hidden_output(model, F)
    return replace(model, output_weights=ridge_weights(H, L, C))


def evaluate(model, data):
    """RMSE, max absolute error and R^2 on a dataset."""
    if len(data) == 0:
        raise InvalidDataError("cannot evaluate on an empty dataset")
    err = predict(model, data.features) - data.labels
    ss_res = float(err @ err)
    centered = data.labels - data.labels.mean()
    ss_tot = float(centered @ centered)
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res == 0 else 0.0
    return {
        "rmse": float(np.sqrt(ss_res / err.size)),
        "max_abs_error": float(np.max(np.abs(err))),
        "r2": r2,
    }


def save_model(model, path):
    write_npz(path, dict(
        format=np.array("elmpc-elm-v1"),
        input_weights=model.input_weights,
        biases=model.biases,
        output_weights=model.output_weights,
        activation=np.array(model.activation),
        norm_mean=model.norm_mean,
        norm_std=model.norm_std,
        seed=np.array(model.seed),
    ))


def load_model(path):
    with np.load(path, allow_pickle=False) as z:
        if "format" not in z or str(z["format"]) != "elmpc-elm-v1":
            raise InvalidDataError(f"{path} is not an ELM model file")
        return ElmModel(
            input_weights=z["input_weights"],
            biases=z["biases"],
            output_weights=z["output_weights"],
            activation=str(z["activation"]),
            norm_mean=z["norm_mean"],
            norm_std=z["norm_std"],
            seed=int(z["seed"]),
        )
