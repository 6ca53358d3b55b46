"""Probabilistic error models: Gaussian-process and neural-network regressors.

Both estimators map a feature vector (for the error task ``(mu0, mu, k)``,
for the dimension task ``(mu, log_eps)``) to a scalar target and follow the
fit/predict estimator API so they are interchangeable downstream.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
import scipy.linalg
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from ._validation import check_features, check_targets

__all__ = [
    "FeatureScaler",
    "Dataset",
    "FoldReport",
    "GpRegressor",
    "AnnRegressor",
    "TrainingDivergedError",
    "KernelNotPositiveDefiniteError",
    "gp_kernel",
    "gp_nll",
    "gp_nll_gradient",
    "ann_init",
    "ann_forward",
    "ann_loss_and_gradients",
    "kfold_validate",
    "scale_features",
    "unscale_features",
    "save_estimator",
    "load_estimator",
]


# ---------------------------------------------------------------------------
# scaling and datasets
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureScaler:
    """Per-column affine transform ``(x - shift) / scale``."""

    shift: np.ndarray
    scale: np.ndarray

    @classmethod
    def from_data(cls, X: np.ndarray) -> "FeatureScaler":
        X = np.asarray(X, dtype=float)
        shift = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)
        return cls(shift=shift, scale=scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.shift) / self.scale

    def inverse(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) * self.scale + self.shift


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with aligned scalar targets, plus CSV round-tripping.

    The CSV layout puts the target in the last column, e.g.
    ``mu0,mu,k,log_eps`` for error samples and ``mu,log_eps_target,k`` for
    dimension-selection samples.
    """

    features: np.ndarray
    targets: np.ndarray
    feature_names: tuple[str, ...]
    target_name: str
    feature_scaling: FeatureScaler | None = None

    def __post_init__(self):
        if self.features.shape[0] != self.targets.shape[0]:
            raise ValueError("features and targets disagree on sample count")
        if self.features.shape[0] < 1:
            raise ValueError("dataset must contain at least one sample")
        if self.features.shape[1] != len(self.feature_names):
            raise ValueError("feature_names do not match feature count")

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    def to_csv(self, path: str | Path) -> Path:
        path = Path(path)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(list(self.feature_names) + [self.target_name])
            for row, t in zip(self.features, self.targets):
                writer.writerow([repr(float(v)) for v in row] + [repr(float(t))])
        return path

    @classmethod
    def from_csv(cls, path: str | Path) -> "Dataset":
        path = Path(path)
        with open(path, newline="") as fh:
            header = next(csv.reader(fh))
        data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        return cls(
            features=data[:, :-1],
            targets=data[:, -1],
            feature_names=tuple(header[:-1]),
            target_name=header[-1],
        )


def scale_features(data: Dataset) -> Dataset:
    """Standardize each feature column, recording the invertible transform."""
    scaler = FeatureScaler.from_data(data.features)
    return replace(
        data, features=scaler.transform(data.features), feature_scaling=scaler
    )


def unscale_features(data: Dataset) -> Dataset:
    if data.feature_scaling is None:
        raise ValueError("dataset carries no scaling record")
    return replace(
        data,
        features=data.feature_scaling.inverse(data.features),
        feature_scaling=None,
    )


# ---------------------------------------------------------------------------
# Gaussian process regression
# ---------------------------------------------------------------------------


class KernelNotPositiveDefiniteError(RuntimeError):
    """Kernel matrix stayed indefinite after jitter escalation."""


def _sq_dists(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    diff = a[:, None, :] - b[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def gp_kernel(a, b, length_scale: float, signal_var: float) -> np.ndarray:
    """Squared-exponential covariance ``s2 * exp(-|a-b|^2 / (2 l^2))``."""
    a = np.atleast_2d(np.asarray(a, dtype=float))
    b = np.atleast_2d(np.asarray(b, dtype=float))
    return signal_var * np.exp(-_sq_dists(a, b) / (2.0 * length_scale**2))


def _chol_with_jitter(m: np.ndarray, jitter: float, max_jitter: float):
    """Cholesky factor of ``m (+ jitter I)``, escalating jitter tenfold as needed."""
    current = 0.0
    while True:
        try:
            return np.linalg.cholesky(m + current * np.eye(m.shape[0])), current
        except np.linalg.LinAlgError:
            current = jitter if current == 0.0 else current * 10.0
            if current > max_jitter:
                raise KernelNotPositiveDefiniteError(
                    f"kernel matrix not positive definite even with jitter {max_jitter:g}"
                ) from None


def gp_nll(
    X, y, length_scale: float, signal_var: float, noise_var: float, prior_mean: float = 0.0
) -> float:
    """Negative log marginal likelihood of the noisy squared-exponential GP."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    m = gp_kernel(X, X, length_scale, signal_var) + noise_var * np.eye(n)
    chol, _ = _chol_with_jitter(m, 1e-12, 1e-6)
    r = y - prior_mean
    alpha = scipy.linalg.cho_solve((chol, True), r)
    logdet = 2.0 * float(np.sum(np.log(np.diag(chol))))
    return 0.5 * logdet + 0.5 * float(r @ alpha) + 0.5 * n * np.log(2.0 * np.pi)


def gp_nll_gradient(
    X, y, length_scale: float, signal_var: float, noise_var: float, prior_mean: float = 0.0
) -> np.ndarray:
    """Gradient of :func:`gp_nll` with respect to the *log* hyperparameters.

    Order: ``(log length_scale, log signal_var, log noise_var)``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = y.shape[0]
    d2 = _sq_dists(X, X)
    kf = signal_var * np.exp(-d2 / (2.0 * length_scale**2))
    m = kf + noise_var * np.eye(n)
    chol, _ = _chol_with_jitter(m, 1e-12, 1e-6)
    r = y - prior_mean
    alpha = scipy.linalg.cho_solve((chol, True), r)
    m_inv = scipy.linalg.cho_solve((chol, True), np.eye(n))
    grads = np.empty(3)
    derivs = (
        kf * (d2 / length_scale**2),  # d/d log(length_scale)
        kf,  # d/d log(signal_var)
        noise_var * np.eye(n),  # d/d log(noise_var)
    )
    for i, dk in enumerate(derivs):
        grads[i] = 0.5 * float(np.sum(m_inv * dk)) - 0.5 * float(alpha @ dk @ alpha)
    return grads


class GpRegressor(BaseEstimator, RegressorMixin):
    """Gaussian-process regression with a squared-exponential kernel.

    Hyperparameters are tuned by multi-start gradient descent (with Armijo
    backtracking) on the negative log marginal likelihood over the log
    parameters. Features are standardized internally so a single isotropic
    length scale is meaningful.

    Parameters
    ----------
    length_scale, signal_var, noise_var : float or None
        Initial hyperparameters; ``None`` derives signal/noise scales from the
        target variance.
    prior_mean : float
        Constant mean of the prior.
    optimize : bool
        Skip hyperparameter tuning when False.
    n_restarts : int
        Number of optimizer starts (the first uses the initial values).
    max_opt_points, max_train_points : int or None
        Seeded subsample caps for likelihood optimization and for the stored
        training set; ``None`` keeps everything.
    """

    def __init__(
        self,
        length_scale=1.0,
        signal_var=None,
        noise_var=None,
        prior_mean=0.0,
        optimize=True,
        n_restarts=5,
        max_iter=60,
        max_opt_points=1024,
        max_train_points=4000,
        jitter=1e-10,
        max_jitter=1e-6,
        standardize=True,
        seed=0,
    ):
        self.length_scale = length_scale
        self.signal_var = signal_var
        self.noise_var = noise_var
        self.prior_mean = prior_mean
        self.optimize = optimize
        self.n_restarts = n_restarts
        self.max_iter = max_iter
        self.max_opt_points = max_opt_points
        self.max_train_points = max_train_points
        self.jitter = jitter
        self.max_jitter = max_jitter
        self.standardize = standardize
        self.seed = seed

    # -- fitting ------------------------------------------------------------

    def _descend(self, X, y, log_theta: np.ndarray) -> tuple[np.ndarray, float]:
        """Gradient descent with backtracking from one start point."""
        theta = log_theta.copy()
        value = gp_nll(X, y, *np.exp(theta), prior_mean=self.prior_mean)
        for _ in range(self.max_iter):
            grad = gp_nll_gradient(X, y, *np.exp(theta), prior_mean=self.prior_mean)
            gnorm = float(np.max(np.abs(grad)))
            if gnorm < 1e-6:
                break
            step = 1.0 / max(1.0, gnorm)
            improved = False
            for _ in range(20):
                cand = theta - step * grad
                cand_value = gp_nll(X, y, *np.exp(cand), prior_mean=self.prior_mean)
                if cand_value < value - 1e-4 * step * gnorm**2:
                    theta, value = cand, cand_value
                    improved = True
                    break
                step *= 0.5
            if not improved:
                break
        return theta, value

    def fit(self, X, y):
        X = check_features(X, name="X")
        y = check_targets(y, X.shape[0], name="y")
        if X.shape[0] < 2:
            raise ValueError("GP fitting requires at least 2 samples")
        self.scaler_ = FeatureScaler.from_data(X) if self.standardize else None
        Xs = self.scaler_.transform(X) if self.scaler_ is not None else X

        y_var = max(float(np.var(y)), 1e-12)
        signal0 = y_var if self.signal_var is None else float(self.signal_var)
        noise0 = 1e-4 * y_var if self.noise_var is None else float(self.noise_var)
        theta = np.log([float(self.length_scale), signal0, noise0])

        rng = np.random.default_rng(self.seed)
        if self.optimize:
            if self.max_opt_points is not None and Xs.shape[0] > self.max_opt_points:
                idx = rng.choice(Xs.shape[0], self.max_opt_points, replace=False)
                idx.sort()
                X_opt, y_opt = Xs[idx], y[idx]
            else:
                X_opt, y_opt = Xs, y
            best_theta, best_value = self._descend(X_opt, y_opt, theta)
            for _ in range(max(0, self.n_restarts - 1)):
                start = theta + rng.uniform(-1.5, 1.5, size=3)
                cand_theta, cand_value = self._descend(X_opt, y_opt, start)
                if cand_value < best_value:
                    best_theta, best_value = cand_theta, cand_value
            theta = best_theta
        self.length_scale_, self.signal_var_, self.noise_var_ = np.exp(theta)

        if self.max_train_points is not None and Xs.shape[0] > self.max_train_points:
            idx = rng.choice(Xs.shape[0], self.max_train_points, replace=False)
            idx.sort()
            Xs, y = Xs[idx], y[idx]
        m = gp_kernel(Xs, Xs, self.length_scale_, self.signal_var_)
        m += self.noise_var_ * np.eye(Xs.shape[0])
        self.chol_, self.jitter_used_ = _chol_with_jitter(m, self.jitter, self.max_jitter)
        self.X_train_ = Xs
        self.y_train_ = y
        self.alpha_ = scipy.linalg.cho_solve((self.chol_, True), y - self.prior_mean)
        return self

    # -- prediction ---------------------------------------------------------

    def _check_fitted(self):
        if not hasattr(self, "alpha_"):
            raise NotFittedError("GpRegressor is not fitted yet")

    def predict(self, X, return_std: bool = False):
        self._check_fitted()
        X = check_features(X, n_features=self.X_train_.shape[1], name="X")
        Xs = self.scaler_.transform(X) if self.scaler_ is not None else X
        ks = gp_kernel(Xs, self.X_train_, self.length_scale_, self.signal_var_)
        mean = self.prior_mean + ks @ self.alpha_
        if not return_std:
            return mean
        v = scipy.linalg.cho_solve((self.chol_, True), ks.T)
        var = (self.signal_var_ + self.noise_var_) - np.einsum("ij,ji->i", ks, v)
        var = np.maximum(var, 0.0)
        return mean, np.sqrt(var)

    def predict_variance(self, X) -> np.ndarray:
        mean, std = self.predict(X, return_std=True)
        return std**2


# ---------------------------------------------------------------------------
# feed-forward neural network
# ---------------------------------------------------------------------------


class TrainingDivergedError(RuntimeError):
    def __init__(self, epoch: int):
        self.epoch = epoch
        super().__init__(f"training loss became non-finite at epoch {epoch}")


_ACTIVATIONS = {
    "tanh": (np.tanh, lambda z: 1.0 - np.tanh(z) ** 2),
    "identity": (lambda z: z, lambda z: np.ones_like(z)),
}


def ann_init(layer_sizes, seed: int = 0):
    """Seeded uniform initialization scaled by fan-in; zero biases."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def ann_forward(weights, biases, X, activation: str = "tanh") -> np.ndarray:
    """Feed-forward pass: hidden layers use ``activation``, the output is linear."""
    act, _ = _ACTIVATIONS[activation]
    z = np.atleast_2d(np.asarray(X, dtype=float))
    for w, b in zip(weights[:-1], biases[:-1]):
        z = act(z @ w.T + b)
    out = z @ weights[-1].T + biases[-1]
    return out[:, 0]


def ann_loss_and_gradients(weights, biases, X, y, activation: str = "tanh"):
    """Mean-squared-error loss and its back-propagated parameter gradients."""
    act, dact = _ACTIVATIONS[activation]
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    # forward pass, keeping pre-activations
    activations = [X]
    pre = []
    z = X
    for w, b in zip(weights[:-1], biases[:-1]):
        s = z @ w.T + b
        pre.append(s)
        z = act(s)
        activations.append(z)
    out = (z @ weights[-1].T + biases[-1])[:, 0]
    err = out - y
    loss = float(np.mean(err**2))
    # backward pass
    grad_w = [np.zeros_like(w) for w in weights]
    grad_b = [np.zeros_like(b) for b in biases]
    delta = (2.0 / n) * err[:, None]
    grad_w[-1] = delta.T @ activations[-1]
    grad_b[-1] = delta.sum(axis=0)
    upstream = delta @ weights[-1]
    for layer in range(len(weights) - 2, -1, -1):
        delta = upstream * dact(pre[layer])
        grad_w[layer] = delta.T @ activations[layer]
        grad_b[layer] = delta.sum(axis=0)
        if layer > 0:
            upstream = delta @ weights[layer]
    return loss, grad_w, grad_b


class AnnRegressor(BaseEstimator, RegressorMixin):
    """Feed-forward network with tanh hidden layers and a linear output.

    Trained full-batch by back-propagated gradients; features and targets are
    standardized internally. Early stopping monitors a held-out validation
    split and restores the best parameters seen.

    Parameters
    ----------
    hidden_layers, hidden_width : int
        Hidden architecture (all hidden layers share the width).
    optimizer : {"adam", "gd", "momentum"}
        Update rule for the full-batch gradient step.
    lr_schedule : {"cosine", "constant"}
        Step-size schedule over the epoch budget; the cosine decay noticeably
        tightens the final fit of full-batch training.
    validation_fraction : float
        Fraction held out for early stopping; 0 trains on everything for the
        full epoch budget.
    """

    def __init__(
        self,
        hidden_layers=6,
        hidden_width=20,
        activation="tanh",
        learning_rate=0.02,
        epochs=4000,
        optimizer="adam",
        momentum=0.9,
        lr_schedule="cosine",
        validation_fraction=0.1,
        patience=200,
        seed=0,
        standardize=True,
    ):
        self.hidden_layers = hidden_layers
        self.hidden_width = hidden_width
        self.activation = activation
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.optimizer = optimizer
        self.momentum = momentum
        self.lr_schedule = lr_schedule
        self.validation_fraction = validation_fraction
        self.patience = patience
        self.seed = seed
        self.standardize = standardize

    def fit(self, X, y):
        X = check_features(X, name="X")
        y = check_targets(y, X.shape[0], name="y")
        if self.optimizer not in ("adam", "gd", "momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if self.lr_schedule not in ("constant", "cosine"):
            raise ValueError(f"unknown lr_schedule {self.lr_schedule!r}")
        self.scaler_ = FeatureScaler.from_data(X) if self.standardize else None
        Xs = self.scaler_.transform(X) if self.scaler_ is not None else X
        if self.standardize:
            self.y_shift_ = float(np.mean(y))
            self.y_scale_ = float(np.std(y)) or 1.0
        else:
            self.y_shift_, self.y_scale_ = 0.0, 1.0
        ys = (y - self.y_shift_) / self.y_scale_

        layer_sizes = [X.shape[1]] + [self.hidden_width] * self.hidden_layers + [1]
        weights, biases = ann_init(layer_sizes, seed=self.seed)
        self.layer_sizes_ = layer_sizes

        rng = np.random.default_rng(self.seed)
        n = Xs.shape[0]
        n_val = int(round(self.validation_fraction * n))
        use_val = 0 < n_val < n
        if use_val:
            perm = rng.permutation(n)
            val_idx, train_idx = perm[:n_val], perm[n_val:]
            X_tr, y_tr = Xs[train_idx], ys[train_idx]
            X_val, y_val = Xs[val_idx], ys[val_idx]
        else:
            X_tr, y_tr = Xs, ys

        vel_w = [np.zeros_like(w) for w in weights]
        vel_b = [np.zeros_like(b) for b in biases]
        sq_w = [np.zeros_like(w) for w in weights]
        sq_b = [np.zeros_like(b) for b in biases]
        beta1, beta2, eps_adam = self.momentum, 0.999, 1e-8

        best_val = np.inf
        best_params = None
        stall = 0
        losses = []
        for epoch in range(self.epochs):
            loss, gw, gb = ann_loss_and_gradients(
                weights, biases, X_tr, y_tr, self.activation
            )
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            losses.append(loss)
            t = epoch + 1
            if self.lr_schedule == "cosine":
                lr = self.learning_rate * 0.5 * (1.0 + math.cos(math.pi * epoch / self.epochs))
            else:
                lr = self.learning_rate
            for i in range(len(weights)):
                if self.optimizer == "gd":
                    weights[i] -= lr * gw[i]
                    biases[i] -= lr * gb[i]
                elif self.optimizer == "momentum":
                    vel_w[i] = beta1 * vel_w[i] - lr * gw[i]
                    vel_b[i] = beta1 * vel_b[i] - lr * gb[i]
                    weights[i] += vel_w[i]
                    biases[i] += vel_b[i]
                else:  # adam
                    vel_w[i] = beta1 * vel_w[i] + (1 - beta1) * gw[i]
                    vel_b[i] = beta1 * vel_b[i] + (1 - beta1) * gb[i]
                    sq_w[i] = beta2 * sq_w[i] + (1 - beta2) * gw[i] ** 2
                    sq_b[i] = beta2 * sq_b[i] + (1 - beta2) * gb[i] ** 2
                    corr1 = 1 - beta1**t
                    corr2 = 1 - beta2**t
                    weights[i] -= (
                        lr * (vel_w[i] / corr1) / (np.sqrt(sq_w[i] / corr2) + eps_adam)
                    )
                    biases[i] -= (
                        lr * (vel_b[i] / corr1) / (np.sqrt(sq_b[i] / corr2) + eps_adam)
                    )
            if use_val:
                val_pred = ann_forward(weights, biases, X_val, self.activation)
                val_loss = float(np.mean((val_pred - y_val) ** 2))
                if not np.isfinite(val_loss):
                    raise TrainingDivergedError(epoch)
                if val_loss < best_val - 1e-12:
                    best_val = val_loss
                    best_params = (
                        [w.copy() for w in weights],
                        [b.copy() for b in biases],
                    )
                    stall = 0
                else:
                    stall += 1
                    if stall >= self.patience:
                        break
        if use_val and best_params is not None:
            weights, biases = best_params
        self.weights_ = weights
        self.biases_ = biases
        self.loss_curve_ = np.asarray(losses)
        self.final_train_mse_ = losses[-1] if losses else None
        return self

    def _check_fitted(self):
        if not hasattr(self, "weights_"):
            raise NotFittedError("AnnRegressor is not fitted yet")

    def predict(self, X) -> np.ndarray:
        self._check_fitted()
        X = check_features(X, n_features=self.layer_sizes_[0], name="X")
        Xs = self.scaler_.transform(X) if self.scaler_ is not None else X
        out = ann_forward(self.weights_, self.biases_, Xs, self.activation)
        return out * self.y_scale_ + self.y_shift_


# ---------------------------------------------------------------------------
# K-fold cross validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FoldReport:
    """Per-fold mean absolute errors/variances and their cross-fold aggregates."""

    fold_errors: np.ndarray
    fold_variances: np.ndarray
    predictions: np.ndarray

    @property
    def n_folds(self) -> int:
        return self.fold_errors.shape[0]

    @property
    def error(self) -> float:
        """Mean of the per-fold errors."""
        return float(np.mean(self.fold_errors))

    @property
    def variance(self) -> float:
        """Spread of the per-fold errors around their mean."""
        return float(np.mean((self.fold_errors - self.error) ** 2))

    def as_dict(self) -> dict:
        return {
            "fold_errors": [float(v) for v in self.fold_errors],
            "fold_variances": [float(v) for v in self.fold_variances],
            "error": self.error,
            "variance": self.variance,
        }


def _scaler_to_doc(scaler: FeatureScaler | None):
    if scaler is None:
        return None
    return {"shift": [float(v) for v in scaler.shift],
            "scale": [float(v) for v in scaler.scale]}


def _scaler_from_doc(doc) -> FeatureScaler | None:
    if doc is None:
        return None
    return FeatureScaler(shift=np.asarray(doc["shift"]), scale=np.asarray(doc["scale"]))


def save_estimator(est, path) -> "Path":
    """Serialize a fitted GP or ANN regressor to a JSON checkpoint."""
    path = Path(path)
    if isinstance(est, GpRegressor):
        est._check_fitted()
        doc = {
            "kind": "gp",
            "params": est.get_params(),
            "length_scale": float(est.length_scale_),
            "signal_var": float(est.signal_var_),
            "noise_var": float(est.noise_var_),
            "scaler": _scaler_to_doc(est.scaler_),
            "X_train": [[float(v) for v in row] for row in est.X_train_],
            "y_train": [float(v) for v in est.y_train_],
        }
    elif isinstance(est, AnnRegressor):
        est._check_fitted()
        doc = {
            "kind": "ann",
            "params": est.get_params(),
            "layer_sizes": list(est.layer_sizes_),
            "weights": [[[float(v) for v in row] for row in w] for w in est.weights_],
            "biases": [[float(v) for v in b] for b in est.biases_],
            "scaler": _scaler_to_doc(est.scaler_),
            "y_shift": est.y_shift_,
            "y_scale": est.y_scale_,
        }
    else:
        raise TypeError(f"cannot checkpoint {type(est).__name__}")
    path.write_text(json.dumps(doc, sort_keys=True) + "\n")
    return path


def load_estimator(path):
    """Rebuild a fitted regressor from :func:`save_estimator` output.

    The GP kernel factorization is recomputed from the stored training data,
    so predictions match the original fit to factorization roundoff.
    """
    doc = json.loads(Path(path).read_text())
    if doc["kind"] == "gp":
        est = GpRegressor(**doc["params"])
        est.scaler_ = _scaler_from_doc(doc["scaler"])
        est.length_scale_ = doc["length_scale"]
        est.signal_var_ = doc["signal_var"]
        est.noise_var_ = doc["noise_var"]
        est.X_train_ = np.asarray(doc["X_train"], dtype=float)
        est.y_train_ = np.asarray(doc["y_train"], dtype=float)
        m = gp_kernel(est.X_train_, est.X_train_, est.length_scale_, est.signal_var_)
        m += est.noise_var_ * np.eye(est.X_train_.shape[0])
        est.chol_, est.jitter_used_ = _chol_with_jitter(m, est.jitter, est.max_jitter)
        est.alpha_ = scipy.linalg.cho_solve(
            (est.chol_, True), est.y_train_ - est.prior_mean
        )
        return est
    if doc["kind"] == "ann":
        est = AnnRegressor(**doc["params"])
        est.layer_sizes_ = list(doc["layer_sizes"])
        est.weights_ = [np.asarray(w, dtype=float) for w in doc["weights"]]
        est.biases_ = [np.asarray(b, dtype=float) for b in doc["biases"]]
        est.scaler_ = _scaler_from_doc(doc["scaler"])
        est.y_shift_ = doc["y_shift"]
        est.y_scale_ = doc["y_scale"]
        est.loss_curve_ = np.asarray([])
        return est
    raise ValueError(f"unknown checkpoint kind {doc['kind']!r}")


def kfold_validate(X, y, make_model, n_folds: int = 5, seed: int = 0) -> FoldReport:
    """Round-robin K-fold validation of a model factory.

    ``make_model`` returns a fresh unfitted estimator per fold. The fold error
    is the mean absolute prediction error on the held-out fold; the fold
    variance is the spread of those absolute errors within the fold.
    """
    X = check_features(X, name="X")
    y = check_targets(y, X.shape[0], name="y")
    if not 3 <= n_folds <= 10:
        raise ValueError(f"n_folds must lie in [3, 10], got {n_folds}")
    n = X.shape[0]
    if n < n_folds:
        raise ValueError(f"need at least {n_folds} samples, got {n}")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    folds = np.array_split(perm, n_folds)
    fold_errors = np.empty(n_folds)
    fold_variances = np.empty(n_folds)
    predictions = np.empty(n)
    for i, test_idx in enumerate(folds):
        train_idx = np.concatenate([folds[j] for j in range(n_folds) if j != i])
        model = make_model()
        model.fit(X[train_idx], y[train_idx])
        pred = np.asarray(model.predict(X[test_idx]), dtype=float)
        predictions[test_idx] = pred
        abs_err = np.abs(pred - y[test_idx])
        fold_errors[i] = float(np.mean(abs_err))
        fold_variances[i] = float(np.mean((abs_err - fold_errors[i]) ** 2))
    return FoldReport(
        fold_errors=fold_errors,
        fold_variances=fold_variances,
        predictions=predictions,
    )
