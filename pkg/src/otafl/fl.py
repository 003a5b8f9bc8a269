"""Federated learning on small synthetic tasks.

Model parameters are plain 1-D float64 arrays.  Two task families are
provided: linear regression with mean-squared-error loss (convex) and a
two-layer tanh MLP with softmax cross-entropy on Gaussian blobs.  Local
training runs seeded mini-batch SGD or Adam; aggregation is FedAvg over
delta updates with a fixed ascending-UE summation order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

TASK_KINDS = ("linear_regression", "mlp_classification")
OPTIMIZERS = ("sgd", "adam")

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass
class Task:
    """One client's dataset plus the model family it trains.

    ``hidden`` is only meaningful for the MLP family; linear regression has
    exactly one weight per feature.
    """

    kind: str
    features: np.ndarray
    targets: np.ndarray
    hidden: int = 0

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ValueError(f"unknown task kind {self.kind!r}")
        self.features = np.asarray(self.features, dtype=np.float64)
        self.targets = np.asarray(self.targets, dtype=np.float64)
        if self.features.ndim != 2:
            raise ValueError("features must be (samples, dims)")
        if self.features.shape[0] != self.targets.shape[0]:
            raise ValueError("features and targets disagree on sample count")
        if self.kind == "mlp_classification":
            if self.targets.ndim != 2:
                raise ValueError("classification targets must be one-hot (samples, classes)")
            if self.hidden < 1:
                raise ValueError("mlp task needs hidden >= 1")
        elif self.targets.ndim != 1:
            raise ValueError("regression targets must be 1-D")

    @property
    def param_count(self) -> int:
        d = self.features.shape[1]
        if self.kind == "linear_regression":
            return d
        c = self.targets.shape[1]
        return d * self.hidden + self.hidden + self.hidden * c + c


@dataclass(frozen=True)
class TrainConfig:
    """Local-training hyperparameters; ``epochs`` = 0 disables training."""

    learning_rate: float = 0.1
    epochs: int = 1
    batch_size: int = 0  # 0 means full batch
    optimizer: str = "sgd"
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.epochs < 0 or self.batch_size < 0:
            raise ValueError("epochs and batch_size must be >= 0")
        if self.optimizer not in OPTIMIZERS:
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


@dataclass
class RoundState:
    """Global model and round counter threaded through an experiment."""

    theta: np.ndarray
    round_index: int = 0

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)


# ---------------------------------------------------------------------------
# losses and gradients


def _mlp_unflatten(theta: np.ndarray, d: int, h: int, c: int):
    i = 0
    w1 = theta[i:i + d * h].reshape(d, h); i += d * h
    b1 = theta[i:i + h]; i += h
    w2 = theta[i:i + h * c].reshape(h, c); i += h * c
    b2 = theta[i:i + c]
    return w1, b1, w2, b2


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - np.max(z, axis=1, keepdims=True)
    e = np.exp(z)
    return e / np.sum(e, axis=1, keepdims=True)


def loss_and_grad(theta: np.ndarray, task: Task, idx: np.ndarray | None = None):
    """Loss and gradient on the full dataset or a batch index subset.

    Linear regression uses mean squared residual, loss = mean((X theta - y)^2),
    grad = 2/B * X^T r.  The MLP uses tanh hidden units and softmax
    cross-entropy averaged over the batch.
    """
    x = task.features if idx is None else task.features[idx]
    y = task.targets if idx is None else task.targets[idx]
    n = x.shape[0]
    if task.kind == "linear_regression":
        r = x @ theta - y
        loss = float(np.mean(r**2))
        grad = (2.0 / n) * (x.T @ r)
        return loss, grad
    d = task.features.shape[1]
    c = task.targets.shape[1]
    w1, b1, w2, b2 = _mlp_unflatten(theta, d, task.hidden, c)
    a1 = np.tanh(x @ w1 + b1)
    probs = _softmax(a1 @ w2 + b2)
    loss = float(-np.mean(np.sum(y * np.log(probs + 1e-300), axis=1)))
    dz2 = (probs - y) / n
    dw2 = a1.T @ dz2
    db2 = np.sum(dz2, axis=0)
    da1 = dz2 @ w2.T
    dz1 = da1 * (1.0 - a1**2)
    dw1 = x.T @ dz1
    db1 = np.sum(dz1, axis=0)
    grad = np.concatenate([dw1.reshape(-1), db1, dw2.reshape(-1), db2])
    return loss, grad


def evaluate_loss(theta: np.ndarray, task: Task) -> float:
    return loss_and_grad(theta, task)[0]


def init_params(task: Task, seed: int = 0) -> np.ndarray:
    """Deterministic initialization: zeros for linear, scaled normal for MLP."""
    if task.kind == "linear_regression":
        return np.zeros(task.param_count)
    rng = np.random.default_rng(seed)
    d = task.features.shape[1]
    c = task.targets.shape[1]
    h = task.hidden
    w1 = rng.standard_normal((d, h)) / np.sqrt(d)
    w2 = rng.standard_normal((h, c)) / np.sqrt(h)
    return np.concatenate([w1.reshape(-1), np.zeros(h), w2.reshape(-1), np.zeros(c)])


# ---------------------------------------------------------------------------
# local training and aggregation


def local_train(global_theta: np.ndarray, task: Task, cfg: TrainConfig) -> np.ndarray:
    """Run ``cfg.epochs`` of seeded mini-batch training from the global model.

    Zero epochs return the global model unchanged.  Adam moment state is
    reset at the start of every call (each federated round starts fresh).
    """
    theta = np.array(global_theta, dtype=np.float64, copy=True)
    if theta.size != task.param_count:
        raise ValueError(f"model size {theta.size} != task parameter count {task.param_count}")
    if cfg.epochs == 0:
        return theta
    n = task.features.shape[0]
    batch = cfg.batch_size if 0 < cfg.batch_size <= n else n
    rng = np.random.default_rng(cfg.seed)
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    step = 0
    for _ in range(cfg.epochs):
        order = rng.permutation(n) if batch < n else np.arange(n)
        for lo in range(0, n, batch):
            idx = order[lo:lo + batch]
            _, grad = loss_and_grad(theta, task, idx)
            step += 1
            if cfg.optimizer == "sgd":
                theta -= cfg.learning_rate * grad
            else:
                m = ADAM_BETA1 * m + (1 - ADAM_BETA1) * grad
                v = ADAM_BETA2 * v + (1 - ADAM_BETA2) * grad**2
                mhat = m / (1 - ADAM_BETA1**step)
                vhat = v / (1 - ADAM_BETA2**step)
                theta -= cfg.learning_rate * mhat / (np.sqrt(vhat) + ADAM_EPS)
    return theta


def compute_delta(local_theta: np.ndarray, global_theta: np.ndarray) -> np.ndarray:
    """Update transmitted by a client: local minus current global."""
    local_theta = np.asarray(local_theta, dtype=np.float64)
    global_theta = np.asarray(global_theta, dtype=np.float64)
    if local_theta.shape != global_theta.shape:
        raise ValueError("local and global models must have equal shape")
    return local_theta - global_theta


def average_deltas(deltas: list[np.ndarray]) -> np.ndarray:
    """Mean update in fixed ascending-UE order (deterministic summation)."""
    if not deltas:
        raise ValueError("need at least one delta")
    return np.mean(np.stack(deltas, axis=0), axis=0)


def apply_global(global_theta: np.ndarray, avg_delta: np.ndarray) -> np.ndarray:
    """New global model: previous global plus the averaged update."""
    return np.asarray(global_theta, dtype=np.float64) + np.asarray(avg_delta, dtype=np.float64)


def fedavg_digital(local_models: list[np.ndarray]) -> np.ndarray:
    """Bit-exact digital baseline: elementwise mean of the local models."""
    if not local_models:
        raise ValueError("need at least one local model")
    return np.mean(np.stack(local_models, axis=0), axis=0)


def update_variance(deltas: list[np.ndarray]) -> float:
    """Pooled population variance across all UEs and parameters."""
    if not deltas:
        raise ValueError("need at least one delta")
    return float(np.var(np.stack(deltas, axis=0)))


# ---------------------------------------------------------------------------
# synthetic data


def make_linear_task(
    shared_seed,
    client_seed,
    n_samples: int,
    n_features: int,
    heterogeneity: float = 0.5,
    noise_std: float = 0.1,
) -> Task:
    """Linear regression data around a per-client generating weight vector.

    ``shared_seed`` fixes the federation-wide base weights; ``client_seed``
    drives this client's perturbation (relative size ``heterogeneity``),
    inputs and label noise.  Entries of the generating weights scale as
    1/sqrt(features) so targets are O(1).
    """
    shared = np.random.default_rng(shared_seed)
    rng = np.random.default_rng(client_seed)
    scale = 1.0 / np.sqrt(n_features)
    w_shared = shared.standard_normal(n_features) * scale
    w_local = w_shared + heterogeneity * rng.standard_normal(n_features) * scale
    x = rng.standard_normal((n_samples, n_features))
    y = x @ w_local + noise_std * rng.standard_normal(n_samples)
    return Task("linear_regression", x, y)


def make_blobs_task(
    shared_seed,
    client_seed,
    n_samples: int,
    n_features: int,
    n_classes: int,
    hidden: int,
    center_spread: float = 3.0,
    heterogeneity: float = 0.25,
) -> Task:
    """Gaussian-blob classification with mild per-client center jitter.

    ``shared_seed`` fixes the class centers for the whole federation;
    ``client_seed`` drives this client's center jitter (relative size
    ``heterogeneity``) and sample draws.
    """
    shared = np.random.default_rng(shared_seed)
    rng = np.random.default_rng(client_seed)
    centers = shared.standard_normal((n_classes, n_features)) * center_spread
    centers = centers + heterogeneity * rng.standard_normal(centers.shape)
    labels = rng.integers(0, n_classes, size=n_samples)
    x = centers[labels] + rng.standard_normal((n_samples, n_features))
    y = np.zeros((n_samples, n_classes))
    y[np.arange(n_samples), labels] = 1.0
    return Task("mlp_classification", x, y, hidden=hidden)
