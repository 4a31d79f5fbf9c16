"""Classifier head over embeddings: local SGD and server aggregation.

The model is a linear layer or a one-hidden-layer ReLU MLP followed by
softmax cross-entropy. Parameters live in a flat float32 vector (weights
then bias per layer), the unit of federated exchange and of byte
accounting. All arithmetic runs in float64 and results are cast back, which
both stabilizes finite-difference checks and makes aggregation of identical
inputs exact.

Server strategies: fedavg (uniform mean, optional sample weighting),
fedprox (same server rule; the proximal term acts in the local objective),
and fednova (client drifts normalized by local step counts).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, FormatError, StoreValidationError
from .seeds import rng_for

STRATEGIES = ("fedavg", "fedprox", "fednova")

MODEL_MAGIC = b"FASTMDL1"


def param_count(dims: tuple[int, ...]) -> int:
    return sum(dims[i] * dims[i + 1] + dims[i + 1] for i in range(len(dims) - 1))


@dataclass(frozen=True)
class ModelParams:
    """Layer sizes plus the flat float32 parameter vector."""

    dims: tuple[int, ...]  # (d, c) or (d, hidden, c)
    theta: np.ndarray

    def __post_init__(self):
        dims = tuple(int(x) for x in self.dims)
        if len(dims) not in (2, 3) or any(x < 1 for x in dims):
            raise ConfigError(f"unsupported layer shape {dims}")
        theta = np.ascontiguousarray(self.theta, dtype=np.float32)
        if theta.shape != (param_count(dims),):
            raise ConfigError(
                f"theta has {theta.size} values, shape {dims} needs {param_count(dims)}"
            )
        if not np.all(np.isfinite(theta)):
            raise StoreValidationError("parameters contain NaN or infinite values")
        theta.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "theta", theta)

    @property
    def byte_size(self) -> int:
        return self.theta.size * 4


@dataclass
class TrainConfig:
    eta: float = 0.01
    tau: int = 5
    batch: int = 64
    strategy: str = "fedavg"
    mu: float = 0.0
    rounds_t: int = 100
    seed: int = 0
    sample_weighted: bool = False

    def validate(self) -> None:
        if self.eta <= 0:
            raise ConfigError("learning rate must be positive")
        if self.tau < 0:
            raise ConfigError("local step count must be non-negative")
        if self.batch < 1:
            raise ConfigError("batch size must be at least 1")
        if self.mu < 0:
            raise ConfigError("proximal mu must be non-negative")
        if self.rounds_t < 1:
            raise ConfigError("need at least one federated round")
        if self.strategy not in STRATEGIES:
            raise ConfigError(f"unknown strategy {self.strategy!r}")


def _unpack(dims: tuple[int, ...], theta: np.ndarray):
    """Views of (W, b) per layer over a flat vector."""
    layers = []
    offset = 0
    for i in range(len(dims) - 1):
        n_in, n_out = dims[i], dims[i + 1]
        w = theta[offset : offset + n_in * n_out].reshape(n_in, n_out)
        offset += n_in * n_out
        b = theta[offset : offset + n_out]
        offset += n_out
        layers.append((w, b))
    return layers


def init_params(dims: tuple[int, ...], seed: int) -> ModelParams:
    """Uniform init in +-1/sqrt(fan_in) for weights and biases."""
    dims = tuple(int(x) for x in dims)
    theta = np.empty(param_count(dims), dtype=np.float64)
    rng = rng_for(seed, "init_params")
    offset = 0
    for i in range(len(dims) - 1):
        n_in, n_out = dims[i], dims[i + 1]
        bound = 1.0 / np.sqrt(n_in)
        size = n_in * n_out + n_out
        theta[offset : offset + size] = rng.uniform(-bound, bound, size)
        offset += size
    return ModelParams(dims=dims, theta=theta.astype(np.float32))


def forward(params: ModelParams, features: np.ndarray) -> np.ndarray:
    """Logits for a batch of feature rows (float64)."""
    return _forward_theta(params.dims, params.theta.astype(np.float64), features)


def _forward_theta(dims, theta64, features):
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    if x.shape[1] != dims[0]:
        raise ConfigError(f"feature dim {x.shape[1]} does not match model d={dims[0]}")
    layers = _unpack(dims, theta64)
    for idx, (w, b) in enumerate(layers):
        x = x @ w + b
        if idx < len(layers) - 1:
            x = np.maximum(x, 0.0)
    return x


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grad(
    dims: tuple[int, ...],
    theta: np.ndarray,
    features: np.ndarray,
    labels: np.ndarray,
) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient, both in float64.

    Accepts any float dtype for theta so finite-difference probes can work
    on an unrounded parameter vector.
    """
    x = np.atleast_2d(np.asarray(features, dtype=np.float64))
    y = np.asarray(labels, dtype=np.int64)
    if y.size == 0:
        raise ConfigError("batch must be non-empty")
    c = dims[-1]
    if y.min() < 0 or y.max() >= c:
        raise StoreValidationError(f"label out of range for c={c}")
    theta64 = np.asarray(theta, dtype=np.float64)
    layers = _unpack(dims, theta64)

    acts = [x]
    pre = []
    h = x
    for idx, (w, b) in enumerate(layers):
        z = h @ w + b
        pre.append(z)
        h = np.maximum(z, 0.0) if idx < len(layers) - 1 else z
        acts.append(h)

    probs = _softmax(acts[-1])
    n = x.shape[0]
    loss = float(-np.log(probs[np.arange(n), y]).mean())

    grad = np.zeros_like(theta64)
    glayers = _unpack(dims, grad)
    delta = probs.copy()
    delta[np.arange(n), y] -= 1.0
    delta /= n
    for idx in range(len(layers) - 1, -1, -1):
        w, _ = layers[idx]
        gw, gb = glayers[idx]
        gw[...] = acts[idx].T @ delta
        gb[...] = delta.sum(axis=0)
        if idx > 0:
            delta = (delta @ w.T) * (pre[idx - 1] > 0.0)
    return loss, grad


def local_update(
    global_params: ModelParams,
    features: np.ndarray,
    labels: np.ndarray,
    cfg: TrainConfig,
    client_id: int,
    round_index: int,
) -> tuple[ModelParams, int]:
    """tau minibatch SGD steps from the received global model.

    Batches walk a per-(seed, client, round) shuffle, reshuffling when the
    data is exhausted; the last batch of a pass may be short. With the
    fedprox strategy each gradient gains mu * (w - w_global). An empty
    training set returns the global model with zero steps.
    """
    n = int(np.asarray(labels).size)
    if n == 0 or cfg.tau == 0:
        return global_params, 0

    x = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    rng = rng_for(cfg.seed, "local", client_id, round_index)
    w_global = global_params.theta.astype(np.float64)
    w = w_global.copy()

    order = rng.permutation(n)
    cursor = 0
    for _ in range(cfg.tau):
        if cursor >= n:
            order = rng.permutation(n)
            cursor = 0
        batch = order[cursor : cursor + cfg.batch]
        cursor += cfg.batch
        _, grad = loss_and_grad(global_params.dims, w, x[batch], y[batch])
        if cfg.strategy == "fedprox" and cfg.mu != 0.0:
            grad = grad + cfg.mu * (w - w_global)
        w -= cfg.eta * grad
    return ModelParams(dims=global_params.dims, theta=w.astype(np.float32)), cfg.tau


def aggregate(
    locals_: list[tuple[ModelParams, int, int]],
    global_params: ModelParams,
    strategy: str = "fedavg",
    sample_weighted: bool = False,
) -> ModelParams:
    """Combine (local params, steps_taken, sample_count) into a new global.

    fedavg/fedprox take a uniform mean of the locals (or a sample-count
    weighted one). fednova re-normalizes each client's drift by its step
    count before applying a weighted total drift.
    """
    if not locals_:
        raise ConfigError("nothing to aggregate")
    if strategy not in STRATEGIES:
        raise ConfigError(f"unknown strategy {strategy!r}")
    dims = global_params.dims
    for params, _, _ in locals_:
        if params.dims != dims:
            raise ConfigError("model shape mismatch across clients")

    if all(steps == 0 for _, steps, _ in locals_):
        return global_params

    counts = np.asarray([max(0, n) for _, _, n in locals_], dtype=np.float64)
    if sample_weighted or strategy == "fednova":
        total = counts.sum()
        weights = counts / total if total > 0 else np.full(len(locals_), 1.0 / len(locals_))
    else:
        weights = np.full(len(locals_), 1.0 / len(locals_))

    if strategy in ("fedavg", "fedprox"):
        acc = np.zeros(global_params.theta.size, dtype=np.float64)
        if sample_weighted:
            for (params, _, _), wt in zip(locals_, weights):
                acc += wt * params.theta.astype(np.float64)
        else:
            for params, _, _ in locals_:
                acc += params.theta.astype(np.float64)
            acc /= len(locals_)
        return ModelParams(dims=dims, theta=acc.astype(np.float32))

    w_global = global_params.theta.astype(np.float64)
    tau_eff = 0.0
    drift = np.zeros_like(w_global)
    for (params, steps, _), wt in zip(locals_, weights):
        tau_eff += wt * steps
        if steps > 0:
            drift += wt * (w_global - params.theta.astype(np.float64)) / steps
    new = w_global - tau_eff * drift
    return ModelParams(dims=dims, theta=new.astype(np.float32))


def evaluate(params: ModelParams, features: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of argmax-correct predictions; ties go to the smaller class."""
    y = np.asarray(labels, dtype=np.int64)
    if y.size == 0:
        raise ConfigError("evaluation set must be non-empty")
    pred = np.argmax(forward(params, features), axis=1)
    return float((pred == y).mean())


def save_params(params: ModelParams, path) -> None:
    """Checkpoint: magic, u32 layer-dim count, u32 dims, f32 theta."""
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(params.dims)))
        fh.write(struct.pack(f"<{len(params.dims)}I", *params.dims))
        fh.write(params.theta.astype("<f4").tobytes())


def load_params(path) -> ModelParams:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise FormatError(f"{path}: bad model magic")
    (n_dims,) = struct.unpack_from("<I", blob, len(MODEL_MAGIC))
    dims = struct.unpack_from(f"<{n_dims}I", blob, len(MODEL_MAGIC) + 4)
    theta = np.frombuffer(blob, dtype="<f4", offset=len(MODEL_MAGIC) + 4 + 4 * n_dims)
    return ModelParams(dims=tuple(dims), theta=np.array(theta))
