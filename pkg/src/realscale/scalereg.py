"""Volume-scale regression head.

A small fully connected network maps a paired feature vector (or a single
embedding, in the ablation modes) to one positive scale factor: the ratio of
an object's true volume to its reconstruction's volume. Training minimizes a
normalized L1 loss, mean(|v - v_hat| / v), so small targets are not drowned
out by large ones; at inference the per-view predictions for an item are
averaged.

Everything is plain numpy in float64 with an explicit backward pass, which
keeps runs bit-reproducible per seed and lets tests check gradients against
finite differences.
"""

from __future__ import annotations

import json
import struct
import warnings
from dataclasses import dataclass, field, asdict

import numpy as np

from .embedding import Embedding, pair, subset_views

MODES = ("pair", "input_only", "render_only")
DEFAULT_HIDDEN_DIMS = (512, 128)
MIN_RECON_VOLUME_ML = 1e-9
MIN_PREDICTED_SCALE = 1e-6

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8

CHECKPOINT_MAGIC = b"SRK1"
CHECKPOINT_VERSION = 1


class CheckpointError(ValueError):
    """Raised for unreadable or version-mismatched checkpoint files."""


@dataclass
class TrainConfig:
    epochs: int = 300
    batch_size: int = 64
    base_lr: float = 1e-4
    lr_decay: float = 0.7
    lr_step_epochs: int = 10
    seed: int = 0
    mode: str = "pair"

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1 or self.lr_step_epochs < 1:
            raise ValueError("batch_size and lr_step_epochs must be >= 1")
        if not (self.base_lr > 0):
            raise ValueError("base_lr must be positive")
        if not (0 < self.lr_decay <= 1):
            raise ValueError("lr_decay must be in (0, 1]")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")


@dataclass
class RegressorParams:
    layer_dims: list[int]
    weights: list[np.ndarray] = field(repr=False)
    biases: list[np.ndarray] = field(repr=False)
    mode: str = "pair"

    def __post_init__(self):
        dims = self.layer_dims
        if len(dims) < 2 or dims[-1] != 1:
            raise ValueError("layer_dims needs at least input and a final dim of 1")
        if any(d < 1 for d in dims):
            raise ValueError("layer dims must be positive")
        if len(self.weights) != len(dims) - 1 or len(self.biases) != len(dims) - 1:
            raise ValueError("one weight matrix and bias vector per layer required")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i], dims[i + 1]) or b.shape != (dims[i + 1],):
                raise ValueError(f"layer {i}: parameter shape mismatch")
            if not (np.isfinite(w).all() and np.isfinite(b).all()):
                raise ValueError(f"layer {i}: non-finite parameters")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")

    @property
    def input_dim(self) -> int:
        return self.layer_dims[0]

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "RegressorParams":
        return RegressorParams(
            list(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.mode,
        )


def compute_scale_target(gt_volume_ml: float, recon_volume_ml: float) -> float:
    """Target scale factor: true volume over |reconstructed volume|.

    Inverted meshes (negative signed volume) are accepted with a warning;
    a near-zero reconstruction volume leaves the factor undefined.
    """
    if not (gt_volume_ml > 0):
        raise ValueError(f"gt_volume_ml must be positive, got {gt_volume_ml}")
    if abs(recon_volume_ml) < MIN_RECON_VOLUME_ML:
        raise ValueError(
            f"reconstruction volume {recon_volume_ml} is degenerate "
            f"(|v| < {MIN_RECON_VOLUME_ML} mL)"
        )
    if recon_volume_ml < 0:
        warnings.warn(
            "reconstruction volume is negative (inverted winding); using |v|",
            stacklevel=2,
        )
    return gt_volume_ml / abs(recon_volume_ml)


def init_params(layer_dims: list[int], seed: int, mode: str = "pair") -> RegressorParams:
    """Uniform(+-1/sqrt(fan_in)) weights, zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return RegressorParams(list(layer_dims), weights, biases, mode)


def _forward_batch(params: RegressorParams, x: np.ndarray) -> np.ndarray:
    a = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        a = a @ w + b
        if i != last:
            a = np.maximum(a, 0.0)
    return a[:, 0]


def forward(params: RegressorParams, feature: np.ndarray | Embedding) -> float:
    """Network output for a single feature vector."""
    if isinstance(feature, Embedding):
        feature = feature.vector
    x = np.asarray(feature, dtype=np.float64)
    if x.shape != (params.input_dim,):
        raise ValueError(
            f"feature length {x.shape} does not match input dim {params.input_dim}"
        )
    return float(_forward_batch(params, x[None, :])[0])


def loss(batch: list[tuple[float, float]]) -> float:
    """Normalized L1: mean over pairs of |v - v_hat| / v (targets must be > 0)."""
    if not len(batch):
        raise ValueError("loss of an empty batch is undefined")
    v = np.asarray([p[0] for p in batch], dtype=np.float64)
    v_hat = np.asarray([p[1] for p in batch], dtype=np.float64)
    if (v <= 0).any():
        raise ValueError("all scale targets must be positive")
    return float(np.mean(np.abs(v - v_hat) / v))


def _loss_and_grads(
    params: RegressorParams, x: np.ndarray, targets: np.ndarray
) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Forward pass with caches, then exact backprop of the normalized L1.

    Subgradients at the kinks are fixed to zero: sign(0) = 0 for the loss,
    and ReLU passes no gradient at exactly 0.
    """
    n = len(targets)
    activations = [x]
    pre_acts = []
    a = x
    last = len(params.weights) - 1
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        pre_acts.append(z)
        a = np.maximum(z, 0.0) if i != last else z
        activations.append(a)
    v_hat = activations[-1][:, 0]

    rel = (v_hat - targets) / targets
    value = float(np.mean(np.abs(rel)))

    delta = (np.sign(rel) / (targets * n))[:, None]
    grad_w: list[np.ndarray] = [None] * len(params.weights)
    grad_b: list[np.ndarray] = [None] * len(params.weights)
    for i in range(last, -1, -1):
        grad_w[i] = activations[i].T @ delta
        grad_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ params.weights[i].T) * (pre_acts[i - 1] > 0)
    return value, grad_w, grad_b


def backward(
    params: RegressorParams, batch: list[tuple[np.ndarray, float]]
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Exact gradients of :func:`loss` over a batch of (feature, target)."""
    if not batch:
        raise ValueError("backward of an empty batch is undefined")
    x = np.asarray([np.asarray(f, dtype=np.float64) for f, _ in batch])
    targets = np.asarray([t for _, t in batch], dtype=np.float64)
    if (targets <= 0).any():
        raise ValueError("all scale targets must be positive")
    _, grad_w, grad_b = _loss_and_grads(params, x, targets)
    return grad_w, grad_b


def lr_at(epoch: int, cfg: TrainConfig) -> float:
    """Step schedule: base_lr * decay^(epoch // step)."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return cfg.base_lr * cfg.lr_decay ** (epoch // cfg.lr_step_epochs)


def train(
    features: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
    hidden_dims: tuple[int, ...] = DEFAULT_HIDDEN_DIMS,
) -> tuple[RegressorParams, list[float]]:
    """Adam training over seeded epoch shuffles; deterministic per cfg.seed.

    Returns the trained parameters and the per-epoch mean training loss. The
    history entry for an epoch is the sample-weighted mean of its batch
    losses, i.e. the mean per-pair loss at the parameters each batch saw.
    """
    features = np.asarray(features, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if features.ndim != 2 or len(features) != len(targets):
        raise ValueError("features must be (n, d) with one target per row")
    if len(targets) == 0:
        raise ValueError("training set is empty")
    if (targets <= 0).any():
        raise ValueError("all scale targets must be positive")

    layer_dims = [features.shape[1], *hidden_dims, 1]
    params = init_params(layer_dims, cfg.seed, cfg.mode)
    shuffle_rng = np.random.default_rng([cfg.seed, 1])

    tensors = params.weights + params.biases
    adam_m = [np.zeros_like(p) for p in tensors]
    adam_v = [np.zeros_like(p) for p in tensors]
    scratch = [np.empty_like(p) for p in tensors]
    step = 0

    n = len(targets)
    history: list[float] = []
    for epoch in range(cfg.epochs):
        lr = lr_at(epoch, cfg)
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            value, grad_w, grad_b = _loss_and_grads(
                params, features[idx], targets[idx]
            )
            if not np.isfinite(value):
                raise RuntimeError(
                    f"non-finite loss at epoch {epoch}, step {step}: {value}"
                )
            epoch_loss += value * len(idx)
            step += 1
            step_scale = lr / (1.0 - ADAM_BETA1**step)
            inv_sqrt_bias2 = 1.0 / np.sqrt(1.0 - ADAM_BETA2**step)
            for p, g, m, v, buf in zip(
                tensors, grad_w + grad_b, adam_m, adam_v, scratch
            ):
                m *= ADAM_BETA1
                np.multiply(g, 1.0 - ADAM_BETA1, out=buf)
                m += buf
                v *= ADAM_BETA2
                np.multiply(g, g, out=buf)
                buf *= 1.0 - ADAM_BETA2
                v += buf
                np.sqrt(v, out=buf)
                buf *= inv_sqrt_bias2
                buf += ADAM_EPS
                np.divide(m, buf, out=buf)
                buf *= step_scale
                p -= buf
        history.append(epoch_loss / n)
    return params, history


def predict_item(
    params: RegressorParams,
    input_emb: Embedding | None,
    render_embs: list[Embedding],
    m: int,
) -> float:
    """Item-level scale factor: mean prediction over m evenly spread views.

    input_only mode ignores renders and returns the single forward value.
    The result is clamped to MIN_PREDICTED_SCALE so it can always be fed to
    mesh rescaling.
    """
    if params.mode == "input_only":
        if input_emb is None:
            raise ValueError("input_only mode requires an input embedding")
        return max(forward(params, input_emb), MIN_PREDICTED_SCALE)
    if not render_embs:
        raise ValueError(f"{params.mode} mode requires render embeddings")
    selected = subset_views(render_embs, m)
    if params.mode == "pair":
        if input_emb is None:
            raise ValueError("pair mode requires an input embedding")
        values = [forward(params, pair(input_emb, r)) for r in selected]
    else:
        values = [forward(params, r) for r in selected]
    return max(float(np.mean(values)), MIN_PREDICTED_SCALE)


# ---------------------------------------------------------------------------
# checkpoints
# ---------------------------------------------------------------------------


def save_checkpoint(
    params: RegressorParams,
    cfg: TrainConfig,
    history: list[float],
    path,
) -> None:
    """SRK1 container: JSON header, then history and parameters as float64 LE."""
    header = {
        "layer_dims": list(params.layer_dims),
        "mode": params.mode,
        "config": asdict(cfg),
        "history_len": len(history),
        "optimizer": {
            "name": "adam",
            "beta1": ADAM_BETA1,
            "beta2": ADAM_BETA2,
            "eps": ADAM_EPS,
        },
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    payload = [np.asarray(history, dtype="<f8")]
    for w, b in zip(params.weights, params.biases):
        payload.append(np.ascontiguousarray(w, dtype="<f8").reshape(-1))
        payload.append(np.asarray(b, dtype="<f8"))
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<II", CHECKPOINT_VERSION, len(header_bytes)))
        fh.write(header_bytes)
        for block in payload:
            fh.write(block.tobytes())


def load_checkpoint(path) -> tuple[RegressorParams, TrainConfig, list[float]]:
    with open(path, "rb") as fh:
        data = fh.read()
    if len(data) < 12 or data[:4] != CHECKPOINT_MAGIC:
        raise CheckpointError(f"not a checkpoint file (magic {data[:4]!r})")
    version, header_len = struct.unpack_from("<II", data, 4)
    if version != CHECKPOINT_VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version}")
    try:
        header = json.loads(data[12 : 12 + header_len].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"corrupt checkpoint header: {exc}") from exc

    dims = [int(d) for d in header["layer_dims"]]
    history_len = int(header["history_len"])
    n_params = sum(
        din * dout + dout for din, dout in zip(dims[:-1], dims[1:])
    )
    expected = 12 + header_len + 8 * (history_len + n_params)
    if len(data) != expected:
        raise CheckpointError(
            f"corrupt payload: file is {len(data)} bytes, expected {expected}"
        )
    values = np.frombuffer(data, dtype="<f8", offset=12 + header_len)
    history = values[:history_len].tolist()
    cursor = history_len
    weights, biases = [], []
    for din, dout in zip(dims[:-1], dims[1:]):
        weights.append(values[cursor : cursor + din * dout].reshape(din, dout).copy())
        cursor += din * dout
        biases.append(values[cursor : cursor + dout].copy())
        cursor += dout
    params = RegressorParams(dims, weights, biases, header["mode"])
    cfg = TrainConfig(**header["config"])
    return params, cfg, history
