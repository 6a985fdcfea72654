"""The acoustic model: a small fully connected ReLU network.

299 inputs, two hidden layers of 120, and one softmax output per phone;
about 56k weights in the default shape.  Everything is plain numpy with
hand-written gradients, trained by Adam on shuffled frames.  Parameters are
float32 so a model file round-trips bit for bit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ModelError
from .phones import PhoneInventory

MODEL_MAGIC = b"PRAKAM"
MODEL_VERSION = 1


@dataclass
class AmConfig:
    input_dim: int = 299
    hidden_dims: tuple[int, ...] = (120, 120)
    output_dim: int = 44
    seed: int = 0

    def layer_dims(self) -> list[tuple[int, int]]:
        sizes = [self.input_dim, *self.hidden_dims, self.output_dim]
        return list(zip(sizes[:-1], sizes[1:]))


@dataclass
class AmParams:
    weights: list[np.ndarray]  # each (out, in)
    biases: list[np.ndarray]   # each (out,)


def param_count(cfg: AmConfig) -> int:
    return sum(o * i + o for i, o in cfg.layer_dims())


def init_params(cfg: AmConfig, dtype=np.float32) -> AmParams:
    """He-initialized weights, zero biases, reproducible from cfg.seed."""
    rng = np.random.default_rng(cfg.seed)
    weights, biases = [], []
    for fan_in, fan_out in cfg.layer_dims():
        w = rng.standard_normal((fan_out, fan_in)) * np.sqrt(2.0 / fan_in)
        weights.append(w.astype(dtype))
        biases.append(np.zeros(fan_out, dtype=dtype))
    return AmParams(weights=weights, biases=biases)


def _check_input(params: AmParams, x: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x))
    if x.shape[1] != params.weights[0].shape[1]:
        raise ModelError(
            f"input dimension {x.shape[1]} does not match model "
            f"({params.weights[0].shape[1]})")
    if not np.all(np.isfinite(x)):
        raise ModelError("non-finite values in network input")
    return x


def _affine_stack(params: AmParams, x: np.ndarray) -> list[np.ndarray]:
    """Pre-activations and hidden activations; last entry is the logit matrix."""
    acts = [x]
    h = x
    for layer, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = h @ w.T + b
        if layer < len(params.weights) - 1:
            h = np.maximum(z, 0.0)
            acts.append(h)
        else:
            acts.append(z)
    return acts


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def forward(params: AmParams, x: np.ndarray) -> np.ndarray:
    """Phone posteriors, shape (batch, output_dim); rows sum to one."""
    x = _check_input(params, x)
    return _softmax(_affine_stack(params, x)[-1])


def cross_entropy(params: AmParams, x: np.ndarray, targets: np.ndarray) -> float:
    probs = forward(params, x)
    targets = _check_targets(probs, targets)
    # float64 before flooring: 1e-300 underflows to zero in float32
    picked = probs[np.arange(len(targets)), targets].astype(np.float64)
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))


def _check_targets(probs_or_logits: np.ndarray, targets: np.ndarray) -> np.ndarray:
    targets = np.asarray(targets, dtype=np.int64)
    if targets.ndim != 1 or len(targets) != len(probs_or_logits):
        raise ModelError("targets must be one class index per input row")
    if len(targets) == 0:
        raise ModelError("empty training batch")
    if targets.min() < 0 or targets.max() >= probs_or_logits.shape[1]:
        raise ModelError("target class index outside the model's output range")
    return targets


def backprop(params: AmParams, x: np.ndarray, targets: np.ndarray):
    """Mean cross-entropy loss and its gradient for a batch.

    Returns (loss, weight grads, bias grads); gradients have the same
    shapes and dtypes as the parameters.
    """
    x = _check_input(params, x)
    acts = _affine_stack(params, x)
    probs = _softmax(acts[-1])
    targets = _check_targets(probs, targets)
    batch = len(targets)
    picked = probs[np.arange(batch), targets].astype(np.float64)
    loss = float(-np.mean(np.log(np.maximum(picked, 1e-300))))

    delta = probs.copy()
    delta[np.arange(batch), targets] -= 1.0
    delta /= batch

    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.biases)
    for layer in range(len(params.weights) - 1, -1, -1):
        h = acts[layer]
        grads_w[layer] = (delta.T @ h).astype(params.weights[layer].dtype)
        grads_b[layer] = delta.sum(axis=0).astype(params.biases[layer].dtype)
        if layer > 0:
            delta = (delta @ params.weights[layer]) * (acts[layer] > 0)
    return loss, grads_w, grads_b


@dataclass
class AdamState:
    m_w: list[np.ndarray]
    v_w: list[np.ndarray]
    m_b: list[np.ndarray]
    v_b: list[np.ndarray]
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: AmParams) -> "AdamState":
        return cls(
            m_w=[np.zeros_like(w, dtype=np.float64) for w in params.weights],
            v_w=[np.zeros_like(w, dtype=np.float64) for w in params.weights],
            m_b=[np.zeros_like(b, dtype=np.float64) for b in params.biases],
            v_b=[np.zeros_like(b, dtype=np.float64) for b in params.biases],
        )


def train_step(params: AmParams, x: np.ndarray, targets: np.ndarray,
               opt: AdamState, lr: float = 1e-3) -> float:
    """One Adam update in place; returns the batch loss before the update."""
    loss, grads_w, grads_b = backprop(params, x, targets)
    opt.t += 1
    bc1 = 1.0 - opt.beta1 ** opt.t
    bc2 = 1.0 - opt.beta2 ** opt.t

    def update(param, m, v, grad):
        g = grad.astype(np.float64)
        m *= opt.beta1
        m += (1.0 - opt.beta1) * g
        v *= opt.beta2
        v += (1.0 - opt.beta2) * g * g
        step = lr * (m / bc1) / (np.sqrt(v / bc2) + opt.eps)
        param -= step.astype(param.dtype)

    for i in range(len(params.weights)):
        update(params.weights[i], opt.m_w[i], opt.v_w[i], grads_w[i])
        update(params.biases[i], opt.m_b[i], opt.v_b[i], grads_b[i])
    return loss


@dataclass
class ModelFile:
    params: AmParams
    cfg: AmConfig
    priors: np.ndarray | None = None  # per-phone frame counts from training


def save_model(path: str | Path, params: AmParams, cfg: AmConfig,
               inventory: PhoneInventory, priors: np.ndarray | None = None) -> None:
    """Binary model file: header, float32 tensors, optional prior vector.

    The header records the layer sizes and a digest of the phone inventory;
    loading against a different inventory fails instead of mislabeling
    every output.
    """
    if cfg.output_dim != len(inventory):
        raise ModelError(
            f"model has {cfg.output_dim} outputs but inventory has {len(inventory)} phones")
    dims = [cfg.input_dim, *cfg.hidden_dims, cfg.output_dim]
    with open(path, "wb") as f:
        f.write(MODEL_MAGIC)
        f.write(struct.pack("<II", MODEL_VERSION, len(dims)))
        f.write(struct.pack(f"<{len(dims)}I", *dims))
        f.write(inventory.digest())
        f.write(struct.pack("<B", 0 if priors is None else 1))
        for w, b in zip(params.weights, params.biases):
            f.write(np.ascontiguousarray(w, dtype="<f4").tobytes())
            f.write(np.ascontiguousarray(b, dtype="<f4").tobytes())
        if priors is not None:
            f.write(np.ascontiguousarray(priors, dtype="<f8").tobytes())


def load_model(path: str | Path, inventory: PhoneInventory | None = None) -> ModelFile:
    raw = Path(path).read_bytes()
    if raw[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ModelError(f"{path} is not an acoustic model file")
    off = len(MODEL_MAGIC)

    def take(n: int) -> bytes:
        nonlocal off
        if off + n > len(raw):
            raise ModelError(f"model file {path} is truncated")
        out = raw[off:off + n]
        off += n
        return out

    version, n_dims = struct.unpack("<II", take(8))
    if version != MODEL_VERSION:
        raise ModelError(f"unsupported model version {version} in {path}")
    dims = struct.unpack(f"<{n_dims}I", take(4 * n_dims))
    digest = take(32)
    if inventory is not None:
        if digest != inventory.digest():
            raise ModelError(
                f"model {path} was trained with a different phone inventory")
        if dims[-1] != len(inventory):
            raise ModelError(f"model {path} output size does not match the inventory")
    (has_priors,) = struct.unpack("<B", take(1))

    cfg = AmConfig(input_dim=dims[0], hidden_dims=tuple(dims[1:-1]), output_dim=dims[-1])
    weights, biases = [], []
    for fan_in, fan_out in cfg.layer_dims():
        w = np.frombuffer(take(4 * fan_out * fan_in), dtype="<f4")
        weights.append(w.reshape(fan_out, fan_in).copy())
        biases.append(np.frombuffer(take(4 * fan_out), dtype="<f4").copy())
    priors = None
    if has_priors:
        priors = np.frombuffer(take(8 * cfg.output_dim), dtype="<f8").copy()
    if off != len(raw):
        raise ModelError(f"model file {path} has {len(raw) - off} trailing bytes")
    return ModelFile(params=AmParams(weights=weights, biases=biases), cfg=cfg, priors=priors)
