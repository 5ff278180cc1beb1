"""Scale-free convolutional heuristic network in plain numpy.

conv stack (stride 1, same padding, ReLU) -> global average pooling ->
dense + ReLU -> scalar -> softplus. The softplus head keeps h >= 0 and
global pooling lets one parameter vector evaluate grids of any size.

All parameters live in one flat float64 vector; ``ModelConfig.layout``
describes how it is sliced into layer tensors.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

CHECKPOINT_MAGIC = b"LSTAR-CKPT v1\n"


class ChannelMismatch(ValueError):
    pass


class NonFiniteGradient(FloatingPointError):
    pass


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfig:
    conv_layers: tuple[tuple[int, int], ...] = ((8, 3), (8, 3), (8, 3))
    hidden_width: int = 32
    in_channels: int = 4
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "conv_layers", tuple((int(c), int(k)) for c, k in self.conv_layers))
        if not self.conv_layers:
            raise ValueError("at least one conv layer is required")
        if any(k % 2 == 0 or k < 1 for _, k in self.conv_layers):
            raise ValueError("kernel sizes must be odd")

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        shapes = []
        prev = self.in_channels
        for i, (out, k) in enumerate(self.conv_layers):
            shapes += [(f"conv{i}.w", (out, prev, k, k)), (f"conv{i}.b", (out,))]
            prev = out
        shapes += [
            ("dense.w", (self.hidden_width, prev)),
            ("dense.b", (self.hidden_width,)),
            ("out.w", (1, self.hidden_width)),
            ("out.b", (1,)),
        ]
        return shapes

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(s)) for _, s in self.layout())

    def to_dict(self) -> dict:
        return {
            "conv_layers": [list(c) for c in self.conv_layers],
            "hidden_width": self.hidden_width,
            "in_channels": self.in_channels,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> ModelConfig:
        return cls(
            conv_layers=tuple(tuple(c) for c in d["conv_layers"]),
            hidden_width=int(d["hidden_width"]),
            in_channels=int(d["in_channels"]),
            seed=int(d["seed"]),
        )


@dataclass
class ModelParams:
    config: ModelConfig
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=np.float64)
        if self.theta.shape != (self.config.n_params,):
            raise ValueError(f"theta has shape {self.theta.shape}, layout needs ({self.config.n_params},)")

    def views(self, vector: np.ndarray | None = None) -> dict[str, np.ndarray]:
        """Named reshaped views into ``vector`` (default: theta)."""
        vector = self.theta if vector is None else vector
        out, pos = {}, 0
        for name, shape in self.config.layout():
            size = int(np.prod(shape))
            out[name] = vector[pos : pos + size].reshape(shape)
            pos += size
        return out

    def copy(self) -> ModelParams:
        return ModelParams(self.config, self.theta.copy())


def model_init(config: ModelConfig) -> ModelParams:
    """He-normal weights (fan-in scaled), zero biases; deterministic per seed."""
    rng = np.random.default_rng(config.seed)
    theta = np.zeros(config.n_params)
    params = ModelParams(config, theta)
    for name, arr in params.views().items():
        if name.endswith(".w"):
            fan_in = int(np.prod(arr.shape[1:]))
            arr[...] = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=arr.shape)
    return params


def softplus(z: np.ndarray) -> np.ndarray:
    return np.logaddexp(0.0, z)


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class ForwardCache:
    shapes: list[tuple[int, int, int, int]] = field(default_factory=list)  # (B, H, W, C) entering each conv
    cols: list[np.ndarray] = field(default_factory=list)
    masks: list[np.ndarray] = field(default_factory=list)
    pooled: np.ndarray | None = None
    z1: np.ndarray | None = None
    a1: np.ndarray | None = None
    z2: np.ndarray | None = None


def forward_batch(params: ModelParams, x: np.ndarray, keep_cache: bool = False):
    """Evaluate h for a batch ``x`` of shape (B, C, H, W).

    Returns ``h`` of shape (B,), plus the activation cache when ``keep_cache``.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 3:
        x = x[None]
    cfg = params.config
    if x.shape[1] != cfg.in_channels:
        raise ChannelMismatch(f"input has {x.shape[1]} channels, model expects {cfg.in_channels}")
    v = params.views()
    cache = ForwardCache() if keep_cache else None
    a = np.ascontiguousarray(x.transpose(0, 2, 3, 1))
    B, H, W, _ = a.shape
    for i, (out, k) in enumerate(cfg.conv_layers):
        C = a.shape[3]
        p = k // 2
        padded = np.pad(a, ((0, 0), (p, p), (p, p), (0, 0)))
        cols = sliding_window_view(padded, (k, k), axis=(1, 2)).reshape(B * H * W, C * k * k)
        z = cols @ v[f"conv{i}.w"].reshape(out, -1).T + v[f"conv{i}.b"]
        mask = z > 0
        a = (z * mask).reshape(B, H, W, out)
        if keep_cache:
            cache.shapes.append((B, H, W, C))
            cache.cols.append(cols)
            cache.masks.append(mask)
    pooled = a.mean(axis=(1, 2))
    z1 = pooled @ v["dense.w"].T + v["dense.b"]
    a1 = np.maximum(z1, 0.0)
    z2 = (a1 @ v["out.w"].T + v["out.b"])[:, 0]
    h = softplus(z2)
    if keep_cache:
        cache.pooled, cache.z1, cache.a1, cache.z2 = pooled, z1, a1, z2
        return h, cache
    return h


def forward(params: ModelParams, features: np.ndarray) -> float:
    """Heuristic value of a single (C, H, W) feature tensor."""
    return float(forward_batch(params, features)[0])


def backward(
    params: ModelParams,
    batch: np.ndarray,
    dL_dh: np.ndarray,
    cache: ForwardCache | None = None,
) -> np.ndarray:
    """Gradient over theta of ``sum_i dL_dh[i] * h(batch[i])``."""
    dL_dh = np.asarray(dL_dh, dtype=np.float64)
    if cache is None:
        _, cache = forward_batch(params, batch, keep_cache=True)
    if dL_dh.shape != cache.z2.shape:
        raise ValueError("dL_dh length must match the batch")
    cfg = params.config
    v = params.views()
    grad = np.zeros_like(params.theta)
    gv = params.views(grad)

    dz2 = dL_dh * sigmoid(cache.z2)
    gv["out.w"][0] = dz2 @ cache.a1
    gv["out.b"][0] = dz2.sum()
    dz1 = np.outer(dz2, v["out.w"][0]) * (cache.z1 > 0)
    gv["dense.w"][...] = dz1.T @ cache.pooled
    gv["dense.b"][...] = dz1.sum(axis=0)
    dpooled = dz1 @ v["dense.w"]

    B, H, W, _ = cache.shapes[-1]
    da = np.broadcast_to(dpooled[:, None, None, :] / (H * W), (B, H, W, dpooled.shape[1]))
    for i in range(len(cfg.conv_layers) - 1, -1, -1):
        out, k = cfg.conv_layers[i]
        _, _, _, C = cache.shapes[i]
        dz = da.reshape(-1, out) * cache.masks[i]
        gv[f"conv{i}.w"][...] = (dz.T @ cache.cols[i]).reshape(out, C, k, k)
        gv[f"conv{i}.b"][...] = dz.sum(axis=0)
        if i == 0:
            break
        dcols = (dz @ v[f"conv{i}.w"].reshape(out, -1)).reshape(B, H, W, C, k, k)
        p = k // 2
        dpad = np.zeros((B, H + 2 * p, W + 2 * p, C))
        for di in range(k):
            for dj in range(k):
                dpad[:, di : di + H, dj : dj + W, :] += dcols[..., di, dj]
        da = dpad[:, p : p + H, p : p + W, :]
    return grad


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, n: int, lr: float = 0.001) -> AdamState:
        return cls(np.zeros(n), np.zeros(n), lr=lr)


def adam_step(params: ModelParams, grads: np.ndarray, state: AdamState) -> tuple[ModelParams, AdamState]:
    """One bias-corrected Adam update. Returns new params; ``state`` is updated in place."""
    grads = np.asarray(grads, dtype=np.float64)
    if grads.shape != params.theta.shape or state.m.shape != params.theta.shape:
        raise ValueError("gradient / moment shapes do not match theta")
    if not np.all(np.isfinite(grads)):
        raise NonFiniteGradient("gradient contains NaN or inf")
    state.step += 1
    state.m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = state.m / (1.0 - state.beta1**state.step)
    v_hat = state.v / (1.0 - state.beta2**state.step)
    theta = params.theta - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return ModelParams(params.config, theta), state


def save_checkpoint(params: ModelParams, path: str | Path) -> None:
    """Magic line, one JSON header line (config + layout), then little-endian float64 data."""
    header = {
        "config": params.config.to_dict(),
        "layout": [[name, list(shape)] for name, shape in params.config.layout()],
        "n_params": params.config.n_params,
    }
    blob = CHECKPOINT_MAGIC + json.dumps(header, sort_keys=True).encode() + b"\n"
    blob += struct.pack(f"<{params.theta.size}d", *params.theta)
    Path(path).write_bytes(blob)


def load_checkpoint(path: str | Path) -> ModelParams:
    blob = Path(path).read_bytes()
    if not blob.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError(f"{path}: not a checkpoint (bad magic)")
    rest = blob[len(CHECKPOINT_MAGIC) :]
    line, sep, data = rest.partition(b"\n")
    if not sep:
        raise CheckpointError(f"{path}: truncated header")
    header = json.loads(line)
    config = ModelConfig.from_dict(header["config"])
    layout = [[name, list(shape)] for name, shape in config.layout()]
    if header["layout"] != layout or header["n_params"] != config.n_params:
        raise CheckpointError(f"{path}: layout does not match config")
    if len(data) != 8 * config.n_params:
        raise CheckpointError(f"{path}: expected {config.n_params} parameters")
    theta = np.frombuffer(data, dtype="<f8").astype(np.float64)
    return ModelParams(config, theta)
