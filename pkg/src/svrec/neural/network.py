"""Conv + LSTM per-frame classifier with hand-written backpropagation.

Per frame: three ``3x3 conv (same) -> ReLU -> 2x2 max-pool`` stages, a ReLU
dense layer (``full4``), three stacked LSTM layers (``rnn5..rnn7``) whose
state carries across frames, and a softmax over ``outputs`` classes.

Everything except the recurrences is batched over time. Gradients are
exact reverse-mode through the whole sequence (no truncation).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

PARAM_VERSION = 1
RNN_NAMES = ("rnn5", "rnn6", "rnn7")


@dataclass
class NetworkConfig:
    input_side: int = 32
    conv_filters: tuple = (8, 16, 32)
    kernel: int = 3
    full4: int = 64
    rnn: tuple = (32, 32, 32)
    outputs: int = 5
    seed: int = 0

    def __post_init__(self):
        self.conv_filters = tuple(int(f) for f in self.conv_filters)
        self.rnn = tuple(int(r) for r in self.rnn)

    def validate(self) -> None:
        if len(self.conv_filters) != 3:
            raise ValueError("exactly three conv stages are required")
        if len(self.rnn) != 3:
            raise ValueError("exactly three recurrent layers are required")
        if self.input_side < 8 or self.input_side % 8:
            raise ValueError("input_side must be a positive multiple of 8 (three 2x pools)")
        if self.kernel < 1 or self.kernel % 2 == 0:
            raise ValueError("kernel side must be odd for same padding")
        if min(self.conv_filters + self.rnn) < 1 or self.full4 < 1:
            raise ValueError("layer sizes must be positive")
        if self.outputs < 2:
            raise ValueError("need at least two outputs")

    @property
    def flat_size(self) -> int:
        side = self.input_side // 8
        return self.conv_filters[-1] * side * side

    def to_dict(self) -> dict:
        d = asdict(self)
        d["conv_filters"] = list(self.conv_filters)
        d["rnn"] = list(self.rnn)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> NetworkConfig:
        return cls(**d)

    @classmethod
    def full_scale(cls, outputs: int = 12, seed: int = 0) -> NetworkConfig:
        """Large profile: 128 px input, 512-unit full4, 256-unit rnn7."""
        return cls(input_side=128, conv_filters=(32, 64, 128), full4=512, rnn=(256, 256, 256), outputs=outputs, seed=seed)


def param_shapes(config: NetworkConfig) -> list[tuple[str, tuple]]:
    """Canonical parameter order and shapes."""
    shapes = []
    chans = 1
    k = config.kernel
    for i, f in enumerate(config.conv_filters, start=1):
        shapes += [(f"conv{i}.w", (f, chans, k, k)), (f"conv{i}.b", (f,))]
        chans = f
    shapes += [("full4.w", (config.flat_size, config.full4)), ("full4.b", (config.full4,))]
    prev = config.full4
    for name, h in zip(RNN_NAMES, config.rnn):
        # gate column blocks: input, forget, cell, output
        shapes += [(f"{name}.w", (prev + h, 4 * h)), (f"{name}.b", (4 * h,))]
        prev = h
    shapes += [("full8.w", (prev, config.outputs)), ("full8.b", (config.outputs,))]
    return shapes


def _fans(name: str, shape: tuple) -> tuple[int, int]:
    if name.startswith("conv"):
        f, c, k, _ = shape
        return c * k * k, f * k * k
    return shape[0], shape[1]


@dataclass
class NetworkModel:
    config: NetworkConfig
    params: dict = field(default_factory=dict)

    @property
    def dtype(self):
        return next(iter(self.params.values())).dtype

    def astype(self, dtype) -> NetworkModel:
        return NetworkModel(self.config, {k: v.astype(dtype) for k, v in self.params.items()})

    def copy(self) -> NetworkModel:
        return NetworkModel(self.config, {k: v.copy() for k, v in self.params.items()})


def init_network(config: NetworkConfig, dtype=np.float32) -> NetworkModel:
    """He-uniform weights ahead of a ReLU, Glorot-uniform elsewhere.

    Biases start at zero except the LSTM forget gates, which start at 1.
    Glorot scaling on the ReLU stack shrinks activations layer by layer, and
    low-contrast views then sat at the class prior for thousands of steps.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    params = {}
    for name, shape in param_shapes(config):
        if name.endswith(".b"):
            p = np.zeros(shape)
            if name.startswith("rnn"):
                h = shape[0] // 4
                p[h : 2 * h] = 1.0
        else:
            fan_in, fan_out = _fans(name, shape)
            relu = name.startswith(("conv", "full4"))
            limit = np.sqrt(6.0 / fan_in) if relu else np.sqrt(6.0 / (fan_in + fan_out))
            p = rng.uniform(-limit, limit, size=shape)
        params[name] = p.astype(dtype)
    return NetworkModel(config, params)


# --------------------------------------------------------------------------
# layer primitives (batched over the leading time axis)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def _conv_forward(x, w, b):
    """Same-padded correlation. x: (T, C, S, S), w: (F, C, k, k)."""
    k = w.shape[2]
    p = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p)))
    win = sliding_window_view(xp, (k, k), axis=(2, 3))  # (T, C, S, S, k, k)
    out = np.einsum("tcyxij,fcij->tfyx", win, w, optimize=True) + b[None, :, None, None]
    return out, xp


def _conv_backward(dout, xp, w):
    k = w.shape[2]
    p = k // 2
    win = sliding_window_view(xp, (k, k), axis=(2, 3))
    dw = np.einsum("tcyxij,tfyx->fcij", win, dout, optimize=True)
    db = dout.sum(axis=(0, 2, 3))
    s = dout.shape[2]
    dxp = np.zeros_like(xp)
    for i in range(k):
        for j in range(k):
            dxp[:, :, i : i + s, j : j + s] += np.einsum("tfyx,fc->tcyx", dout, w[:, :, i, j], optimize=True)
    return dxp[:, :, p : p + s, p : p + s], dw, db


def _pool_forward(x):
    t, c, s, _ = x.shape
    blocks = x.reshape(t, c, s // 2, 2, s // 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(t, c, s // 2, s // 2, 4)
    arg = np.argmax(blocks, axis=-1)  # first maximum takes the gradient
    return np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0], arg


def _pool_backward(dout, arg):
    t, c, h, _ = dout.shape
    blocks = np.zeros((t, c, h, h, 4), dtype=dout.dtype)
    np.put_along_axis(blocks, arg[..., None], dout[..., None], axis=-1)
    return blocks.reshape(t, c, h, h, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(t, c, 2 * h, 2 * h)


def _lstm_forward(x, w, b, h_size):
    """Run one LSTM layer over a (T, D) sequence from zero state."""
    n_t = x.shape[0]
    d = x.shape[1]
    wx, wh = w[:d], w[d:]
    pre_x = x @ wx + b
    h = np.zeros(h_size, dtype=x.dtype)
    c = np.zeros(h_size, dtype=x.dtype)
    hs = np.empty((n_t, h_size), dtype=x.dtype)
    cs = np.empty((n_t, h_size), dtype=x.dtype)
    gates = np.empty((n_t, 4 * h_size), dtype=x.dtype)
    for t in range(n_t):
        z = pre_x[t] + h @ wh
        i = _sigmoid(z[:h_size])
        f = _sigmoid(z[h_size : 2 * h_size])
        g = np.tanh(z[2 * h_size : 3 * h_size])
        o = _sigmoid(z[3 * h_size :])
        c = f * c + i * g
        h = o * np.tanh(c)
        gates[t] = np.concatenate([i, f, g, o])
        hs[t] = h
        cs[t] = c
    return hs, cs, gates


def _lstm_backward(dh_out, x, w, hs, cs, gates):
    n_t, h_size = hs.shape
    d = x.shape[1]
    wh = w[d:]
    dz = np.empty_like(gates)
    dh_next = np.zeros(h_size, dtype=hs.dtype)
    dc_next = np.zeros(h_size, dtype=hs.dtype)
    for t in range(n_t - 1, -1, -1):
        i = gates[t, :h_size]
        f = gates[t, h_size : 2 * h_size]
        g = gates[t, 2 * h_size : 3 * h_size]
        o = gates[t, 3 * h_size :]
        tc = np.tanh(cs[t])
        dh = dh_out[t] + dh_next
        dc = dc_next + dh * o * (1.0 - tc * tc)
        c_prev = cs[t - 1] if t > 0 else np.zeros_like(dc)
        dz[t, :h_size] = dc * g * i * (1.0 - i)
        dz[t, h_size : 2 * h_size] = dc * c_prev * f * (1.0 - f)
        dz[t, 2 * h_size : 3 * h_size] = dc * i * (1.0 - g * g)
        dz[t, 3 * h_size :] = dh * tc * o * (1.0 - o)
        dc_next = dc * f
        dh_next = dz[t] @ wh.T
    h_prev = np.vstack([np.zeros((1, h_size), dtype=hs.dtype), hs[:-1]])
    dw = np.vstack([x.T @ dz, h_prev.T @ dz])
    db = dz.sum(axis=0)
    dx = dz @ w[:d].T
    return dx, dw, db


# --------------------------------------------------------------------------
# forward / backward


@dataclass
class ActivationTrace:
    full4: np.ndarray  # (T, full4)
    rnn7_cell: np.ndarray  # (T, rnn7)
    probs: np.ndarray  # (T, outputs)


def _check_input(model: NetworkModel, frames) -> np.ndarray:
    frames = np.asarray(frames)
    s = model.config.input_side
    if frames.ndim != 3 or frames.shape[1:] != (s, s) or frames.shape[0] < 1:
        raise ValueError(f"expected (T, {s}, {s}) frames, got {frames.shape}")
    return frames.astype(model.dtype, copy=False)


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def _run(model: NetworkModel, frames):
    p = model.params
    cfg = model.config
    cache = {}
    a = frames[:, None]
    for i in range(1, 4):
        z, xp = _conv_forward(a, p[f"conv{i}.w"], p[f"conv{i}.b"])
        r = np.maximum(z, 0)
        a, arg = _pool_forward(r)
        cache[f"conv{i}"] = (xp, z > 0, arg)
    flat = a.reshape(a.shape[0], -1)
    z4 = flat @ p["full4.w"] + p["full4.b"]
    f4 = np.maximum(z4, 0)
    cache["full4"] = (flat, z4 > 0, a.shape)
    x = f4
    for name, h in zip(RNN_NAMES, cfg.rnn):
        hs, cs, gates = _lstm_forward(x, p[f"{name}.w"], p[f"{name}.b"], h)
        cache[name] = (x, hs, cs, gates)
        x = hs
    probs = _softmax(x @ p["full8.w"] + p["full8.b"])
    cache["full8"] = x
    return probs, f4, cache


def forward(model: NetworkModel, frames) -> tuple[np.ndarray, ActivationTrace]:
    """Per-frame class probabilities for a (T, S, S) sequence in [0, 1]."""
    frames = _check_input(model, frames)
    probs, f4, cache = _run(model, frames)
    return probs, ActivationTrace(f4, cache["rnn7"][2], probs)


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    picked = probs[np.arange(len(labels)), labels]
    return float(-np.mean(np.log(np.maximum(picked, np.finfo(probs.dtype).tiny))))


def loss_and_gradients(model: NetworkModel, frames, labels) -> tuple[float, dict]:
    """Mean per-frame cross-entropy and its gradient for every parameter."""
    frames = _check_input(model, frames)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (frames.shape[0],):
        raise ValueError(f"{labels.size} labels for {frames.shape[0]} frames")
    if labels.min() < 0 or labels.max() >= model.config.outputs:
        raise ValueError("label outside the output range")
    p = model.params
    cfg = model.config
    probs, _, cache = _run(model, frames)
    n_t = frames.shape[0]
    loss = cross_entropy(probs, labels)
    grads = {}

    dlogits = probs.copy()
    dlogits[np.arange(n_t), labels] -= 1.0
    dlogits /= n_t
    h7 = cache["full8"]
    grads["full8.w"] = h7.T @ dlogits
    grads["full8.b"] = dlogits.sum(axis=0)
    dx = dlogits @ p["full8.w"].T
    for name in reversed(RNN_NAMES):
        x, hs, cs, gates = cache[name]
        dx, grads[f"{name}.w"], grads[f"{name}.b"] = _lstm_backward(dx, x, p[f"{name}.w"], hs, cs, gates)

    flat, mask4, pooled_shape = cache["full4"]
    dz4 = dx * mask4
    grads["full4.w"] = flat.T @ dz4
    grads["full4.b"] = dz4.sum(axis=0)
    da = (dz4 @ p["full4.w"].T).reshape(pooled_shape)
    for i in (3, 2, 1):
        xp, mask, arg = cache[f"conv{i}"]
        dz = _pool_backward(da, arg) * mask
        da, grads[f"conv{i}.w"], grads[f"conv{i}.b"] = _conv_backward(dz, xp, p[f"conv{i}.w"])
    return loss, {k: grads[k].astype(model.dtype, copy=False) for k in p}
