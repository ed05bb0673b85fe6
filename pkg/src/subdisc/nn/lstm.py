"""LSTM stack with exact analytic gradients.

Standard LSTM without peepholes. Gate order along the 4H axis is
input / forget / cell-candidate / output:

    z_t = W_x x_t + W_h h_{t-1} + b
    i, f, o = sigmoid(z_i, z_f, z_o);  g = tanh(z_g)
    c_t = f * c_{t-1} + i * g
    h_t = o * tanh(c_t)

Residual connections add a layer's input to its output for layers >= 2 when
input and output widths match; layer 1 never has one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DimensionError


@dataclass
class LstmLayerParams:
    w_x: np.ndarray  # (4H, D)
    w_h: np.ndarray  # (4H, H)
    b: np.ndarray    # (4H,)

    def __post_init__(self):
        four_h, d = self.w_x.shape
        if four_h % 4:
            raise DimensionError(f"w_x first dim {four_h} not a multiple of 4")
        h = four_h // 4
        if self.w_h.shape != (four_h, h):
            raise DimensionError(f"w_h shape {self.w_h.shape}, expected {(four_h, h)}")
        if self.b.shape != (four_h,):
            raise DimensionError(f"b shape {self.b.shape}, expected {(four_h,)}")

    @property
    def hidden_size(self) -> int:
        return self.w_x.shape[0] // 4

    @property
    def input_size(self) -> int:
        return self.w_x.shape[1]

    def names(self, prefix: str) -> dict[str, np.ndarray]:
        return {f"{prefix}.w_x": self.w_x, f"{prefix}.w_h": self.w_h, f"{prefix}.b": self.b}


def lstm_init(input_dim: int, hidden_sizes: list[int],
              seed: int | np.random.Generator,
              dtype=np.float32, forget_bias: float = 1.0) -> list[LstmLayerParams]:
    """Uniform +-1/sqrt(fan_in) weights, forget-gate bias preset, rest zero."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layers = []
    d = input_dim
    for h in hidden_sizes:
        kx = 1.0 / np.sqrt(d)
        kh = 1.0 / np.sqrt(h)
        w_x = rng.uniform(-kx, kx, size=(4 * h, d)).astype(dtype)
        w_h = rng.uniform(-kh, kh, size=(4 * h, h)).astype(dtype)
        b = np.zeros(4 * h, dtype=dtype)
        b[h: 2 * h] = forget_bias
        layers.append(LstmLayerParams(w_x, w_h, b))
        d = h
    return layers


class _LayerCache:
    __slots__ = ("x", "gates", "c", "h_prev")

    def __init__(self, x, gates, c, h_prev):
        self.x = x            # (B, T, D) layer input
        self.gates = gates    # (B, T, 4H) post-nonlinearity [i, f, g, o]
        self.c = c            # (B, T, H)
        self.h_prev = h_prev  # (B, T, H) h_{t-1} sequence (zeros at t=0)


class LstmCache:
    def __init__(self, layers, layer_caches, residual, squeeze):
        self.layers = layers
        self.layer_caches = layer_caches
        self.residual = residual
        self.squeeze = squeeze


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def _forward_layer(params: LstmLayerParams, x: np.ndarray):
    b_sz, t_len, d = x.shape
    h = params.hidden_size
    if d != params.input_size:
        raise DimensionError(f"layer expects input dim {params.input_size}, got {d}")
    # input contribution for all timesteps at once
    zx = x.reshape(b_sz * t_len, d) @ params.w_x.T
    zx = zx.reshape(b_sz, t_len, 4 * h) + params.b
    wh_t = params.w_h.T
    gates = np.empty((b_sz, t_len, 4 * h), dtype=x.dtype)
    cs = np.empty((b_sz, t_len, h), dtype=x.dtype)
    h_prev_seq = np.empty((b_sz, t_len, h), dtype=x.dtype)
    hs = np.empty((b_sz, t_len, h), dtype=x.dtype)
    h_t = np.zeros((b_sz, h), dtype=x.dtype)
    c_t = np.zeros((b_sz, h), dtype=x.dtype)
    for t in range(t_len):
        h_prev_seq[:, t] = h_t
        z = zx[:, t] + h_t @ wh_t
        i = _sigmoid(z[:, :h])
        f = _sigmoid(z[:, h: 2 * h])
        g = np.tanh(z[:, 2 * h: 3 * h])
        o = _sigmoid(z[:, 3 * h:])
        c_t = f * c_t + i * g
        h_t = o * np.tanh(c_t)
        gates[:, t, :h] = i
        gates[:, t, h: 2 * h] = f
        gates[:, t, 2 * h: 3 * h] = g
        gates[:, t, 3 * h:] = o
        cs[:, t] = c_t
        hs[:, t] = h_t
    return hs, _LayerCache(x, gates, cs, h_prev_seq)


def lstm_sequence_forward(layers: list[LstmLayerParams], x: np.ndarray,
                          residual: bool = True, return_cache: bool = False):
    """Run the stack over a (T, D) sequence or (B, T, D) batch.

    Returns the list of per-layer hidden sequences (after any residual add),
    optionally with the cache needed by lstm_backward.
    """
    x = np.asarray(x)
    squeeze = x.ndim == 2
    if squeeze:
        x = x[None]
    if x.ndim != 3:
        raise DimensionError(f"input must be (T, D) or (B, T, D), got {x.shape}")
    outputs = []
    caches = []
    inp = x
    for idx, params in enumerate(layers):
        hs, cache = _forward_layer(params, inp)
        if residual and idx > 0 and inp.shape[-1] == hs.shape[-1]:
            hs = hs + inp
        caches.append(cache)
        outputs.append(hs)
        inp = hs
    if squeeze:
        outputs = [h[0] for h in outputs]
    if return_cache:
        return outputs, LstmCache(layers, caches, residual, squeeze)
    return outputs


def _backward_layer(params: LstmLayerParams, cache: _LayerCache, d_out: np.ndarray):
    b_sz, t_len, h = d_out.shape
    gates, cs, x = cache.gates, cache.c, cache.x
    dz_all = np.empty((b_sz, t_len, 4 * h), dtype=d_out.dtype)
    dh_rec = np.zeros((b_sz, h), dtype=d_out.dtype)
    dc_rec = np.zeros((b_sz, h), dtype=d_out.dtype)
    w_h = params.w_h
    for t in range(t_len - 1, -1, -1):
        i = gates[:, t, :h]
        f = gates[:, t, h: 2 * h]
        g = gates[:, t, 2 * h: 3 * h]
        o = gates[:, t, 3 * h:]
        c_prev = cs[:, t - 1] if t > 0 else np.zeros_like(dc_rec)
        tc = np.tanh(cs[:, t])
        dh = d_out[:, t] + dh_rec
        dc = dc_rec + dh * o * (1.0 - tc * tc)
        dz = dz_all[:, t]
        dz[:, :h] = dc * g * i * (1.0 - i)
        dz[:, h: 2 * h] = dc * c_prev * f * (1.0 - f)
        dz[:, 2 * h: 3 * h] = dc * i * (1.0 - g * g)
        dz[:, 3 * h:] = dh * tc * o * (1.0 - o)
        dc_rec = dc * f
        dh_rec = dz @ w_h
    flat_dz = dz_all.reshape(b_sz * t_len, 4 * h)
    grads = {
        "w_x": flat_dz.T @ x.reshape(b_sz * t_len, -1),
        "w_h": flat_dz.T @ cache.h_prev.reshape(b_sz * t_len, h),
        "b": flat_dz.sum(axis=0),
    }
    d_x = (flat_dz @ params.w_x).reshape(x.shape)
    return grads, d_x


def lstm_backward(layers: list[LstmLayerParams], cache: LstmCache, d_out: np.ndarray):
    """Backpropagate a gradient on the top layer's output sequence.

    Returns (per-layer grad dicts with keys w_x/w_h/b, gradient on the input
    sequence). The cache must come from a forward pass over the same layer
    stack.
    """
    if len(cache.layers) != len(layers) or any(
        a is not b for a, b in zip(cache.layers, layers)
    ):
        raise DimensionError("cache does not belong to this layer stack")
    d_out = np.asarray(d_out)
    if cache.squeeze:
        if d_out.ndim != 2:
            raise DimensionError("expected (T, H) gradient for unbatched forward")
        d_out = d_out[None]
    grads: list[dict[str, np.ndarray] | None] = [None] * len(layers)
    d_up = d_out
    for idx in range(len(layers) - 1, -1, -1):
        layer_cache = cache.layer_caches[idx]
        if d_up.shape != layer_cache.gates.shape[:2] + (layers[idx].hidden_size,):
            raise DimensionError("output gradient shape does not match cached forward pass")
        g, d_x = _backward_layer(layers[idx], layer_cache, d_up)
        grads[idx] = g
        has_residual = (
            cache.residual and idx > 0
            and layer_cache.x.shape[-1] == layers[idx].hidden_size
        )
        # identity branch of the residual add
        d_up = d_x + d_up if has_residual else d_x
    if cache.squeeze:
        d_up = d_up[0]
    return grads, d_up
