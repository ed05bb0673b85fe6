"""Feed-forward stack with rectifier / identity / softmax nonlinearities."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DimensionError

ACTIVATIONS = ("rectifier", "identity", "softmax")


@dataclass
class MlpParams:
    weights: list[np.ndarray]      # each (out, in)
    biases: list[np.ndarray]       # each (out,)
    activations: list[str]

    def __post_init__(self):
        if not (len(self.weights) == len(self.biases) == len(self.activations)):
            raise DimensionError("weights/biases/activations length mismatch")
        for idx, act in enumerate(self.activations):
            if act not in ACTIVATIONS:
                raise DimensionError(f"unknown activation {act!r}")
            if act == "softmax" and idx != len(self.activations) - 1:
                raise DimensionError("softmax is only allowed on the top layer")
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise DimensionError(f"layer {idx}: bad shapes {w.shape} / {b.shape}")
            if idx and w.shape[1] != self.weights[idx - 1].shape[0]:
                raise DimensionError(
                    f"layer {idx} input dim {w.shape[1]} != previous output "
                    f"{self.weights[idx - 1].shape[0]}"
                )

    @property
    def n_layers(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    def names(self) -> dict[str, np.ndarray]:
        out = {}
        for idx, (w, b) in enumerate(zip(self.weights, self.biases)):
            out[f"layer{idx}.w"] = w
            out[f"layer{idx}.b"] = b
        return out


def mlp_init(dims: list[int], activations: list[str],
             seed: int | np.random.Generator, dtype=np.float32) -> MlpParams:
    """dims = [input, h1, ..., out]; weights uniform +-1/sqrt(fan_in), biases zero."""
    if len(activations) != len(dims) - 1:
        raise DimensionError("need one activation per layer")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    weights, biases = [], []
    for d_in, d_out in zip(dims[:-1], dims[1:]):
        k = 1.0 / np.sqrt(d_in)
        weights.append(rng.uniform(-k, k, size=(d_out, d_in)).astype(dtype))
        biases.append(np.zeros(d_out, dtype=dtype))
    return MlpParams(weights, biases, list(activations))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class MlpCache:
    params: MlpParams
    inputs: list[np.ndarray] = field(default_factory=list)       # input to each layer
    pre_acts: list[np.ndarray] = field(default_factory=list)     # affine outputs
    outputs: list[np.ndarray] = field(default_factory=list)      # post-nonlinearity


def mlp_apply(params: MlpParams, x: np.ndarray, return_cache: bool = False):
    """Apply the stack to a (B, D) batch; returns per-layer post-activation
    outputs (the bottleneck's pre-activation lives in the cache)."""
    x = np.asarray(x)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise DimensionError(
            f"input shape {x.shape} does not match mlp input dim {params.input_dim}"
        )
    cache = MlpCache(params)
    a = x
    for w, b, act in zip(params.weights, params.biases, params.activations):
        z = a @ w.T + b
        if act == "rectifier":
            out = np.maximum(z, 0.0)
        elif act == "identity":
            out = z
        else:
            out = softmax(z)
        cache.inputs.append(a)
        cache.pre_acts.append(z)
        cache.outputs.append(out)
        a = out
    if return_cache:
        return cache.outputs, cache
    return cache.outputs


def mlp_backward(params: MlpParams, cache: MlpCache, d_out: np.ndarray):
    """Gradient of a scalar loss given its gradient on the final output."""
    if cache.params is not params:
        raise DimensionError("cache does not belong to these parameters")
    da = np.asarray(d_out)
    if da.shape != cache.outputs[-1].shape:
        raise DimensionError("output gradient shape mismatch")
    grads = []
    for idx in range(params.n_layers - 1, -1, -1):
        act = params.activations[idx]
        if act == "rectifier":
            dz = da * (cache.pre_acts[idx] > 0)
        elif act == "identity":
            dz = da
        else:
            y = cache.outputs[idx]
            dz = y * (da - (da * y).sum(axis=1, keepdims=True))
        grads.append({
            "w": dz.T @ cache.inputs[idx],
            "b": dz.sum(axis=0),
        })
        da = dz @ params.weights[idx]
    grads.reverse()
    return grads, da


def softmax_cross_entropy(logits: np.ndarray, labels: np.ndarray):
    """Summed cross-entropy and its logit gradient for integer labels.

    Returns (loss_sum, d_logits, n_correct).
    """
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.exp(shifted).sum(axis=1))
    picked = shifted[np.arange(n), labels]
    loss = float((logsumexp - picked).sum())
    probs = np.exp(shifted)
    probs /= probs.sum(axis=1, keepdims=True)
    d_logits = probs
    d_logits[np.arange(n), labels] -= 1.0
    n_correct = int((logits.argmax(axis=1) == labels).sum())
    return loss, d_logits, n_correct
