"""Predictive-coding front-end: n-step-ahead prediction over LSTM states.

The model reads a frame sequence causally and predicts the frame n steps
ahead through a linear projection of the top hidden layer:

    h_0 = x;  h_l = LSTM_l(h_{l-1});  x_hat_t = W h_{L,t}
    loss = sum_{t=1..T-n} |x_hat_t - x_{t+n}|   (elementwise L1)

After training, the top layer's hidden sequence is the extracted feature.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace

import numpy as np

from .corpus import FeatureMatrix, Manifest, load_features_for
from .errors import ConfigError, DataError, DimensionError
from .nn import AdamState, adam_step, lstm_backward, lstm_init, lstm_sequence_forward
from .nn.checkpoint import read_checkpoint, write_checkpoint
from .nn.lstm import LstmLayerParams

log = logging.getLogger(__name__)


@dataclass
class ApcModel:
    layers: list[LstmLayerParams]
    proj: np.ndarray               # (D, H): maps top hidden state back to input space
    n: int                         # prediction step
    residual: bool = True

    def __post_init__(self):
        if self.n < 1:
            raise ConfigError(f"prediction step must be >= 1, got {self.n}")
        if not self.layers:
            raise ConfigError("need at least one LSTM layer")
        if self.proj.shape[1] != self.layers[-1].hidden_size:
            raise DimensionError(
                f"projection expects {self.proj.shape[1]} hidden dims, "
                f"top layer has {self.layers[-1].hidden_size}"
            )
        if self.proj.shape[0] != self.layers[0].input_size:
            raise DimensionError("projection output dim must equal the input dim")

    @property
    def input_dim(self) -> int:
        return self.layers[0].input_size

    @property
    def hidden_size(self) -> int:
        return self.layers[-1].hidden_size

    def named_params(self) -> dict[str, np.ndarray]:
        params = {}
        for idx, layer in enumerate(self.layers):
            params.update(layer.names(f"lstm{idx}"))
        params["proj"] = self.proj
        return params


@dataclass
class ApcTrainConfig:
    epochs: int = 100
    learning_rate: float = 1e-4
    batch_size: int = 32
    n_grid: tuple[int, ...] = (1, 2, 3, 4, 5)
    prediction_step: int = 2
    n_layers: int = 3
    hidden_size: int = 100
    residual: bool = True
    seed: int = 0

    def __post_init__(self):
        if min(self.epochs, self.batch_size, self.n_layers, self.hidden_size) < 1:
            raise ConfigError("epochs, batch_size, n_layers, hidden_size must be positive")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be positive")
        if not self.n_grid or any(n < 1 for n in self.n_grid):
            raise ConfigError("n_grid must be non-empty positive integers")
        if self.prediction_step < 1:
            raise ConfigError("prediction_step must be >= 1")


def init_apc_model(input_dim: int, config: ApcTrainConfig) -> ApcModel:
    rng = np.random.default_rng(config.seed)
    layers = lstm_init(input_dim, [config.hidden_size] * config.n_layers, rng)
    k = 1.0 / np.sqrt(config.hidden_size)
    proj = rng.uniform(-k, k, size=(input_dim, config.hidden_size)).astype(np.float32)
    return ApcModel(layers, proj, n=config.prediction_step, residual=config.residual)


def apc_forward(model: ApcModel, x: np.ndarray, return_cache: bool = False):
    """Predictions and top hidden sequence for (T, D) or (B, T, D) input."""
    x = np.asarray(x)
    if x.shape[-1] != model.input_dim:
        raise DimensionError(f"input dim {x.shape[-1]} != model dim {model.input_dim}")
    result = lstm_sequence_forward(model.layers, x, residual=model.residual,
                                   return_cache=return_cache)
    hs, cache = result if return_cache else (result, None)
    h_top = hs[-1]
    x_hat = h_top @ model.proj.T
    if return_cache:
        return x_hat, h_top, cache
    return x_hat, h_top


def apc_loss(predictions: np.ndarray, targets: np.ndarray, n: int) -> float:
    """Summed L1 distance between x_hat_t and x_{t+n}; 0 for T <= n."""
    predictions = np.asarray(predictions)
    targets = np.asarray(targets)
    if predictions.shape != targets.shape:
        raise DimensionError(
            f"prediction shape {predictions.shape} != target shape {targets.shape}"
        )
    t_len = predictions.shape[0]
    if t_len <= n:
        return 0.0
    return float(np.abs(predictions[: t_len - n] - targets[n:]).sum())


def extract_apc_features(model: ApcModel, features: FeatureMatrix) -> FeatureMatrix:
    """Top hidden layer sequence as a (T, H) feature matrix."""
    if features.n_frames == 0:
        return FeatureMatrix(np.zeros((0, model.hidden_size), dtype=np.float32),
                             features.frame_shift_s)
    _, h_top = apc_forward(model, features.frames.astype(np.float32, copy=False))
    return FeatureMatrix(h_top, features.frame_shift_s)


def _pad_batch(seqs: list[np.ndarray]) -> tuple[np.ndarray, np.ndarray]:
    b = len(seqs)
    t_max = max(s.shape[0] for s in seqs)
    d = seqs[0].shape[1]
    x = np.zeros((b, t_max, d), dtype=np.float32)
    lengths = np.zeros(b, dtype=np.int64)
    for i, s in enumerate(seqs):
        x[i, : s.shape[0]] = s
        lengths[i] = s.shape[0]
    return x, lengths


def train_apc(manifest: Manifest, config: ApcTrainConfig) -> tuple[ApcModel, list[float]]:
    """Train on all manifest utterances; returns model and per-epoch mean
    absolute prediction error. Deterministic for a fixed seed."""
    if not len(manifest):
        raise DataError("empty manifest")
    n = config.prediction_step
    feats = []
    skipped = 0
    dim = None
    for rec in manifest:
        mat = load_features_for(rec)
        if dim is None:
            dim = mat.dim
        elif mat.dim != dim:
            raise DataError(f"{rec.utt_id}: feature dim {mat.dim} != {dim}")
        if mat.n_frames <= n:
            skipped += 1
            continue
        feats.append(mat.frames.astype(np.float32, copy=False))
    if not feats:
        raise DataError("no trainable utterances (all shorter than the prediction step)")
    if skipped:
        log.info("skipping %d utterances with T <= n=%d", skipped, n)

    model = init_apc_model(dim, config)
    params = model.named_params()
    state = AdamState.create(params, learning_rate=config.learning_rate)
    order_rng = np.random.default_rng([config.seed, 1])
    curve = []
    for epoch in range(config.epochs):
        order = order_rng.permutation(len(feats))
        loss_total = 0.0
        terms_total = 0
        for start in range(0, len(order), config.batch_size):
            batch = [feats[i] for i in order[start: start + config.batch_size]]
            x, lengths = _pad_batch(batch)
            x_hat, h_top, cache = apc_forward(model, x, return_cache=True)
            t_max = x.shape[1]
            # valid prediction positions: t < T_i - n
            steps = np.arange(t_max - n)[None, :]
            valid = steps < (lengths[:, None] - n)
            diff = x_hat[:, : t_max - n] - x[:, n:]
            diff *= valid[:, :, None]
            loss_total += float(np.abs(diff).sum())
            terms_total += int(valid.sum()) * x.shape[2]
            d_xhat = np.zeros_like(x_hat)
            d_xhat[:, : t_max - n] = np.sign(diff)
            flat_dh = d_xhat.reshape(-1, x.shape[2])
            grads = {"proj": flat_dh.T @ h_top.reshape(-1, model.hidden_size)}
            d_h_top = d_xhat @ model.proj
            layer_grads, _ = lstm_backward(model.layers, cache, d_h_top)
            for idx, g in enumerate(layer_grads):
                grads[f"lstm{idx}.w_x"] = g["w_x"]
                grads[f"lstm{idx}.w_h"] = g["w_h"]
                grads[f"lstm{idx}.b"] = g["b"]
            adam_step(params, grads, state)
        curve.append(loss_total / max(terms_total, 1))
        log.debug("epoch %d: mean abs loss %.6f", epoch, curve[-1])
    return model, curve


def select_prediction_step(train_manifest: Manifest, dev_manifest: Manifest,
                           dev_items, config: ApcTrainConfig,
                           metric: str = "cosine",
                           cap_per_cell: int | None = None,
                           cap_seed: int = 0):
    """Train one model per n in the grid, pick the n with the best dev ABX
    (mean of within and across macro errors); ties go to the smaller n.

    Returns (best_n, {n: {"within": e, "across": e, "avg": e}}).
    """
    from .abx import evaluate_abx_on_features

    table: dict[int, dict[str, float]] = {}
    best_n = None
    best_avg = None
    for n in sorted(config.n_grid):
        cfg_n = replace(config, prediction_step=n, seed=config.seed ^ n)
        try:
            model, _ = train_apc(train_manifest, cfg_n)
            dev_feats = {
                rec.utt_id: extract_apc_features(model, load_features_for(rec))
                for rec in dev_manifest
            }
            report = evaluate_abx_on_features(
                dev_feats, dev_items, feature_id=f"apc-n{n}", metric=metric,
                cap_per_cell=cap_per_cell, cap_seed=cap_seed,
            )
        except Exception as exc:
            raise DataError(f"prediction-step candidate n={n} failed: {exc}") from exc
        within = report.modes["within"].macro_error
        across = report.modes["across"].macro_error
        avg = (within + across) / 2.0
        table[n] = {"within": within, "across": across, "avg": avg}
        if best_avg is None or avg < best_avg:
            best_avg = avg
            best_n = n
    return best_n, table


# ---------------------------------------------------------------------------
# checkpointing


def save_apc_model(model: ApcModel, path) -> None:
    meta = {
        "model": "apc",
        "n_layers": str(len(model.layers)),
        "hidden_size": str(model.hidden_size),
        "input_dim": str(model.input_dim),
        "prediction_step": str(model.n),
        "residual": "1" if model.residual else "0",
    }
    write_checkpoint(path, meta, model.named_params())


def load_apc_model(path) -> ApcModel:
    meta, tensors = read_checkpoint(path)
    if meta.get("model") != "apc":
        raise DataError(f"{path}: not an apc checkpoint (model={meta.get('model')!r})")
    n_layers = int(meta["n_layers"])
    layers = [
        LstmLayerParams(tensors[f"lstm{i}.w_x"], tensors[f"lstm{i}.w_h"], tensors[f"lstm{i}.b"])
        for i in range(n_layers)
    ]
    return ApcModel(layers, tensors["proj"], n=int(meta["prediction_step"]),
                    residual=meta.get("residual", "1") == "1")
