"""Attention-based next-activity model in plain numpy.

A small post-LN transformer encoder over one-hot activity prefixes:
input projection, additive sinusoidal positional encoding, N encoder
layers (masked multi-head self-attention, then a ReLU feed-forward block,
each wrapped in residual + LayerNorm), a masked global max-pool over time,
dropout, and a dense softmax head over the vocabulary (END included).

Everything — forward, backward, Adam — is hand-written on numpy arrays in
float64. That keeps the model portable and makes the gradients checkable
against central finite differences (see :func:`finite_difference_check`),
which is the correctness anchor for the whole module.

Padding is handled by masking, never by the padded values themselves:
padded key columns are set to -inf before the attention softmax (their
weights become exact zeros) and padded positions are -inf'd out of the
max-pool, so whatever garbage sits in padded input rows cannot reach the
output. predict_proba exploits that by truncating overlong prefixes to the
most recent l_max - 1 activities, which is what beam search needs when its
hypotheses outgrow the training window.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .encoding import Vocabulary

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class AttentionConfig:
    l_max: int  # longest trace length + 1; prefixes occupy l_max - 1 rows
    d_model: int = 32
    n_heads: int = 4
    n_layers: int = 2
    d_ff: int = 64
    dropout: float = 0.1
    positional_encoding: bool = True
    seed: int = 7
    ln_eps: float = 1e-5

    def __post_init__(self):
        if self.l_max < 2:
            raise ValueError("l_max must be >= 2")
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")


def sinusoidal_encoding(n_positions: int, d_model: int) -> np.ndarray:
    """Standard sin/cos position table, shape (n_positions, d_model)."""
    pos = np.arange(n_positions, dtype=np.float64)[:, None]
    i = np.arange(d_model, dtype=np.float64)[None, :]
    angle = pos / np.power(10000.0, (2.0 * np.floor(i / 2.0)) / d_model)
    table = np.empty((n_positions, d_model))
    table[:, 0::2] = np.sin(angle[:, 0::2])
    table[:, 1::2] = np.cos(angle[:, 1::2])
    return table


def _glorot(rng: np.random.Generator, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    m = np.max(z, axis=-1, keepdims=True)
    e = np.exp(z - m)
    return e / np.sum(e, axis=-1, keepdims=True)


def _layer_norm_forward(x, gain, bias, eps):
    mu = np.mean(x, axis=-1, keepdims=True)
    var = np.var(x, axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (x - mu) * inv_std
    return gain * xhat + bias, (xhat, inv_std, gain)


def _layer_norm_backward(dy, cache):
    xhat, inv_std, gain = cache
    n = xhat.shape[-1]
    dxhat = dy * gain
    dx = inv_std * (
        dxhat
        - np.mean(dxhat, axis=-1, keepdims=True)
        - xhat * np.mean(dxhat * xhat, axis=-1, keepdims=True)
    )
    axes = tuple(range(dy.ndim - 1))
    return dx, np.sum(dy * xhat, axis=axes), np.sum(dy, axis=axes)


class AttentionModel:
    """Next-activity distribution over prefixes; predictor-protocol compatible."""

    def __init__(self, vocab: Vocabulary, config: AttentionConfig, params: dict | None = None):
        self.vocab = vocab
        self.config = config
        self.pe = sinusoidal_encoding(config.l_max - 1, config.d_model)
        self.params = params if params is not None else self._init_params()

    def _init_params(self) -> dict:
        cfg = self.config
        rng = np.random.default_rng(cfg.seed)
        v, d, f = len(self.vocab), cfg.d_model, cfg.d_ff
        p = {
            "w_in": _glorot(rng, v, d),
            "b_in": np.zeros(d),
            "w_out": _glorot(rng, d, v),
            "b_out": np.zeros(v),
        }
        for layer in range(cfg.n_layers):
            key = f"l{layer}_"
            for name in ("wq", "wk", "wv", "wo"):
                p[key + name] = _glorot(rng, d, d)
                p[key + name.replace("w", "b")] = np.zeros(d)
            p[key + "w1"] = _glorot(rng, d, f)
            p[key + "b1"] = np.zeros(f)
            p[key + "w2"] = _glorot(rng, f, d)
            p[key + "b2"] = np.zeros(d)
            for ln in ("ln1", "ln2"):
                p[key + ln + "_g"] = np.ones(d)
                p[key + ln + "_b"] = np.zeros(d)
        return p

    # ------------------------------------------------------------- forward

    def _split_heads(self, x):
        b, t, d = x.shape
        h = self.config.n_heads
        return x.reshape(b, t, h, d // h).transpose(0, 2, 1, 3)

    def _merge_heads(self, x):
        b, h, t, dk = x.shape
        return x.transpose(0, 2, 1, 3).reshape(b, t, h * dk)

    def forward(self, x: np.ndarray, mask: np.ndarray, dropout_rng: np.random.Generator | None = None):
        """Run the network; returns (probs, cache). Dropout only with a rng."""
        p, cfg = self.params, self.config
        cache = {"x": x, "mask": mask, "layers": []}
        h = x @ p["w_in"] + p["b_in"]
        if cfg.positional_encoding:
            h = h + self.pe[None, : x.shape[1], :]
        key_mask = mask[:, None, None, :]  # broadcast over heads and queries
        scale = 1.0 / np.sqrt(cfg.d_model / cfg.n_heads)
        for layer in range(cfg.n_layers):
            key = f"l{layer}_"
            lc = {"h_in": h}
            q = self._split_heads(h @ p[key + "wq"] + p[key + "bq"])
            k = self._split_heads(h @ p[key + "wk"] + p[key + "bk"])
            v = self._split_heads(h @ p[key + "wv"] + p[key + "bv"])
            scores = (q @ k.transpose(0, 1, 3, 2)) * scale
            scores = np.where(key_mask, scores, -np.inf)
            # softmax that yields all-zero rows where every key is masked
            # (padded query positions) instead of NaN
            row_max = np.max(scores, axis=-1, keepdims=True)
            row_max = np.where(np.isfinite(row_max), row_max, 0.0)
            e = np.exp(scores - row_max)
            denom = np.sum(e, axis=-1, keepdims=True)
            attn = e / np.where(denom == 0.0, 1.0, denom)
            heads = attn @ v
            merged = self._merge_heads(heads)
            att_out = merged @ p[key + "wo"] + p[key + "bo"]
            ln1_out, ln1_cache = _layer_norm_forward(h + att_out, p[key + "ln1_g"], p[key + "ln1_b"], cfg.ln_eps)
            pre1 = ln1_out @ p[key + "w1"] + p[key + "b1"]
            act = np.maximum(pre1, 0.0)
            ffn_out = act @ p[key + "w2"] + p[key + "b2"]
            h2, ln2_cache = _layer_norm_forward(ln1_out + ffn_out, p[key + "ln2_g"], p[key + "ln2_b"], cfg.ln_eps)
            lc.update(q=q, k=k, v=v, attn=attn, merged=merged, ln1_out=ln1_out,
                      ln1_cache=ln1_cache, pre1=pre1, act=act, ln2_cache=ln2_cache)
            cache["layers"].append(lc)
            h = h2
        pooled_src = np.where(mask[:, :, None], h, -np.inf)
        pool_idx = np.argmax(pooled_src, axis=1)  # (B, D)
        pooled = np.take_along_axis(h, pool_idx[:, None, :], axis=1)[:, 0, :]
        cache["h_final"] = h
        cache["pool_idx"] = pool_idx
        if dropout_rng is not None and cfg.dropout > 0.0:
            keep = (dropout_rng.random(pooled.shape) >= cfg.dropout) / (1.0 - cfg.dropout)
            pooled = pooled * keep
            cache["drop_keep"] = keep
        cache["pooled"] = pooled
        logits = pooled @ p["w_out"] + p["b_out"]
        probs = _softmax_rows(logits)
        cache["probs"] = probs
        return probs, cache

    # ------------------------------------------------------------ backward

    def backward(self, cache: dict, targets: np.ndarray) -> dict:
        """Gradients of mean cross-entropy w.r.t. every parameter."""
        p, cfg = self.params, self.config
        b = targets.shape[0]
        grads = {}
        dlogits = cache["probs"].copy()
        dlogits[np.arange(b), targets] -= 1.0
        dlogits /= b
        grads["w_out"] = cache["pooled"].T @ dlogits
        grads["b_out"] = dlogits.sum(axis=0)
        dpooled = dlogits @ p["w_out"].T
        if "drop_keep" in cache:
            dpooled = dpooled * cache["drop_keep"]
        dh = np.zeros_like(cache["h_final"])
        np.put_along_axis(dh, cache["pool_idx"][:, None, :], dpooled[:, None, :], axis=1)
        scale = 1.0 / np.sqrt(cfg.d_model / cfg.n_heads)
        for layer in range(cfg.n_layers - 1, -1, -1):
            key = f"l{layer}_"
            lc = cache["layers"][layer]
            dsum2, dg2, db2 = _layer_norm_backward(dh, lc["ln2_cache"])
            grads[key + "ln2_g"], grads[key + "ln2_b"] = dg2, db2
            # ffn branch
            grads[key + "w2"] = lc["act"].reshape(-1, cfg.d_ff).T @ dsum2.reshape(-1, cfg.d_model)
            grads[key + "b2"] = dsum2.sum(axis=(0, 1))
            dact = dsum2 @ p[key + "w2"].T
            dpre1 = dact * (lc["pre1"] > 0.0)
            grads[key + "w1"] = lc["ln1_out"].reshape(-1, cfg.d_model).T @ dpre1.reshape(-1, cfg.d_ff)
            grads[key + "b1"] = dpre1.sum(axis=(0, 1))
            dln1_out = dsum2 + dpre1 @ p[key + "w1"].T
            dsum1, dg1, db1 = _layer_norm_backward(dln1_out, lc["ln1_cache"])
            grads[key + "ln1_g"], grads[key + "ln1_b"] = dg1, db1
            # attention branch
            dmerged = dsum1 @ p[key + "wo"].T
            grads[key + "wo"] = lc["merged"].reshape(-1, cfg.d_model).T @ dsum1.reshape(-1, cfg.d_model)
            grads[key + "bo"] = dsum1.sum(axis=(0, 1))
            dheads = self._split_heads(dmerged)
            dattn = dheads @ lc["v"].transpose(0, 1, 3, 2)
            dv = lc["attn"].transpose(0, 1, 3, 2) @ dheads
            attn = lc["attn"]
            dscores = attn * (dattn - np.sum(dattn * attn, axis=-1, keepdims=True))
            dq = (dscores @ lc["k"]) * scale
            dk = (dscores.transpose(0, 1, 3, 2) @ lc["q"]) * scale
            h_in = lc["h_in"]
            flat_in = h_in.reshape(-1, cfg.d_model)
            dh_in = dsum1.copy()  # residual path
            for name, dmat in (("wq", dq), ("wk", dk), ("wv", dv)):
                dproj = self._merge_heads(dmat)
                grads[key + name] = flat_in.T @ dproj.reshape(-1, cfg.d_model)
                grads[key + name.replace("w", "b")] = dproj.sum(axis=(0, 1))
                dh_in += dproj @ p[key + name].T
            dh = dh_in
        grads["w_in"] = cache["x"].reshape(-1, len(self.vocab)).T @ dh.reshape(-1, cfg.d_model)
        grads["b_in"] = dh.sum(axis=(0, 1))
        return grads

    def loss(self, probs: np.ndarray, targets: np.ndarray) -> float:
        picked = probs[np.arange(targets.shape[0]), targets]
        return float(-np.mean(np.log(np.maximum(picked, 1e-300))))

    # ----------------------------------------------------------- inference

    def _encode(self, prefixes) -> tuple[np.ndarray, np.ndarray]:
        t = self.config.l_max - 1
        v = len(self.vocab)
        x = np.zeros((len(prefixes), t, v))
        mask = np.zeros((len(prefixes), t), dtype=bool)
        for row, pref in enumerate(prefixes):
            labels = tuple(pref)[-t:]  # keep the most recent window
            for j, label in enumerate(labels):
                x[row, j, self.vocab.index_of(label)] = 1.0
                mask[row, j] = True
        return x, mask

    def predict_proba(self, prefix) -> np.ndarray:
        if not prefix:
            raise ValueError("prefix must be non-empty")
        x, mask = self._encode([prefix])
        probs, _ = self.forward(x, mask)
        return probs[0]

    def predict_batch(self, x: np.ndarray, mask: np.ndarray) -> np.ndarray:
        probs, _ = self.forward(x, mask)
        return probs

    # --------------------------------------------------------- persistence

    def save(self, path) -> None:
        meta = json.dumps({"config": asdict(self.config), "labels": list(self.vocab.labels)})
        np.savez_compressed(path, __meta__=np.array(meta), **self.params)

    @classmethod
    def load(cls, path) -> "AttentionModel":
        data = np.load(path, allow_pickle=False)
        meta = json.loads(str(data["__meta__"]))
        config = AttentionConfig(**meta["config"])
        vocab = Vocabulary(tuple(meta["labels"]))
        params = {k: data[k] for k in data.files if k != "__meta__"}
        return cls(vocab, config, params=params)


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_loss: float


def train_attention(
    prefix_log,
    vocab: Vocabulary,
    config: AttentionConfig,
    epochs: int = 10,
    batch_size: int = 64,
    learning_rate: float = 1e-3,
    val_fraction: float = 0.1,
) -> tuple[AttentionModel, list[EpochStats]]:
    """Adam training with a validation split; best-epoch weights win."""
    if not prefix_log.entries:
        raise ValueError("prefix log is empty")
    if epochs < 1 or batch_size < 1:
        raise ValueError("epochs and batch_size must be >= 1")
    model = AttentionModel(vocab, config)
    x_all, mask_all = model._encode([variant for variant, _ in prefix_log.entries])
    y_all = np.array([vocab.index_of(target) for _, target in prefix_log.entries])

    rng = np.random.default_rng(config.seed + 1)
    n = len(y_all)
    order = rng.permutation(n)
    n_val = int(round(n * val_fraction)) if n >= 10 else 0
    val_idx, train_idx = order[:n_val], order[n_val:]
    if len(train_idx) == 0:
        raise ValueError("validation split leaves no training data")

    adam_m = {k: np.zeros_like(v) for k, v in model.params.items()}
    adam_v = {k: np.zeros_like(v) for k, v in model.params.items()}
    step = 0
    history: list[EpochStats] = []
    best_val = np.inf
    best_params = {k: v.copy() for k, v in model.params.items()}

    def evaluate(idx) -> float:
        if len(idx) == 0:
            return np.nan
        probs, _ = model.forward(x_all[idx], mask_all[idx])
        return model.loss(probs, y_all[idx])

    for epoch in range(epochs):
        perm = rng.permutation(len(train_idx))
        epoch_loss = 0.0
        for start in range(0, len(perm), batch_size):
            batch = train_idx[perm[start : start + batch_size]]
            probs, cache = model.forward(x_all[batch], mask_all[batch], dropout_rng=rng)
            epoch_loss += model.loss(probs, y_all[batch]) * len(batch)
            grads = model.backward(cache, y_all[batch])
            step += 1
            bc1 = 1.0 - ADAM_BETA1 ** step
            bc2 = 1.0 - ADAM_BETA2 ** step
            for name, g in grads.items():
                adam_m[name] = ADAM_BETA1 * adam_m[name] + (1.0 - ADAM_BETA1) * g
                adam_v[name] = ADAM_BETA2 * adam_v[name] + (1.0 - ADAM_BETA2) * g * g
                model.params[name] -= learning_rate * (adam_m[name] / bc1) / (
                    np.sqrt(adam_v[name] / bc2) + ADAM_EPS
                )
        train_loss = epoch_loss / len(train_idx)
        val_loss = evaluate(val_idx)
        tracked = val_loss if n_val > 0 else train_loss
        if tracked < best_val:
            best_val = tracked
            best_params = {k: v.copy() for k, v in model.params.items()}
        history.append(EpochStats(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
    model.params = best_params
    return model, history


def finite_difference_check(
    model: AttentionModel,
    x: np.ndarray,
    mask: np.ndarray,
    targets: np.ndarray,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Dropout is off (no rng passed), so the loss is deterministic in the
    parameters. Every scalar parameter is perturbed individually.
    """
    probs, cache = model.forward(x, mask)
    grads = model.backward(cache, targets)
    worst = 0.0
    for name, param in model.params.items():
        flat = param.reshape(-1)
        gflat = grads[name].reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up, _ = model.forward(x, mask)
            loss_up = model.loss(up, targets)
            flat[i] = orig - step
            down, _ = model.forward(x, mask)
            loss_down = model.loss(down, targets)
            flat[i] = orig
            numeric = (loss_up - loss_down) / (2.0 * step)
            denom = max(abs(numeric), abs(gflat[i]), 1e-6)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst
