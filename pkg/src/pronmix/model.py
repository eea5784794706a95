"""Desk-scale multi-aspect scorer: projection + embeddings + a 3-layer
self-attention encoder (width 24, single head, pre-norm, tanh feed-forward),
with per-aspect linear heads that see the encoder representation concatenated
with the two error-rate features.

Everything is float64 numpy with hand-written reverse-mode gradients, so the
whole parameter set can be checked against finite differences.  The tanh
feed-forward keeps the network smooth for those checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .data import MAX_LEN, N_UTT_ASPECTS, N_WORD_ASPECTS, Batch, pad_batch
from .error_rate import er_features
from .mixup import MixupConfig, augment_batch
from .phones import N_PHONES

D_IN = 84
D_MODEL = 24
D_FF = 4 * D_MODEL
N_LAYERS = 3
N_EMB = N_PHONES + 1          # 42 phones + pad row
D_HEAD_IN = D_MODEL + 2       # representation + (cer, mer)
LN_EPS = 1e-6
ER_MODES = ("none", "cer", "mer", "both")
CHECKPOINT_FORMAT = "pronmix-checkpoint"


@dataclass
class LayerParams:
    ln1_g: np.ndarray
    ln1_b: np.ndarray
    wq: np.ndarray
    bq: np.ndarray
    wk: np.ndarray
    bk: np.ndarray
    wv: np.ndarray
    bv: np.ndarray
    wo: np.ndarray
    bo: np.ndarray
    ln2_g: np.ndarray
    ln2_b: np.ndarray
    ff1_w: np.ndarray
    ff1_b: np.ndarray
    ff2_w: np.ndarray
    ff2_b: np.ndarray


@dataclass
class ModelParams:
    proj_w: np.ndarray    # (84, 24)
    proj_b: np.ndarray    # (24,)
    emb_phone: np.ndarray  # (43, 24)
    emb_pos: np.ndarray    # (50, 24)
    layers: list[LayerParams]
    lnf_g: np.ndarray
    lnf_b: np.ndarray
    head_phone_w: np.ndarray  # (26,)
    head_phone_b: np.ndarray  # (1,)
    head_word_w: np.ndarray   # (3, 26)
    head_word_b: np.ndarray   # (3,)
    head_utt_w: np.ndarray    # (5, 26)
    head_utt_b: np.ndarray    # (5,)


@dataclass
class Predictions:
    phone: np.ndarray  # (b, 50)
    word: np.ndarray   # (b, 50, 3)
    utt: np.ndarray    # (b, 5)


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 25
    epochs: int = 100
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    mixup: MixupConfig | None = None
    er_mode: str = "none"

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size <= 0 or self.epochs < 0:
            raise ValueError("lr and batch_size must be positive, epochs non-negative")
        if self.er_mode not in ER_MODES:
            raise ValueError(f"er_mode must be one of {ER_MODES}")


def param_items(params: ModelParams) -> list[tuple[str, np.ndarray]]:
    """All parameter tensors in a fixed canonical order."""
    items = [
        ("proj_w", params.proj_w),
        ("proj_b", params.proj_b),
        ("emb_phone", params.emb_phone),
        ("emb_pos", params.emb_pos),
    ]
    for i, layer in enumerate(params.layers):
        for name in ("ln1_g", "ln1_b", "wq", "bq", "wk", "bk", "wv", "bv",
                     "wo", "bo", "ln2_g", "ln2_b", "ff1_w", "ff1_b", "ff2_w", "ff2_b"):
            items.append((f"layers.{i}.{name}", getattr(layer, name)))
    items += [
        ("lnf_g", params.lnf_g),
        ("lnf_b", params.lnf_b),
        ("head_phone_w", params.head_phone_w),
        ("head_phone_b", params.head_phone_b),
        ("head_word_w", params.head_word_w),
        ("head_word_b", params.head_word_b),
        ("head_utt_w", params.head_utt_w),
        ("head_utt_b", params.head_utt_b),
    ]
    return items


def clone_params(params: ModelParams) -> ModelParams:
    layers = [LayerParams(**{f: getattr(l, f).copy() for f in LayerParams.__dataclass_fields__})
              for l in params.layers]
    kwargs = {f: getattr(params, f).copy() for f in ModelParams.__dataclass_fields__ if f != "layers"}
    return ModelParams(layers=layers, **kwargs)


def init_model(seed: int) -> ModelParams:
    """Weights uniform in +-1/sqrt(fan_in), biases zero, norm scales one."""
    rng = np.random.default_rng(seed)

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    layers = []
    for _ in range(N_LAYERS):
        layers.append(LayerParams(
            ln1_g=np.ones(D_MODEL), ln1_b=np.zeros(D_MODEL),
            wq=uniform((D_MODEL, D_MODEL), D_MODEL), bq=np.zeros(D_MODEL),
            wk=uniform((D_MODEL, D_MODEL), D_MODEL), bk=np.zeros(D_MODEL),
            wv=uniform((D_MODEL, D_MODEL), D_MODEL), bv=np.zeros(D_MODEL),
            wo=uniform((D_MODEL, D_MODEL), D_MODEL), bo=np.zeros(D_MODEL),
            ln2_g=np.ones(D_MODEL), ln2_b=np.zeros(D_MODEL),
            ff1_w=uniform((D_MODEL, D_FF), D_MODEL), ff1_b=np.zeros(D_FF),
            ff2_w=uniform((D_FF, D_MODEL), D_FF), ff2_b=np.zeros(D_MODEL),
        ))
    return ModelParams(
        proj_w=uniform((D_IN, D_MODEL), D_IN),
        proj_b=np.zeros(D_MODEL),
        emb_phone=uniform((N_EMB, D_MODEL), D_MODEL),
        emb_pos=uniform((MAX_LEN, D_MODEL), D_MODEL),
        layers=layers,
        lnf_g=np.ones(D_MODEL),
        lnf_b=np.zeros(D_MODEL),
        head_phone_w=uniform((D_HEAD_IN,), D_HEAD_IN),
        head_phone_b=np.zeros(1),
        head_word_w=uniform((N_WORD_ASPECTS, D_HEAD_IN), D_HEAD_IN),
        head_word_b=np.zeros(N_WORD_ASPECTS),
        head_utt_w=uniform((N_UTT_ASPECTS, D_HEAD_IN), D_HEAD_IN),
        head_utt_b=np.zeros(N_UTT_ASPECTS),
    )


def _er_columns(batch: Batch, er_mode: str) -> np.ndarray:
    """(cer, mer) columns fed to the heads; disabled components are zero."""
    if er_mode == "none":
        return np.zeros((batch.size, 2))
    er = batch.er.copy()
    if er_mode == "cer":
        er[:, 1] = 0.0
    elif er_mode == "mer":
        er[:, 0] = 0.0
    return er


def _layer_norm(x, g, b):
    mu = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    xhat = (x - mu) * inv
    return xhat * g + b, (xhat, inv)


def _layer_norm_backward(dout, cache, g):
    xhat, inv = cache
    dg = (dout * xhat).sum(axis=tuple(range(dout.ndim - 1)))
    db = dout.sum(axis=tuple(range(dout.ndim - 1)))
    dxhat = dout * g
    dx = inv * (dxhat - dxhat.mean(axis=-1, keepdims=True)
                - xhat * (dxhat * xhat).mean(axis=-1, keepdims=True))
    return dx, dg, db


def _forward(params: ModelParams, batch: Batch, er_mode: str, need_cache: bool):
    b = batch.size
    lengths = batch.lengths
    crop = int(lengths.max())
    gop = batch.gop[:, :crop]
    ids = batch.phone_ids[:, :crop]
    mask = batch.mask[:, :crop]

    x = gop @ params.proj_w + params.proj_b + params.emb_phone[ids] + params.emb_pos[:crop]
    scale = 1.0 / np.sqrt(D_MODEL)
    layer_caches = []
    for layer in params.layers:
        h, ln1_cache = _layer_norm(x, layer.ln1_g, layer.ln1_b)
        q = h @ layer.wq + layer.bq
        k = h @ layer.wk + layer.bk
        v = h @ layer.wv + layer.bv
        scores = (q @ k.transpose(0, 2, 1)) * scale
        scores = np.where(mask[:, None, :], scores, -np.inf)
        scores = scores - scores.max(axis=-1, keepdims=True)
        expw = np.exp(scores)
        attn = expw / expw.sum(axis=-1, keepdims=True)
        ctx = attn @ v
        attn_out = ctx @ layer.wo + layer.bo
        x_attn = x + attn_out
        h2, ln2_cache = _layer_norm(x_attn, layer.ln2_g, layer.ln2_b)
        z = h2 @ layer.ff1_w + layer.ff1_b
        t = np.tanh(z)
        ff = t @ layer.ff2_w + layer.ff2_b
        x_new = x_attn + ff
        if need_cache:
            layer_caches.append((h, ln1_cache, q, k, v, attn, ctx, h2, ln2_cache, t))
        x = x_new

    xf, lnf_cache = _layer_norm(x, params.lnf_g, params.lnf_b)
    pooled = (xf * mask[:, :, None]).sum(axis=1) / lengths[:, None]
    er = _er_columns(batch, er_mode)
    feats = np.concatenate([xf, np.repeat(er[:, None, :], crop, axis=1)], axis=2)
    uf = np.concatenate([pooled, er], axis=1)

    phone_c = feats @ params.head_phone_w + params.head_phone_b[0]
    word_c = feats @ params.head_word_w.T + params.head_word_b
    utt = uf @ params.head_utt_w.T + params.head_utt_b
    phone_c = np.where(mask, phone_c, 0.0)
    word_c = np.where(mask[:, :, None], word_c, 0.0)

    phone = np.zeros((b, MAX_LEN))
    phone[:, :crop] = phone_c
    word = np.zeros((b, MAX_LEN, N_WORD_ASPECTS))
    word[:, :crop] = word_c
    pred = Predictions(phone=phone, word=word, utt=utt)
    if not need_cache:
        return pred, None
    cache = {
        "crop": crop, "mask": mask, "lengths": lengths, "gop": gop, "ids": ids,
        "layers": layer_caches, "lnf_cache": lnf_cache,
        "xf": xf, "feats": feats, "uf": uf,
    }
    return pred, cache


def forward(params: ModelParams, batch: Batch, er_mode: str = "none") -> Predictions:
    """Predictions at every level; padded positions are exactly zero."""
    pred, _ = _forward(params, batch, er_mode, need_cache=False)
    return pred


def loss_components(pred: Predictions, batch: Batch) -> tuple[float, float, float]:
    """Per-level loss terms: within-level aspect-averaged MSE over valid entries."""
    mask = batch.mask
    n_valid = mask.sum()
    if n_valid == 0:
        raise ValueError("loss over a batch with no valid positions")
    phone = float((((pred.phone - batch.y_phone) ** 2) * mask).sum() / n_valid)
    word = float((((pred.word - batch.y_word) ** 2) * mask[:, :, None]).sum()
                 / (N_WORD_ASPECTS * n_valid))
    utt = float(((pred.utt - batch.y_utt) ** 2).sum() / (N_UTT_ASPECTS * batch.size))
    return phone, word, utt


def total_loss(pred: Predictions, batch: Batch) -> float:
    """Sum over granularity levels of the within-level aspect-averaged MSE."""
    return float(sum(loss_components(pred, batch)))


def loss_and_grads(params: ModelParams, batch: Batch, er_mode: str = "none"):
    """Loss, per-level components and exact gradients for every parameter."""
    pred, cache = _forward(params, batch, er_mode, need_cache=True)
    comps = loss_components(pred, batch)
    loss = float(sum(comps))

    b = batch.size
    crop = cache["crop"]
    mask = cache["mask"]
    lengths = cache["lengths"]
    n_valid = mask.sum()
    grads: dict[str, np.ndarray] = {}

    dphone = 2.0 * (pred.phone[:, :crop] - batch.y_phone[:, :crop]) * mask / n_valid
    dword = (2.0 * (pred.word[:, :crop] - batch.y_word[:, :crop]) * mask[:, :, None]
             / (N_WORD_ASPECTS * n_valid))
    dutt = 2.0 * (pred.utt - batch.y_utt) / (N_UTT_ASPECTS * b)

    feats, uf, xf = cache["feats"], cache["uf"], cache["xf"]
    grads["head_phone_w"] = np.einsum("bl,blf->f", dphone, feats)
    grads["head_phone_b"] = np.array([dphone.sum()])
    grads["head_word_w"] = np.einsum("bla,blf->af", dword, feats)
    grads["head_word_b"] = dword.sum(axis=(0, 1))
    grads["head_utt_w"] = dutt.T @ uf
    grads["head_utt_b"] = dutt.sum(axis=0)

    dfeats = dphone[:, :, None] * params.head_phone_w + dword @ params.head_word_w
    duf = dutt @ params.head_utt_w
    dxf = dfeats[:, :, :D_MODEL].copy()
    dxf += duf[:, None, :D_MODEL] * (mask / lengths[:, None])[:, :, None]

    dx, dg, db = _layer_norm_backward(dxf, cache["lnf_cache"], params.lnf_g)
    grads["lnf_g"] = dg
    grads["lnf_b"] = db

    scale = 1.0 / np.sqrt(D_MODEL)
    for i in range(N_LAYERS - 1, -1, -1):
        layer = params.layers[i]
        h, ln1_cache, q, k, v, attn, ctx, h2, ln2_cache, t = cache["layers"][i]
        # feed-forward block
        dff = dx
        grads[f"layers.{i}.ff2_w"] = np.einsum("blf,bld->fd", t, dff)
        grads[f"layers.{i}.ff2_b"] = dff.sum(axis=(0, 1))
        dt = dff @ layer.ff2_w.T
        dz = dt * (1.0 - t * t)
        grads[f"layers.{i}.ff1_w"] = np.einsum("bld,blf->df", h2, dz)
        grads[f"layers.{i}.ff1_b"] = dz.sum(axis=(0, 1))
        dh2 = dz @ layer.ff1_w.T
        dx_attn, dg2, db2 = _layer_norm_backward(dh2, ln2_cache, layer.ln2_g)
        grads[f"layers.{i}.ln2_g"] = dg2
        grads[f"layers.{i}.ln2_b"] = db2
        dx_attn = dx_attn + dx  # residual
        # attention block
        dattn_out = dx_attn
        grads[f"layers.{i}.wo"] = np.einsum("bld,ble->de", ctx, dattn_out)
        grads[f"layers.{i}.bo"] = dattn_out.sum(axis=(0, 1))
        dctx = dattn_out @ layer.wo.T
        dattn = dctx @ v.transpose(0, 2, 1)
        dv = attn.transpose(0, 2, 1) @ dctx
        dscores = attn * (dattn - (dattn * attn).sum(axis=-1, keepdims=True))
        dq = (dscores @ k) * scale
        dk = (dscores.transpose(0, 2, 1) @ q) * scale
        grads[f"layers.{i}.wq"] = np.einsum("bld,ble->de", h, dq)
        grads[f"layers.{i}.bq"] = dq.sum(axis=(0, 1))
        grads[f"layers.{i}.wk"] = np.einsum("bld,ble->de", h, dk)
        grads[f"layers.{i}.bk"] = dk.sum(axis=(0, 1))
        grads[f"layers.{i}.wv"] = np.einsum("bld,ble->de", h, dv)
        grads[f"layers.{i}.bv"] = dv.sum(axis=(0, 1))
        dh = dq @ layer.wq.T + dk @ layer.wk.T + dv @ layer.wv.T
        dx_in, dg1, db1 = _layer_norm_backward(dh, ln1_cache, layer.ln1_g)
        grads[f"layers.{i}.ln1_g"] = dg1
        grads[f"layers.{i}.ln1_b"] = db1
        dx = dx_in + dx_attn  # residual

    gop, ids = cache["gop"], cache["ids"]
    grads["proj_w"] = np.einsum("blf,bld->fd", gop, dx)
    grads["proj_b"] = dx.sum(axis=(0, 1))
    demb_phone = np.zeros((N_EMB, D_MODEL))
    np.add.at(demb_phone, ids.ravel(), dx.reshape(-1, D_MODEL))
    grads["emb_phone"] = demb_phone
    demb_pos = np.zeros((MAX_LEN, D_MODEL))
    demb_pos[:crop] = dx.sum(axis=0)
    grads["emb_pos"] = demb_pos
    return loss, comps, grads


def backward(params: ModelParams, batch: Batch, er_mode: str = "none") -> dict[str, np.ndarray]:
    """Exact reverse-mode gradients of total_loss, keyed like param_items."""
    _, _, grads = loss_and_grads(params, batch, er_mode)
    return grads


# --- optimizer -------------------------------------------------------------

def adam_init(params: ModelParams) -> dict:
    state = {name: (np.zeros_like(arr), np.zeros_like(arr)) for name, arr in param_items(params)}
    state["t"] = 0
    return state


def adam_step(params: ModelParams, grads: dict, state: dict, cfg: TrainConfig):
    """Bias-corrected Adam update; returns new params and state."""
    new = clone_params(params)
    t = state["t"] + 1
    new_state: dict = {"t": t}
    for name, arr in param_items(new):
        g = grads[name]
        m, v = state[name]
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g
        mhat = m / (1.0 - cfg.beta1 ** t)
        vhat = v / (1.0 - cfg.beta2 ** t)
        arr -= cfg.lr * mhat / (np.sqrt(vhat) + cfg.eps)
        new_state[name] = (m, v)
    return new, new_state


# --- training loop ---------------------------------------------------------

def train(records, tcfg: TrainConfig):
    """Adam training over shuffled batches, optionally with mixup augmentation.

    Returns (params, history) where history rows are
    (epoch, total, phone, word, utt) losses averaged over the epoch's batches.
    """
    records = list(records)
    if not records:
        raise ValueError("cannot train on an empty dataset")
    if tcfg.er_mode != "none":
        for rec in records:
            if rec.er is None:
                er_features(rec)
    params = init_model(tcfg.seed)
    state = adam_init(params)
    shuffle_rng = np.random.default_rng([tcfg.seed, 1])
    mix_seed = tcfg.seed if tcfg.mixup is None or tcfg.mixup.seed is None else tcfg.mixup.seed
    n = len(records)
    history = []
    for epoch in range(tcfg.epochs):
        mix_rng = np.random.default_rng([mix_seed, 2, epoch])
        perm = shuffle_rng.permutation(n)
        sums = np.zeros(4)
        n_batches = 0
        for start in range(0, n, tcfg.batch_size):
            chunk = [records[j] for j in perm[start:start + tcfg.batch_size]]
            batch = pad_batch(chunk)
            if tcfg.mixup is not None:
                batch = augment_batch(batch, tcfg.mixup, mix_rng)
            loss, comps, grads = loss_and_grads(params, batch, tcfg.er_mode)
            params, state = adam_step(params, grads, state, tcfg)
            sums += (loss,) + comps
            n_batches += 1
        avg = sums / n_batches
        history.append((epoch, float(avg[0]), float(avg[1]), float(avg[2]), float(avg[3])))
    return params, history


def write_history_csv(history, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("epoch,total,phone,word,utt\n")
        for epoch, tot, phone, word, utt in history:
            fh.write(f"{epoch},{tot!r},{phone!r},{word!r},{utt!r}\n")


# --- checkpoints -----------------------------------------------------------

def save_checkpoint(params: ModelParams, path, er_mode: str = "none"):
    tensors = {name: {"shape": list(arr.shape), "data": arr.ravel().tolist()}
               for name, arr in param_items(params)}
    obj = {"format": CHECKPOINT_FORMAT, "version": 1, "er_mode": er_mode, "tensors": tensors}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, separators=(",", ":"))


def load_checkpoint(path):
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    if obj.get("format") != CHECKPOINT_FORMAT:
        raise ValueError(f"{path}: not a {CHECKPOINT_FORMAT} file")
    tensors = obj["tensors"]
    params = init_model(0)
    for name, arr in param_items(params):
        entry = tensors[name]
        arr[...] = np.asarray(entry["data"], dtype=np.float64).reshape(entry["shape"])
    return params, obj.get("er_mode", "none")
