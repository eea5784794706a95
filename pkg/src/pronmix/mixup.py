"""Mean-anchored mixup over padded batches.

Candidates interpolate each sample with the in-batch average feature/label
tensors.  The static policy shifts linearly, x~ = x - lam*a; the dynamic
policy is non-linear, x~ = lam1*x - lam2*a + lam1*lam2*(x - a), with a
reversed variant that flips the sign of the lam2*a term.  The same scalars
are applied to features, every label tensor and the error-rate pair of a
sample.  Candidates whose labels leave [0, 2] are dropped, not clamped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Batch

MODES = ("static", "dynamic", "reversed_dynamic")
LAMBDA_SOURCES = ("beta", "fixed")


@dataclass
class MixupConfig:
    mode: str = "static"
    lambda_source: str = "beta"
    alpha: float = 1.0
    fixed_lambda: float = 0.3
    label_range: tuple[float, float] = (0.0, 2.0)
    seed: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.lambda_source not in LAMBDA_SOURCES:
            raise ValueError(f"lambda_source must be one of {LAMBDA_SOURCES}")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not 0.0 <= self.fixed_lambda <= 1.0:
            raise ValueError("fixed lambda must lie in [0, 1]")


@dataclass
class BatchMean:
    """Arithmetic means over the batch axis of the padded tensors (pads included)."""

    a_x: np.ndarray        # (50, 84)
    a_y_phone: np.ndarray  # (50,)
    a_y_word: np.ndarray   # (50, 3)
    a_y_utt: np.ndarray    # (5,)
    a_er: np.ndarray       # (2,)


def batch_mean(batch: Batch) -> BatchMean:
    if batch.size < 1:
        raise ValueError("batch mean of an empty batch")
    return BatchMean(
        a_x=batch.gop.mean(axis=0),
        a_y_phone=batch.y_phone.mean(axis=0),
        a_y_word=batch.y_word.mean(axis=0),
        a_y_utt=batch.y_utt.mean(axis=0),
        a_er=batch.er.mean(axis=0),
    )


def sample_lambda(cfg: MixupConfig, rng: np.random.Generator) -> float:
    """One mixing weight: the fixed constant, or a Beta(alpha, alpha) draw."""
    if cfg.lambda_source == "fixed":
        return cfg.fixed_lambda
    return float(rng.beta(cfg.alpha, cfg.alpha))


def _rezero_pads(batch: Batch) -> Batch:
    mask = batch.mask
    return Batch(
        gop=np.where(mask[:, :, None], batch.gop, 0.0),
        phone_ids=batch.phone_ids,
        word_ids=batch.word_ids,
        mask=mask,
        y_phone=np.where(mask, batch.y_phone, 0.0),
        y_word=np.where(mask[:, :, None], batch.y_word, 0.0),
        y_utt=batch.y_utt,
        er=batch.er,
    )


def static_mix(batch: Batch, mean: BatchMean, lam: np.ndarray) -> Batch:
    """Linear shift of every sample away from the batch mean by its own lam."""
    lam = np.asarray(lam, dtype=np.float64)
    if lam.shape != (batch.size,):
        raise ValueError(f"lam must have shape ({batch.size},)")
    if lam.size and (lam.min() < 0.0 or lam.max() > 1.0):
        raise ValueError("mixing weights must lie in [0, 1]")
    mixed = Batch(
        gop=batch.gop - lam[:, None, None] * mean.a_x,
        phone_ids=batch.phone_ids.copy(),
        word_ids=batch.word_ids.copy(),
        mask=batch.mask.copy(),
        y_phone=batch.y_phone - lam[:, None] * mean.a_y_phone,
        y_word=batch.y_word - lam[:, None, None] * mean.a_y_word,
        y_utt=batch.y_utt - lam[:, None] * mean.a_y_utt,
        er=batch.er - lam[:, None] * mean.a_er,
    )
    return _rezero_pads(mixed)


def dynamic_mix(batch: Batch, mean: BatchMean, lam1: np.ndarray, lam2: np.ndarray,
                direction: str = "original") -> Batch:
    """Non-linear interpolation with the batch mean; `reversed` flips the mean term."""
    lam1 = np.asarray(lam1, dtype=np.float64)
    lam2 = np.asarray(lam2, dtype=np.float64)
    if lam1.shape != (batch.size,) or lam2.shape != (batch.size,):
        raise ValueError(f"lam1/lam2 must have shape ({batch.size},)")
    for lam in (lam1, lam2):
        if lam.size and (lam.min() < 0.0 or lam.max() > 1.0):
            raise ValueError("mixing weights must lie in [0, 1]")
    if direction not in ("original", "reversed"):
        raise ValueError(f"direction must be 'original' or 'reversed', got {direction!r}")
    sign = -1.0 if direction == "original" else 1.0

    def mix(x, a, extra_axes):
        shape = (-1,) + (1,) * extra_axes
        l1 = lam1.reshape(shape)
        l2 = lam2.reshape(shape)
        return l1 * x + sign * (l2 * a) + (l1 * l2) * (x - a)

    mixed = Batch(
        gop=mix(batch.gop, mean.a_x, 2),
        phone_ids=batch.phone_ids.copy(),
        word_ids=batch.word_ids.copy(),
        mask=batch.mask.copy(),
        y_phone=mix(batch.y_phone, mean.a_y_phone, 1),
        y_word=mix(batch.y_word, mean.a_y_word, 2),
        y_utt=mix(batch.y_utt, mean.a_y_utt, 1),
        er=mix(batch.er, mean.a_er, 1),
    )
    return _rezero_pads(mixed)


def filter_valid(candidates: Batch, lo: float = 0.0, hi: float = 2.0) -> np.ndarray:
    """Boolean acceptance per candidate: every label at every level within [lo, hi]."""
    mask = candidates.mask
    phone_ok = np.all((candidates.y_phone >= lo) & (candidates.y_phone <= hi) | ~mask, axis=1)
    word_in = (candidates.y_word >= lo) & (candidates.y_word <= hi)
    word_ok = np.all(word_in | ~mask[:, :, None], axis=(1, 2))
    utt_ok = np.all((candidates.y_utt >= lo) & (candidates.y_utt <= hi), axis=1)
    return phone_ok & word_ok & utt_ok


def batch_take(batch: Batch, index) -> Batch:
    return Batch(
        gop=batch.gop[index],
        phone_ids=batch.phone_ids[index],
        word_ids=batch.word_ids[index],
        mask=batch.mask[index],
        y_phone=batch.y_phone[index],
        y_word=batch.y_word[index],
        y_utt=batch.y_utt[index],
        er=batch.er[index],
    )


def batch_concat(a: Batch, b: Batch) -> Batch:
    return Batch(
        gop=np.concatenate([a.gop, b.gop]),
        phone_ids=np.concatenate([a.phone_ids, b.phone_ids]),
        word_ids=np.concatenate([a.word_ids, b.word_ids]),
        mask=np.concatenate([a.mask, b.mask]),
        y_phone=np.concatenate([a.y_phone, b.y_phone]),
        y_word=np.concatenate([a.y_word, b.y_word]),
        y_utt=np.concatenate([a.y_utt, b.y_utt]),
        er=np.concatenate([a.er, b.er]),
    )


def mix_candidates(batch: Batch, cfg: MixupConfig, rng: np.random.Generator) -> Batch:
    """One mixed candidate per sample, weights drawn in batch order."""
    mean = batch_mean(batch)
    b = batch.size
    if cfg.mode == "static":
        lam = np.array([sample_lambda(cfg, rng) for _ in range(b)])
        return static_mix(batch, mean, lam)
    lam1 = np.empty(b)
    lam2 = np.empty(b)
    for i in range(b):
        lam1[i] = sample_lambda(cfg, rng)
        lam2[i] = sample_lambda(cfg, rng)
    direction = "reversed" if cfg.mode == "reversed_dynamic" else "original"
    return dynamic_mix(batch, mean, lam1, lam2, direction)


def augment_batch(batch: Batch, cfg: MixupConfig, rng: np.random.Generator) -> Batch:
    """Originals plus the accepted mixed candidates; size in [b, 2b]."""
    candidates = mix_candidates(batch, cfg, rng)
    accepted = filter_valid(candidates, *cfg.label_range)
    if not accepted.any():
        return batch
    return batch_concat(batch, batch_take(candidates, accepted))
