"""Domain records, dataset JSONL I/O, padding and the synthetic generator.

Scores live on a common [0, 2] scale in memory.  Dataset files carry raw
scores (phone 0-2, word/utterance 0-10); word and utterance scores are
divided by 5 at load time and multiplied back on save.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ParseError, ValidationError
from .phones import N_PHONES, PAD_ID

MAX_LEN = 50
GOP_DIM = 84
N_WORD_ASPECTS = 3
N_UTT_ASPECTS = 5
WORD_ASPECTS = ("accuracy", "stress", "total")
UTT_ASPECTS = ("accuracy", "completeness", "fluency", "prosody", "total")
SCORE_SCALE = 5.0  # raw word/utterance scores are 0-10, stored 0-2


@dataclass
class ScoreLabel:
    """Normalized scores: per-phone, per-word triples and five utterance aspects."""

    phone: np.ndarray  # (L,)
    word: np.ndarray   # (n_words, 3) columns accuracy/stress/total
    utt: np.ndarray    # (5,) accuracy/completeness/fluency/prosody/total

    def __post_init__(self):
        self.phone = np.asarray(self.phone, dtype=np.float64)
        self.word = np.asarray(self.word, dtype=np.float64).reshape(-1, N_WORD_ASPECTS)
        self.utt = np.asarray(self.utt, dtype=np.float64)


@dataclass
class UtteranceRecord:
    """One learner utterance: canonical phones, GOP features, hypothesis, scores."""

    id: str
    canonical_phones: np.ndarray  # (L,) ids 0..41
    word_index: np.ndarray        # (L,) phone -> word mapping
    gop: np.ndarray               # (L, 84)
    hyp_phones: np.ndarray        # (M,) ASR hypothesis ids
    scores: ScoreLabel
    er: tuple[float, float] | None = None  # (cer, mer) once computed

    def __post_init__(self):
        self.canonical_phones = np.asarray(self.canonical_phones, dtype=np.int64)
        self.word_index = np.asarray(self.word_index, dtype=np.int64)
        self.gop = np.asarray(self.gop, dtype=np.float64)
        self.hyp_phones = np.asarray(self.hyp_phones, dtype=np.int64)

    @property
    def length(self) -> int:
        return len(self.canonical_phones)

    @property
    def n_words(self) -> int:
        return int(self.word_index[-1]) + 1 if len(self.word_index) else 0

    def validate(self):
        rid = self.id
        L = self.length
        if not 1 <= L <= MAX_LEN:
            raise ValidationError(rid, "canonical_phones", f"length {L} outside 1..{MAX_LEN}")
        if self.gop.ndim != 2 or self.gop.shape != (L, GOP_DIM):
            raise ValidationError(rid, "gop", f"shape {self.gop.shape} != ({L}, {GOP_DIM})")
        if len(self.word_index) != L:
            raise ValidationError(rid, "word_index", f"length {len(self.word_index)} != {L}")
        if self.word_index[0] != 0:
            raise ValidationError(rid, "word_index", "must start at 0")
        steps = np.diff(self.word_index)
        if len(steps) and (steps.min() < 0 or steps.max() > 1):
            raise ValidationError(rid, "word_index", "must be non-decreasing in steps of at most 1")
        for name, ids in (("canonical_phones", self.canonical_phones), ("hyp_phones", self.hyp_phones)):
            if len(ids) and (ids.min() < 0 or ids.max() >= N_PHONES):
                raise ValidationError(rid, name, f"phone ids outside 0..{N_PHONES - 1}")
        if len(self.scores.phone) != L:
            raise ValidationError(rid, "scores.phone", f"length {len(self.scores.phone)} != {L}")
        if self.scores.word.shape != (self.n_words, N_WORD_ASPECTS):
            raise ValidationError(
                rid, "scores.word",
                f"shape {self.scores.word.shape} != ({self.n_words}, {N_WORD_ASPECTS})")
        if self.scores.utt.shape != (N_UTT_ASPECTS,):
            raise ValidationError(rid, "scores.utt", f"shape {self.scores.utt.shape} != ({N_UTT_ASPECTS},)")
        for name, arr in (("scores.phone", self.scores.phone),
                          ("scores.word", self.scores.word),
                          ("scores.utt", self.scores.utt)):
            if not np.all(np.isfinite(arr)):
                raise ValidationError(rid, name, "non-finite score")
            if arr.size and (arr.min() < 0.0 or arr.max() > 2.0):
                raise ValidationError(rid, name, "score outside [0, 2]")


@dataclass
class Batch:
    """Fixed-length padded view of records.  Padded feature/label entries are 0."""

    gop: np.ndarray        # (b, 50, 84)
    phone_ids: np.ndarray  # (b, 50), pad id 42
    word_ids: np.ndarray   # (b, 50), pad -1
    mask: np.ndarray       # (b, 50) bool, True at valid positions
    y_phone: np.ndarray    # (b, 50)
    y_word: np.ndarray     # (b, 50, 3), word scores broadcast to member positions
    y_utt: np.ndarray      # (b, 5)
    er: np.ndarray         # (b, 2) (cer, mer), zeros when unknown

    @property
    def size(self) -> int:
        return self.gop.shape[0]

    @property
    def lengths(self) -> np.ndarray:
        return self.mask.sum(axis=1)


def load_dataset(path) -> list[UtteranceRecord]:
    """Read a JSONL dataset file, normalizing raw word/utt scores to [0, 2]."""
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(lineno, f"invalid JSON ({exc.msg})") from exc
            try:
                records.append(record_from_raw(obj))
            except (KeyError, TypeError) as exc:
                raise ParseError(lineno, f"missing or malformed field: {exc}") from exc
    for rec in records:
        rec.validate()
    return records


def record_from_raw(obj: dict) -> UtteranceRecord:
    """Build a record from the raw-score JSON object of one dataset line."""
    raw = obj["scores"]
    scores = ScoreLabel(
        phone=np.asarray(raw["phone"], dtype=np.float64),
        word=np.asarray(raw["word"], dtype=np.float64).reshape(-1, N_WORD_ASPECTS) / SCORE_SCALE,
        utt=np.asarray(raw["utt"], dtype=np.float64) / SCORE_SCALE,
    )
    er = obj.get("er")
    return UtteranceRecord(
        id=str(obj["id"]),
        canonical_phones=obj["phones"],
        word_index=obj["word_index"],
        gop=np.asarray(obj["gop"], dtype=np.float64).reshape(len(obj["phones"]), GOP_DIM),
        hyp_phones=obj["hyp_phones"],
        scores=scores,
        er=tuple(er) if er is not None else None,
    )


def record_to_raw(rec: UtteranceRecord) -> dict:
    obj = {
        "id": rec.id,
        "phones": [int(p) for p in rec.canonical_phones],
        "word_index": [int(w) for w in rec.word_index],
        "gop": [[float(v) for v in row] for row in rec.gop],
        "hyp_phones": [int(p) for p in rec.hyp_phones],
        "scores": {
            "phone": [float(v) for v in rec.scores.phone],
            "word": [[float(v * SCORE_SCALE) for v in row] for row in rec.scores.word],
            "utt": [float(v * SCORE_SCALE) for v in rec.scores.utt],
        },
    }
    if rec.er is not None:
        obj["er"] = [float(rec.er[0]), float(rec.er[1])]
    return obj


def save_dataset(records, path):
    """Write records as JSONL with raw scores (inverse of load_dataset scaling)."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(record_to_raw(rec), separators=(",", ":")))
            fh.write("\n")


def pad_batch(records) -> Batch:
    """Zero-pad records to the fixed length and broadcast word scores to positions."""
    records = list(records)
    if not records:
        raise ValueError("cannot build a batch from zero records")
    b = len(records)
    gop = np.zeros((b, MAX_LEN, GOP_DIM))
    phone_ids = np.full((b, MAX_LEN), PAD_ID, dtype=np.int64)
    word_ids = np.full((b, MAX_LEN), -1, dtype=np.int64)
    mask = np.zeros((b, MAX_LEN), dtype=bool)
    y_phone = np.zeros((b, MAX_LEN))
    y_word = np.zeros((b, MAX_LEN, N_WORD_ASPECTS))
    y_utt = np.zeros((b, N_UTT_ASPECTS))
    er = np.zeros((b, 2))
    for i, rec in enumerate(records):
        L = rec.length
        if L > MAX_LEN:
            raise ValueError(f"record {rec.id!r} has length {L} > {MAX_LEN}")
        if L == 0:
            raise ValueError(f"record {rec.id!r} is empty")
        gop[i, :L] = rec.gop
        phone_ids[i, :L] = rec.canonical_phones
        word_ids[i, :L] = rec.word_index
        mask[i, :L] = True
        y_phone[i, :L] = rec.scores.phone
        y_word[i, :L] = rec.scores.word[rec.word_index]
        y_utt[i] = rec.scores.utt
        if rec.er is not None:
            er[i] = rec.er
    return Batch(gop, phone_ids, word_ids, mask, y_phone, y_word, y_utt, er)


def unpad_batch(batch: Batch) -> list[UtteranceRecord]:
    """Recover per-record values from a padded batch (ids are synthesized)."""
    out = []
    for i in range(batch.size):
        L = int(batch.mask[i].sum())
        word_index = batch.word_ids[i, :L]
        n_words = int(word_index[-1]) + 1
        word = np.zeros((n_words, N_WORD_ASPECTS))
        for w in range(n_words):
            first = int(np.argmax(word_index == w))
            word[w] = batch.y_word[i, first]
        out.append(UtteranceRecord(
            id=f"sample-{i}",
            canonical_phones=batch.phone_ids[i, :L],
            word_index=word_index,
            gop=batch.gop[i, :L].copy(),
            hyp_phones=np.zeros(0, dtype=np.int64),
            scores=ScoreLabel(batch.y_phone[i, :L].copy(), word, batch.y_utt[i].copy()),
            er=(float(batch.er[i, 0]), float(batch.er[i, 1])),
        ))
    return out


# --------------------------------------------------------------------------
# Synthetic data
#
# Generated scores are a fixed smooth function of the GOP features.  The
# per-phone quality reads the mean of the LPR half of the row (how far the
# aligned phone's log posterior sits above the average) through a logistic
# squash:
#
#     u(row)       = -mean(row[42:84])
#     quality(row) = 2 / (1 + exp(-QUALITY_GAIN * (u - QUALITY_CENTER)))
#
# Word and utterance aspects are fixed multiples (WORD_SLOPES / UTT_SLOPES)
# of the mean quality over their member positions.  Rows are constructed by
# inverting the squash, and labels are produced by evaluating the function
# on the constructed rows, so with noise=0 scores equal the documented
# function bit for bit.  The squash makes high scores sit in a flat regime
# of the feature functional, mirroring how posterior mass saturates for
# well-pronounced phones.
# --------------------------------------------------------------------------

QUALITY_GAIN = 1.5
QUALITY_CENTER = 4.0
WORD_SLOPES = np.array([1.0, 0.8, 0.9])
UTT_SLOPES = np.array([0.98, 0.85, 0.95, 0.9, 1.0])
PROFILE_BINS = 8
PROFILE_EDGES = np.linspace(0.0, 2.0, PROFILE_BINS + 1)
_WITHIN_SPREAD = 0.05   # word-quality jitter around the utterance target
_QUALITY_LIMITS = (0.01, 1.99)  # keeps the squash inversion well conditioned


@dataclass
class SynthConfig:
    """Knobs of the synthetic generator; `profile` is the target utterance-total
    histogram over the 8 bins of width 0.25 on [0, 2]."""

    n_utterances: int
    length_range: tuple[int, int] = (4, 12)
    profile: tuple = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0)
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        self.length_range = (int(self.length_range[0]), int(self.length_range[1]))
        self.profile = tuple(float(w) for w in self.profile)

    def validate(self):
        lo, hi = self.length_range
        if not 1 <= lo <= hi <= MAX_LEN:
            raise ValueError(f"length range {self.length_range} outside 1..{MAX_LEN}")
        if len(self.profile) != PROFILE_BINS:
            raise ValueError(f"profile must have {PROFILE_BINS} weights")
        if min(self.profile) < 0:
            raise ValueError("profile weights must be non-negative")
        total = sum(self.profile)
        if not math.isclose(total, 1.0, abs_tol=1e-6):
            raise ValueError(f"profile weights must sum to 1 (got {total})")
        if self.noise < 0:
            raise ValueError("noise must be non-negative")
        if self.n_utterances < 0:
            raise ValueError("n_utterances must be non-negative")

    @classmethod
    def from_dict(cls, obj: dict) -> "SynthConfig":
        cfg = cls(
            n_utterances=int(obj["n_utterances"]),
            length_range=tuple(obj.get("length_range", (4, 12))),
            profile=tuple(obj.get("profile", cls.profile)),
            noise=float(obj.get("noise", 0.0)),
            seed=int(obj.get("seed", 0)),
        )
        cfg.validate()
        return cfg


def quality_from_gop(gop: np.ndarray) -> np.ndarray:
    """The documented per-phone quality function of the feature rows."""
    gop = np.asarray(gop, dtype=np.float64)
    u = -gop[:, GOP_DIM // 2:].mean(axis=1)
    return 2.0 / (1.0 + np.exp(-QUALITY_GAIN * (u - QUALITY_CENTER)))


def synthetic_scores(gop: np.ndarray, word_index) -> ScoreLabel:
    """Noise-free scores implied by GOP features under the documented functional."""
    word_index = np.asarray(word_index, dtype=np.int64)
    q = quality_from_gop(gop)
    n_words = int(word_index[-1]) + 1
    word = np.zeros((n_words, N_WORD_ASPECTS))
    for w in range(n_words):
        word[w] = WORD_SLOPES * q[word_index == w].mean()
    return ScoreLabel(phone=q, word=word, utt=UTT_SLOPES * q.mean())


def _gop_row_for_quality(q: float, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Construct an 84-dim feature row whose quality function lands on q.

    The LPP half is a log posterior vector: the aligned phone gets mass p and
    the remainder is spread by a Dirichlet draw; p solves the inverted squash
    in closed form.  The LPR half is LPP minus its aligned-phone entry.
    """
    rest = rng.dirichlet(np.ones(N_PHONES - 1))
    rest = rest + 1e-6
    rest = rest / rest.sum()
    log_rest_sum = float(np.log(rest).sum())
    u = QUALITY_CENTER + math.log(q / (2.0 - q)) / QUALITY_GAIN
    # u = (41*log(p) - 41*log(1-p) - log_rest_sum) / 42
    logit = (N_PHONES * u + log_rest_sum) / (N_PHONES - 1)
    p = 1.0 / (1.0 + math.exp(-logit))
    canonical = int(rng.integers(0, N_PHONES))
    probs = np.empty(N_PHONES)
    probs[np.arange(N_PHONES) != canonical] = (1.0 - p) * rest
    probs[canonical] = p
    lpp = np.log(probs)
    return np.concatenate([lpp, lpp - lpp[canonical]]), canonical


def _random_word_index(L: int, rng: np.random.Generator) -> np.ndarray:
    word_index = np.zeros(L, dtype=np.int64)
    w = 0
    run = 1
    for i in range(1, L):
        if run >= 3 or rng.random() < 0.4:
            w += 1
            run = 1
        else:
            run += 1
        word_index[i] = w
    return word_index


def gen_synthetic(cfg: SynthConfig) -> list[UtteranceRecord]:
    """Generate records whose utterance totals follow cfg.profile; deterministic in seed."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    profile = np.asarray(cfg.profile) / sum(cfg.profile)
    lo, hi = cfg.length_range
    records = []
    for n in range(cfg.n_utterances):
        L = int(rng.integers(lo, hi + 1))
        word_index = _random_word_index(L, rng)
        n_words = int(word_index[-1]) + 1
        bin_idx = int(rng.choice(PROFILE_BINS, p=profile))
        target = float(rng.uniform(PROFILE_EDGES[bin_idx], PROFILE_EDGES[bin_idx + 1]))
        word_q = target + rng.normal(0.0, _WITHIN_SPREAD, size=n_words)
        q = word_q[word_index]
        q = q + (target - q.mean())  # utterance total lands on the sampled target
        q = np.clip(q, *_QUALITY_LIMITS)
        gop = np.empty((L, GOP_DIM))
        canonical = np.empty(L, dtype=np.int64)
        for i in range(L):
            gop[i], canonical[i] = _gop_row_for_quality(float(q[i]), rng)
        scores = synthetic_scores(gop, word_index)
        if cfg.noise > 0:
            scores = ScoreLabel(
                phone=np.clip(scores.phone + rng.normal(0, cfg.noise, scores.phone.shape), 0, 2),
                word=np.clip(scores.word + rng.normal(0, cfg.noise, scores.word.shape), 0, 2),
                utt=np.clip(scores.utt + rng.normal(0, cfg.noise, scores.utt.shape), 0, 2),
            )
        hyp = _hypothesis_for(canonical, scores.phone, rng)
        records.append(UtteranceRecord(
            id=f"synth-{n:05d}",
            canonical_phones=canonical,
            word_index=word_index,
            gop=gop,
            hyp_phones=hyp,
            scores=scores,
        ))
    for rec in records:
        rec.validate()
    return records


def _hypothesis_for(canonical, phone_scores, rng) -> np.ndarray:
    """Corrupt the canonical sequence with quality-dependent substitutions/deletions."""
    hyp = []
    for pid, q in zip(canonical, phone_scores):
        p_err = 0.5 * (1.0 - q / 2.0)
        r = rng.random()
        if r < 0.7 * p_err:
            wrong = int(rng.integers(0, N_PHONES - 1))
            hyp.append(wrong if wrong < pid else wrong + 1)
        elif r < p_err:
            continue  # deletion
        else:
            hyp.append(int(pid))
    return np.asarray(hyp, dtype=np.int64)
