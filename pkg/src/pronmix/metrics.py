"""Pearson/MSE evaluation per aspect and granularity, plus multi-run aggregation.

Phone metrics pool every valid position across the dataset; word metrics
correlate one aggregated prediction per word (mean over its member
positions); utterance metrics correlate one prediction per utterance.
Zero-variance correlations are reported as undefined (None), never as 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import UTT_ASPECTS, WORD_ASPECTS, pad_batch
from .error_rate import er_features
from .model import ModelParams, forward

LEVELS = ("phone", "word", "utt")


def pearson(pred, target) -> float | None:
    """Sample Pearson correlation; None when either side has zero variance."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"length mismatch: {pred.shape} vs {target.shape}")
    if pred.ndim != 1 or len(pred) < 2:
        raise ValueError("pearson needs two 1-d sequences of length >= 2")
    dx = pred - pred.mean()
    dy = target - target.mean()
    sx = np.dot(dx, dx)
    sy = np.dot(dy, dy)
    if sx == 0.0 or sy == 0.0:
        return None
    r = float(np.dot(dx, dy) / math.sqrt(sx * sy))
    return min(1.0, max(-1.0, r))


@dataclass
class EvalReport:
    phone_mse: float
    phone_pcc: float | None
    word_pcc: tuple  # 3 entries, float | None
    utt_pcc: tuple   # 5 entries, float | None
    pcc_std: dict    # per level: population std of the level's aspect PCCs

    def to_dict(self) -> dict:
        return {
            "phone": {"mse": self.phone_mse, "pcc": self.phone_pcc},
            "word": {"pcc": dict(zip(WORD_ASPECTS, self.word_pcc))},
            "utt": {"pcc": dict(zip(UTT_ASPECTS, self.utt_pcc))},
            "pcc_std": dict(self.pcc_std),
        }

    def level_averages(self) -> dict:
        """Aspect-averaged PCC per level (None if any aspect is undefined)."""
        word = None if any(v is None for v in self.word_pcc) else float(np.mean(self.word_pcc))
        utt = None if any(v is None for v in self.utt_pcc) else float(np.mean(self.utt_pcc))
        return {"phone_mse": self.phone_mse, "phone_pcc": self.phone_pcc,
                "word_avg_pcc": word, "utt_avg_pcc": utt}


def _fmt(value) -> str:
    return "undef" if value is None else f"{value:6.3f}"


def render_table(report: EvalReport) -> str:
    lines = [
        "            Phoneme        | Word (PCC)              | Utterance (PCC)",
        "            MSE     PCC    | Acc    Stress  Total    | Acc    Comp   Flu    Pro    Total",
        ("score       " + f"{report.phone_mse:6.3f}  {_fmt(report.phone_pcc)} | "
         + "  ".join(_fmt(v) for v in report.word_pcc) + " | "
         + " ".join(_fmt(v) for v in report.utt_pcc)),
        ("pcc std     " + " " * 14 + "| "
         + f"{_fmt(report.pcc_std.get('word'))}" + " " * 18 + "| "
         + f"{_fmt(report.pcc_std.get('utt'))}"),
    ]
    return "\n".join(lines)


def _aspect_std(values) -> float | None:
    if any(v is None for v in values):
        return None
    return float(np.std(np.asarray(values, dtype=np.float64)))  # population std


def report_from_predictions(records, phone_preds, word_preds, utt_preds) -> EvalReport:
    """Build the report from per-record prediction arrays.

    phone_preds[i]: (L_i,), word_preds[i]: (L_i, 3) position-level outputs,
    utt_preds[i]: (5,).
    """
    phone_p, phone_t = [], []
    word_p, word_t = [], []
    utt_p, utt_t = [], []
    for rec, pp, wp, up in zip(records, phone_preds, word_preds, utt_preds):
        phone_p.append(np.asarray(pp))
        phone_t.append(rec.scores.phone)
        widx = rec.word_index
        for w in range(rec.n_words):
            members = widx == w
            word_p.append(np.asarray(wp)[members].mean(axis=0))
            word_t.append(rec.scores.word[w])
        utt_p.append(np.asarray(up))
        utt_t.append(rec.scores.utt)
    phone_p = np.concatenate(phone_p)
    phone_t = np.concatenate(phone_t)
    word_p = np.vstack(word_p)
    word_t = np.vstack(word_t)
    utt_p = np.vstack(utt_p)
    utt_t = np.vstack(utt_t)

    phone_mse = float(np.mean((phone_p - phone_t) ** 2))
    phone_pcc = pearson(phone_p, phone_t)
    word_pcc = tuple(pearson(word_p[:, a], word_t[:, a]) for a in range(word_p.shape[1]))
    utt_pcc = tuple(pearson(utt_p[:, a], utt_t[:, a]) for a in range(utt_p.shape[1]))
    pcc_std = {
        "phone": 0.0 if phone_pcc is not None else None,
        "word": _aspect_std(word_pcc),
        "utt": _aspect_std(utt_pcc),
    }
    return EvalReport(phone_mse, phone_pcc, word_pcc, utt_pcc, pcc_std)


def evaluate(params: ModelParams, records, er_mode: str = "none",
             batch_size: int = 25) -> EvalReport:
    """Run the model over the dataset in order and score it per aspect/level."""
    records = list(records)
    if not records:
        raise ValueError("cannot evaluate on an empty dataset")
    if er_mode != "none":
        for rec in records:
            if rec.er is None:
                er_features(rec)
    phone_preds, word_preds, utt_preds = [], [], []
    for start in range(0, len(records), batch_size):
        chunk = records[start:start + batch_size]
        batch = pad_batch(chunk)
        pred = forward(params, batch, er_mode)
        for i, rec in enumerate(chunk):
            L = rec.length
            phone_preds.append(pred.phone[i, :L])
            word_preds.append(pred.word[i, :L])
            utt_preds.append(pred.utt[i])
    return report_from_predictions(records, phone_preds, word_preds, utt_preds)


@dataclass
class AggregateReport:
    """Across-run mean and sample std for every report cell."""

    phone_mse: tuple
    phone_pcc: tuple
    word_pcc: tuple   # 3 entries of (mean, std)
    utt_pcc: tuple    # 5 entries of (mean, std)
    pcc_std: dict     # per level: (mean, std)
    n_runs: int

    def to_dict(self) -> dict:
        def cell(c):
            return {"mean": c[0], "std": c[1]}
        return {
            "n_runs": self.n_runs,
            "phone": {"mse": cell(self.phone_mse), "pcc": cell(self.phone_pcc)},
            "word": {"pcc": {k: cell(c) for k, c in zip(WORD_ASPECTS, self.word_pcc)}},
            "utt": {"pcc": {k: cell(c) for k, c in zip(UTT_ASPECTS, self.utt_pcc)}},
            "pcc_std": {k: cell(c) for k, c in self.pcc_std.items()},
        }


def _mean_std(values) -> tuple:
    if any(v is None for v in values):
        return (None, None)
    arr = np.asarray(values, dtype=np.float64)
    std = float(arr.std(ddof=1)) if len(arr) > 1 else 0.0
    return (float(arr.mean()), std)


def aggregate_runs(reports) -> AggregateReport:
    """Per-cell mean and sample standard deviation across runs."""
    reports = list(reports)
    if not reports:
        raise ValueError("need at least one report")
    return AggregateReport(
        phone_mse=_mean_std([r.phone_mse for r in reports]),
        phone_pcc=_mean_std([r.phone_pcc for r in reports]),
        word_pcc=tuple(_mean_std([r.word_pcc[a] for r in reports]) for a in range(3)),
        utt_pcc=tuple(_mean_std([r.utt_pcc[a] for r in reports]) for a in range(5)),
        pcc_std={lvl: _mean_std([r.pcc_std.get(lvl) for r in reports]) for lvl in LEVELS},
        n_runs=len(reports),
    )
