"""Edit-distance alignment and the CER/MER features derived from it.

CER divides edit errors by the reference character count; MER divides them
by the union size H+S+D+I of the aligned token pair.  For phone sequences,
CER runs on the space-joined phone names and MER on the phone tokens.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import UndefinedRateError
from .phones import spell


@dataclass
class AlignCounts:
    hits: int
    substitutions: int
    deletions: int
    insertions: int

    @property
    def errors(self) -> int:
        return self.substitutions + self.deletions + self.insertions


def align(ref, hyp) -> AlignCounts:
    """Minimum-edit alignment counts with unit costs.

    Ties are broken preferring substitution, then deletion, then insertion,
    so the counts are reproducible; the error total S+D+I is the plain
    Levenshtein distance either way.
    """
    ref = list(ref)
    hyp = list(hyp)
    n, m = len(ref), len(hyp)
    # dist[i][j]: edit distance between ref[:i] and hyp[:j]
    dist = np.zeros((n + 1, m + 1), dtype=np.int64)
    dist[:, 0] = np.arange(n + 1)
    dist[0, :] = np.arange(m + 1)
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            sub = dist[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1])
            dele = dist[i - 1, j] + 1
            ins = dist[i, j - 1] + 1
            dist[i, j] = min(sub, dele, ins)
    hits = subs = dels = inss = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dist[i, j] == dist[i - 1, j - 1] + (ref[i - 1] != hyp[j - 1]):
            if ref[i - 1] == hyp[j - 1]:
                hits += 1
            else:
                subs += 1
            i -= 1
            j -= 1
        elif i > 0 and dist[i, j] == dist[i - 1, j] + 1:
            dels += 1
            i -= 1
        else:
            inss += 1
            j -= 1
    return AlignCounts(hits, subs, dels, inss)


def cer(ref: str, hyp: str) -> float:
    """Character errors divided by reference length; may exceed 1 with insertions."""
    if len(ref) == 0:
        raise UndefinedRateError("CER is undefined for an empty reference")
    counts = align(ref, hyp)
    return counts.errors / len(ref)


def mer(ref, hyp) -> float:
    """Token errors divided by the aligned union size; always in [0, 1]."""
    ref = list(ref)
    hyp = list(hyp)
    if len(ref) + len(hyp) == 0:
        raise UndefinedRateError("MER is undefined for two empty sequences")
    counts = align(ref, hyp)
    return counts.errors / (counts.hits + counts.errors)


def er_features(record) -> tuple[float, float]:
    """Compute (cer, mer) between hypothesis and canonical phones and store them."""
    ref_ids = [int(p) for p in record.canonical_phones]
    hyp_ids = [int(p) for p in record.hyp_phones]
    rates = (cer(spell(ref_ids), spell(hyp_ids)), mer(ref_ids, hyp_ids))
    record.er = rates
    return rates
