"""Log phone posterior (LPP) / log posterior ratio (LPR) feature assembly.

For an aligned segment [t_s, t_e] of a posteriorgram, LPP averages the log
posterior of every source phone over the segment frames; LPR subtracts the
aligned phone's LPP from each entry.  A feature row is the 84-dim
concatenation [LPP | LPR].
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .phones import N_PHONES

POSTERIOR_FLOOR = 1e-10  # applied before the log so zero posteriors stay finite
ROW_SUM_TOL = 1e-6
BINARY_MAGIC = "pronmix-posteriorgram"


@dataclass
class Posteriorgram:
    """Per-frame posterior distribution over the 42 source phones."""

    probs: np.ndarray  # (T, 42)

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2 or self.probs.shape[1] != N_PHONES:
            raise ValueError(f"posteriorgram must be (T, {N_PHONES}), got {self.probs.shape}")
        if self.probs.min() < 0.0 or self.probs.max() > 1.0:
            raise ValueError("posterior entries must lie in [0, 1]")
        sums = self.probs.sum(axis=1)
        bad = np.abs(sums - 1.0) > ROW_SUM_TOL
        if bad.any():
            raise ValueError(f"frame {int(np.argmax(bad))} does not sum to 1")

    @property
    def n_frames(self) -> int:
        return self.probs.shape[0]


@dataclass
class AlignmentSegment:
    """One aligned phone: id plus inclusive start/end frame indexes."""

    canonical_phone: int
    t_s: int
    t_e: int


def compute_lpp(pg: Posteriorgram, seg: AlignmentSegment) -> np.ndarray:
    """Segment-averaged log posterior of every phone, floored at POSTERIOR_FLOOR."""
    if not 0 <= seg.t_s <= seg.t_e < pg.n_frames:
        raise ValueError(
            f"segment [{seg.t_s}, {seg.t_e}] outside posteriorgram of {pg.n_frames} frames")
    window = pg.probs[seg.t_s:seg.t_e + 1]
    return np.log(np.maximum(window, POSTERIOR_FLOOR)).mean(axis=0)


def compute_lpr(lpp: np.ndarray, canonical: int) -> np.ndarray:
    """LPP of each phone minus LPP of the aligned phone (zero at the aligned one)."""
    if not 0 <= canonical < N_PHONES:
        raise ValueError(f"canonical phone {canonical} outside 0..{N_PHONES - 1}")
    return lpp - lpp[canonical]


def assemble_gop(pg: Posteriorgram, segments) -> np.ndarray:
    """Stack [LPP | LPR] rows for an ordered segment sequence; shape (L, 84)."""
    rows = np.empty((len(segments), 2 * N_PHONES))
    for i, seg in enumerate(segments):
        try:
            lpp = compute_lpp(pg, seg)
            lpr = compute_lpr(lpp, seg.canonical_phone)
        except ValueError as exc:
            raise ValueError(f"segment {i}: {exc}") from exc
        rows[i, :N_PHONES] = lpp
        rows[i, N_PHONES:] = lpr
    return rows


# --- file formats ---------------------------------------------------------

def save_posteriorgram_csv(pg: Posteriorgram, path):
    np.savetxt(path, pg.probs, delimiter=",", fmt="%.17g")


def load_posteriorgram_csv(path) -> Posteriorgram:
    probs = np.loadtxt(path, delimiter=",", dtype=np.float64)
    return Posteriorgram(probs.reshape(-1, N_PHONES))


def save_posteriorgram_binary(pg: Posteriorgram, path):
    """Row-major float32 payload after a 3-line text header: magic, T, 42."""
    with open(path, "wb") as fh:
        fh.write(f"{BINARY_MAGIC}\n{pg.n_frames}\n{N_PHONES}\n".encode("ascii"))
        fh.write(pg.probs.astype(np.float32).tobytes(order="C"))


def load_posteriorgram_binary(path) -> Posteriorgram:
    with open(path, "rb") as fh:
        magic = fh.readline().decode("ascii").strip()
        if magic != BINARY_MAGIC:
            raise ValueError(f"bad magic {magic!r}")
        n_frames = int(fh.readline())
        n_phones = int(fh.readline())
        if n_phones != N_PHONES:
            raise ValueError(f"expected {N_PHONES} phones, file has {n_phones}")
        payload = np.frombuffer(fh.read(), dtype=np.float32)
    if payload.size != n_frames * n_phones:
        raise ValueError("payload size does not match header")
    probs = payload.astype(np.float64).reshape(n_frames, n_phones)
    # float32 storage perturbs row sums; renormalize within tolerance
    probs = probs / probs.sum(axis=1, keepdims=True)
    return Posteriorgram(probs)


def load_posteriorgram(path) -> Posteriorgram:
    """Dispatch on content: binary files start with the magic line."""
    with open(path, "rb") as fh:
        head = fh.readline()
    if head.decode("ascii", errors="replace").strip() == BINARY_MAGIC:
        return load_posteriorgram_binary(path)
    return load_posteriorgram_csv(path)


def load_alignment(path) -> list[AlignmentSegment]:
    """Read (phone_id, t_s, t_e) CSV rows."""
    segments = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        for row in csv.reader(fh):
            if not row:
                continue
            segments.append(AlignmentSegment(int(row[0]), int(row[1]), int(row[2])))
    return segments


def save_alignment(segments, path):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        for seg in segments:
            writer.writerow([seg.canonical_phone, seg.t_s, seg.t_e])
