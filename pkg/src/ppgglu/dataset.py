"""Dataset directories, synthetic records, shuffling and partitions.

On-disk layout::

    <root>/labels.csv            record_id,subject_id,glucose_mgdl,fs_hz
    <root>/signals/<record_id>.csv   one decimal sample per line
"""
import csv
import os
from dataclasses import dataclass
from math import floor
from pathlib import Path

import numpy as np

from . import prng
from .errors import InvalidBins, InputError, MalformedCsv, MissingFile, TooFewSamples
from .preprocess import PpgRecord

LABELS_HEADER = ["record_id", "subject_id", "glucose_mgdl", "fs_hz"]
REAL_DATA_ENV = "PPGGLU_MAZANDARAN_DIR"


@dataclass(frozen=True)
class Dataset:
    records: tuple

    def __post_init__(self):
        if not self.records:
            raise InputError("dataset is empty")
        ids = [r.record_id for r in self.records]
        if len(set(ids)) != len(ids):
            raise InputError("duplicate record_id in dataset")

    def __len__(self):
        return len(self.records)

    @property
    def labels(self):
        return np.array([r.glucose_mgdl for r in self.records])

    @property
    def label_stats(self):
        y = self.labels
        return {"min": float(y.min()), "max": float(y.max()), "mean": float(y.mean())}


@dataclass(frozen=True)
class SplitIndices:
    train: list
    val: list
    test: list


@dataclass(frozen=True)
class FoldPlan:
    folds: list

    @property
    def k(self):
        return len(self.folds)

    def test(self, i):
        return self.folds[i]

    def pool(self, i):
        """Indices of every fold except ``i``, in fold order."""
        return [j for f, fold in enumerate(self.folds) if f != i for j in fold]


# ---------------------------------------------------------------------------
# disk I/O

def _read_signal(path, record_id):
    if not path.is_file():
        raise MissingFile(f"signal file for record {record_id!r} not found: {path}")
    values = []
    with open(path, encoding="ascii", errors="replace") as fh:
        for lineno, line in enumerate(fh, 1):
            s = line.strip()
            if not s:
                continue
            try:
                values.append(float(s))
            except ValueError:
                raise MalformedCsv(f"{path}: line {lineno} (record {record_id}): not a number: {s[:40]!r}") from None
    if not np.all(np.isfinite(values)):
        raise MalformedCsv(f"{path}: record {record_id} contains non-finite samples")
    return np.array(values)


def load_dataset(root):
    root = Path(root)
    labels_path = root / "labels.csv"
    if not labels_path.is_file():
        raise MissingFile(f"labels.csv not found in {root}")
    records = []
    seen = set()
    with open(labels_path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != LABELS_HEADER:
            raise MalformedCsv(f"{labels_path}: row 1: header must be {','.join(LABELS_HEADER)}")
        for rowno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 4:
                raise MalformedCsv(f"{labels_path}: row {rowno}: expected 4 fields, got {len(row)}")
            rid, sid, glu, fs = (c.strip() for c in row)
            if not rid or rid in seen:
                raise MalformedCsv(f"{labels_path}: row {rowno}: empty or duplicate record_id {rid!r}")
            try:
                glu, fs = float(glu), float(fs)
            except ValueError:
                raise MalformedCsv(f"{labels_path}: row {rowno}: glucose_mgdl and fs_hz must be numbers") from None
            seen.add(rid)
            samples = _read_signal(root / "signals" / f"{rid}.csv", rid)
            try:
                records.append(PpgRecord(samples, fs, glu, sid, rid))
            except InputError as exc:
                raise type(exc)(f"{labels_path}: row {rowno}: {exc}") from None
    if not records:
        raise MalformedCsv(f"{labels_path}: no records")
    return Dataset(tuple(records))


def write_dataset(dataset, root):
    """Write ``dataset`` in the standard layout (byte-stable for equal input)."""
    root = Path(root)
    (root / "signals").mkdir(parents=True, exist_ok=True)
    with open(root / "labels.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LABELS_HEADER)
        for r in dataset.records:
            w.writerow([r.record_id, r.subject_id, repr(float(r.glucose_mgdl)), repr(float(r.fs))])
    for r in dataset.records:
        with open(root / "signals" / f"{r.record_id}.csv", "w", encoding="ascii", newline="\n") as fh:
            fh.write("\n".join(f"{v:.10g}" for v in r.samples))
            fh.write("\n")
    metas = [r for r in dataset.records if r.meta]
    if metas:
        keys = sorted(metas[0].meta)
        with open(root / "synth_params.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["record_id"] + keys)
            for r in metas:
                w.writerow([r.record_id] + [repr(float(r.meta[k])) for k in keys])


def real_dataset_dir():
    """Directory of the converted Mazandaran data, or None when absent."""
    path = os.environ.get(REAL_DATA_ENV) or str(Path(__file__).resolve().parents[2] / "data" / "mazandaran")
    return path if (Path(path) / "labels.csv").is_file() else None


# ---------------------------------------------------------------------------
# label statistics

def label_histogram(labels, bin_edges):
    """Counts per half-open bin ``[lo, hi)`` plus underflow and overflow buckets."""
    edges = [float(e) for e in bin_edges]
    if len(edges) < 1 or any(b <= a for a, b in zip(edges, edges[1:])):
        raise InvalidBins(f"bin edges must be strictly increasing, got {bin_edges}")
    if isinstance(labels, Dataset):
        labels = labels.labels
    y = np.asarray(labels, dtype=np.float64)
    out = [(f"<{edges[0]:g}", int(np.sum(y < edges[0])))]
    for lo, hi in zip(edges, edges[1:]):
        out.append((f"[{lo:g},{hi:g})", int(np.sum((y >= lo) & (y < hi)))))
    out.append((f">={edges[-1]:g}", int(np.sum(y >= edges[-1]))))
    return out


# ---------------------------------------------------------------------------
# permutations and partitions

def shuffle(n, seed):
    if n < 1:
        raise TooFewSamples("shuffle needs n >= 1")
    return prng.permutation(n, seed)


def split(n, fractions=(0.70, 0.15, 0.15), seed=0):
    if n < 3:
        raise TooFewSamples(f"need at least 3 samples to split, got {n}")
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise InputError(f"split fractions must be three non-negative values summing to 1, got {fractions}")
    perm = shuffle(n, seed)
    n_train = floor(fractions[0] * n + 1e-9)
    n_val = floor(fractions[1] * n + 1e-9)
    return SplitIndices(perm[:n_train], perm[n_train:n_train + n_val], perm[n_train + n_val:])


def kfold(n, k=10, seed=0):
    """Deal a shuffled index list round-robin into ``k`` folds."""
    if k < 2:
        raise InputError(f"k must be at least 2, got {k}")
    if n < k:
        raise TooFewSamples(f"{n} samples cannot fill {k} folds")
    perm = shuffle(n, seed)
    return FoldPlan([perm[i::k] for i in range(k)])


# ---------------------------------------------------------------------------
# synthetic PPG

HR_RANGE = (50.0, 110.0)
RATIO_RANGE = (0.3, 0.7)


def synth_label(hr_bpm, amp_ratio):
    return 70.0 + 0.5 * hr_bpm + 60.0 * amp_ratio


def synth_waveform(hr_bpm, amp_ratio, fs, duration_s, rng, noise=0.01):
    """Pulse train of a systolic Gaussian peak plus a smaller dicrotic one per beat."""
    n = int(round(fs * duration_s))
    t = np.arange(n) / fs
    period = 60.0 / hr_bpm
    phase = rng.uniform(0.0, period)
    beats = np.arange(-2, int(duration_s / period) + 3) * period + phase
    x = np.zeros(n)
    for c in beats:
        x += np.exp(-0.5 * ((t - c) / (0.12 * period)) ** 2)
        x += amp_ratio * np.exp(-0.5 * ((t - c - 0.38 * period) / (0.10 * period)) ** 2)
    x += rng.normal(0.0, noise, n)
    return x


def synth_generate(count, seed, fs=2175.0, duration_s=10.0):
    if count < 1:
        raise InputError("count must be >= 1")
    rng = np.random.default_rng(prng.derive_seed(seed, prng.STREAM_SYNTH))
    records = []
    for i in range(count):
        hr = float(rng.uniform(*HR_RANGE))
        ratio = float(rng.uniform(*RATIO_RANGE))
        x = synth_waveform(hr, ratio, fs, duration_s, rng)
        records.append(PpgRecord(x, float(fs), synth_label(hr, ratio), f"subj{i % 23:02d}",
                                 f"syn{i:04d}", meta={"hr_bpm": hr, "amp_ratio": ratio}))
    return Dataset(tuple(records))
