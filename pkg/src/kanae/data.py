"""Heartbeat dataset loading, normalization and corruption transforms.

Input files follow the UCR archive text layout: one series per line,
label in the first column, then the samples, tab- or comma-separated
(auto-detected from the first line).

Because the stethoscope corpus is not redistributable, the module also
ships a seeded synthetic generator that mimics its published shape
(187-sample series, 100 balanced training instances, 1,089 imbalanced
test instances, two classes).  The generator writes standard UCR files,
so swapping in the real data is a path change.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np


@dataclass
class LabeledSeries:
    values: np.ndarray
    label: int


@dataclass
class DatasetSplit:
    train: list
    test: list
    normal_label: int = 1
    mean: float = None
    std: float = None

    @property
    def length(self):
        return len(self.train[0].values)

    @property
    def is_normalized(self):
        return self.std is not None

    def train_values(self):
        return np.stack([s.values for s in self.train])

    def test_values(self):
        return np.stack([s.values for s in self.test])

    def train_labels(self):
        return np.array([s.label for s in self.train])

    def test_labels(self):
        return np.array([s.label for s in self.test])

    def normal_train_values(self):
        return np.stack([s.values for s in self.train
                         if s.label == self.normal_label])


def load_ucr_tsv(path, *, delimiter=None):
    """Parse a UCR-format file into labeled series.

    The series length is fixed by the first line; any later line that
    disagrees raises a parse error naming the line.
    """
    series = []
    length = None
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            if delimiter is None:
                delimiter = "\t" if "\t" in line else ","
            fields = line.split(delimiter)
            if len(fields) < 2:
                raise ValueError(f"{path}:{lineno}: no samples after label")
            try:
                label = int(float(fields[0]))
                values = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from exc
            if length is None:
                length = len(values)
            elif len(values) != length:
                raise ValueError(
                    f"{path}:{lineno}: series length {len(values)} != {length}"
                )
            if not np.all(np.isfinite(values)):
                raise ValueError(f"{path}:{lineno}: non-finite sample")
            series.append(LabeledSeries(values, label))
    if not series:
        raise ValueError(f"{path}: empty dataset file")
    return series


def write_ucr_tsv(path, series, delimiter="\t"):
    """Inverse of load_ucr_tsv; floats at full round-trip precision."""
    with open(path, "w", encoding="utf-8") as fh:
        for s in series:
            fields = [str(s.label)] + [f"{v:.17g}" for v in s.values]
            fh.write(delimiter.join(fields) + "\n")


def load_dataset(train_path, test_path, normal_label=1) -> DatasetSplit:
    return DatasetSplit(load_ucr_tsv(train_path), load_ucr_tsv(test_path),
                        normal_label=normal_label)


def normalize(split: DatasetSplit) -> DatasetSplit:
    """Global z-normalization; statistics from the train split only."""
    if not split.train:
        raise ValueError("cannot normalize an empty train split")
    train_vals = split.train_values()
    mean = float(train_vals.mean())
    std = float(train_vals.std())
    if std < 1e-8:
        raise ValueError("degenerate training data: std < 1e-8")
    tr = [LabeledSeries((s.values - mean) / std, s.label) for s in split.train]
    te = [LabeledSeries((s.values - mean) / std, s.label) for s in split.test]
    return replace(split, train=tr, test=te, mean=mean, std=std)


def denormalize(split: DatasetSplit, values):
    if not split.is_normalized:
        raise ValueError("split carries no normalization statistics")
    return values * split.std + split.mean


# corruption ------------------------------------------------------------------

@dataclass
class Corruption:
    kind: str = "gaussian_noise"        # gaussian_noise | mask
    noise_sigma: float = 0.3
    mask_ratio: float = 0.2
    mask_block_length: int = 10
    seed: int = 0

    def validate(self):
        if self.kind not in ("gaussian_noise", "mask"):
            raise ValueError(f"unknown corruption kind '{self.kind}'")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        # ratio 0 is the structural-reduction case (no blocks masked)
        if not 0.0 <= self.mask_ratio < 1.0:
            raise ValueError("mask_ratio must be in [0, 1)")
        if self.mask_block_length < 1:
            raise ValueError("mask_block_length must be >= 1")
        return self

    def n_blocks(self, length):
        return math.ceil(self.mask_ratio * length / self.mask_block_length)

    def rng(self):
        return np.random.Generator(np.random.PCG64(self.seed))


def corrupt(values, corruption: Corruption, rng=None):
    """Apply the corruption; returns (corrupted, keep-mask).

    ``values`` is one series (L,) or a batch (N, L); the input is never
    modified.  The mask is 1 where the sample survived.
    """
    corruption.validate()
    rng = rng if rng is not None else corruption.rng()
    v = np.asarray(values)
    mask = np.ones_like(v)
    if corruption.kind == "gaussian_noise":
        if corruption.noise_sigma == 0.0:
            return v.copy(), mask
        noise = rng.normal(0.0, corruption.noise_sigma, size=v.shape)
        return v + noise.astype(v.dtype), mask
    length = v.shape[-1]
    n_blocks = corruption.n_blocks(length)
    block = corruption.mask_block_length
    if n_blocks == 0:
        return v.copy(), mask
    if n_blocks * block > length:
        raise ValueError("mask configuration covers more than the series")
    flat_mask = mask.reshape(-1, length)
    for row in flat_mask:
        for start in _disjoint_starts(rng, length, block, n_blocks):
            row[start:start + block] = 0.0
    return v * mask, mask


def _disjoint_starts(rng, length, block, n_blocks):
    starts = []
    # rejection sampling; fine for the mask densities allowed above
    while len(starts) < n_blocks:
        c = int(rng.integers(0, length - block + 1))
        if all(abs(c - s) >= block for s in starts):
            starts.append(c)
    return starts


# synthetic corpus --------------------------------------------------------------

def synthetic_heartbeat(rng, abnormal, length=187, noise=0.1):
    """One stethoscope-like series: S1/S2 bursts, murmur when abnormal.

    Beats are aligned near the start of the window (as in beat-segmented
    archive series) with a small jitter; rate and per-beat morphology
    vary sample to sample, and an additive noise floor keeps perfect
    reconstruction impossible.
    """
    t = np.arange(length, dtype=np.float64)
    cycle = rng.uniform(60.0, 70.0)
    sig = np.zeros(length)
    c = 12.0 + rng.uniform(-2.0, 2.0)
    while c < length + cycle:
        a1, w1, f1 = rng.normal(1.0, 0.05), rng.normal(3.2, 0.1), rng.normal(0.18, 0.005)
        sig += a1 * np.exp(-0.5 * ((t - c) / w1) ** 2) * np.cos(2 * np.pi * f1 * (t - c))
        c2 = c + 0.36 * cycle
        a2, w2, f2 = rng.normal(0.65, 0.05), rng.normal(2.4, 0.1), rng.normal(0.22, 0.005)
        sig += a2 * np.exp(-0.5 * ((t - c2) / w2) ** 2) * np.cos(2 * np.pi * f2 * (t - c2))
        if abnormal:
            # systolic murmur: burst between S1 and S2, phase-locked to
            # the beat so the class is learnable from 50 examples
            cm = c + 0.18 * cycle
            wm = 0.10 * cycle
            am = rng.uniform(0.42, 0.52)
            sig += am * np.exp(-0.5 * ((t - cm) / wm) ** 2) * np.sin(
                2 * np.pi * 0.36 * (t - cm))
        c += cycle
    return sig + rng.normal(0.0, noise, length)


def make_synthetic_split(n_train=100, n_test=1089, seed=0, length=187,
                         noise=0.1, abnormal_test_fraction=0.65,
                         normal_label=1, abnormal_label=2) -> DatasetSplit:
    """Seeded stand-in corpus with the published dataset's shape:
    balanced train split, imbalanced test split."""
    rng = np.random.Generator(np.random.PCG64(seed))
    half = n_train // 2
    train = ([LabeledSeries(synthetic_heartbeat(rng, False, length, noise), normal_label)
              for _ in range(n_train - half)]
             + [LabeledSeries(synthetic_heartbeat(rng, True, length, noise), abnormal_label)
                for _ in range(half)])
    n_ab = round(abnormal_test_fraction * n_test)
    test = ([LabeledSeries(synthetic_heartbeat(rng, False, length, noise), normal_label)
             for _ in range(n_test - n_ab)]
            + [LabeledSeries(synthetic_heartbeat(rng, True, length, noise), abnormal_label)
               for _ in range(n_ab)])
    perm_tr = rng.permutation(len(train))
    perm_te = rng.permutation(len(test))
    return DatasetSplit([train[i] for i in perm_tr], [test[i] for i in perm_te],
                        normal_label=normal_label)


def write_synthetic_corpus(out_dir, **kwargs):
    """Write TRAIN.tsv / TEST.tsv UCR files; returns the two paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    split = make_synthetic_split(**kwargs)
    train_path = os.path.join(out_dir, "TRAIN.tsv")
    test_path = os.path.join(out_dir, "TEST.tsv")
    write_ucr_tsv(train_path, split.train)
    write_ucr_tsv(test_path, split.test)
    return train_path, test_path
