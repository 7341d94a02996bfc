"""The five benchmark tasks and their report artifacts.

All tasks share one training loop, parameterized by an input transform
(identity, additive noise, block masking), a target transform (always
the clean series here) and an extra loss (KL for the variational
generation task).  That sharing is what makes the structural reductions
hold exactly: denoising with sigma 0 and inpainting with ratio 0 run
the identical code path as plain reconstruction.

Artifacts per run land in ``<out>/<task>/<family>/seed<NN>/``:
report.json, losses_train.csv, losses_test.csv, epoch_losses.csv,
latent_test.csv, latent_pca.csv, generated.csv (generation only),
timing.csv.  CSV floats carry 17 significant digits so a re-parse is
bit-exact.
"""

from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field, asdict

import numpy as np

from .data import Corruption, DatasetSplit, corrupt, normalize
from .models import ModelSpec, build
from .optim import TrainConfig, train
from .layers import Linear
from .kan import KanConv1d, KanLinear
from .layers import Conv1d
from .splines import SplineGrid

TASKS = ("reconstruction", "denoising", "inpainting", "anomaly", "generation")


@dataclass
class TaskConfig:
    task: str = "reconstruction"
    family: str = "KCAE"
    seed: int = 0
    epochs: int = 100
    batch_size: int = 16
    lr: float = 1e-3
    precision: str = "float32"
    corruption: Corruption = None
    model_overrides: dict = field(default_factory=dict)
    out_dir: str = None
    n_generate: int = 64
    threshold_quantile: float = 95.0
    flat_config: dict = None  # CLI-effective config echoed into reports

    def validate(self):
        errors = []
        if self.task not in TASKS:
            errors.append(f"unknown task '{self.task}'")
        if self.family not in ("AE", "KAE", "CAE", "KCAE"):
            errors.append(f"unknown family '{self.family}'")
        if self.precision not in ("float32", "float64"):
            errors.append(f"precision must be float32|float64, got '{self.precision}'")
        if errors:
            raise ValueError("; ".join(errors))
        TrainConfig(self.epochs, self.batch_size, self.lr, self.seed).validate()
        if self.corruption is not None:
            self.corruption.validate()
        return self

    def dtype(self):
        return np.float64 if self.precision == "float64" else np.float32

    def effective_dict(self):
        if self.flat_config is not None:
            return dict(self.flat_config)
        d = asdict(self)
        d.pop("out_dir")
        d.pop("flat_config")
        return d


@dataclass
class TaskReport:
    task: str
    family: str
    seed: int
    precision: str
    param_count: int
    epochs_run: int
    train_mse: float
    test_mse: float
    epoch_losses: list
    train_per_sample: list
    test_per_sample: list
    drift_quantiles: dict
    seconds_per_epoch: float
    seconds_per_forward: float
    series_length: int
    n_train: int
    n_test: int
    effective_config: dict
    silhouette: float = None
    corruption: dict = None
    baseline_mse: float = None
    masked_mse: float = None
    unmasked_mse: float = None
    baseline_masked_mse: float = None
    anomaly: dict = None
    generation: dict = None

    def to_json(self):
        return json.dumps(asdict(self), indent=1, sort_keys=True)


def _quantiles(values):
    v = np.asarray(values, dtype=np.float64)
    return {
        "q50": float(np.percentile(v, 50)),
        "q90": float(np.percentile(v, 90)),
        "q99": float(np.percentile(v, 99)),
        "max": float(v.max()),
    }


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


def write_csv(path, header, rows):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def read_csv(path):
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [line.strip().split(",") for line in fh if line.strip()]
    return header, rows


# latent-space diagnostics -----------------------------------------------------

def power_iteration_pca(z, n_components=2, iters=200, seed=0):
    """Top principal directions of z via power iteration with deflation.

    Returns (components[n_components, k], projections[n, n_components]).
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    zc = z - z.mean(axis=0)
    cov = (zc.T @ zc) / max(len(z) - 1, 1)
    comps = []
    for _ in range(n_components):
        v = rng.standard_normal(cov.shape[0])
        v /= np.linalg.norm(v)
        for _ in range(iters):
            w = cov @ v
            norm = np.linalg.norm(w)
            if norm < 1e-30:
                break
            v = w / norm
        lam = float(v @ cov @ v)
        comps.append(v)
        cov = cov - lam * np.outer(v, v)
    comps = np.stack(comps)
    return comps, zc @ comps.T


def silhouette_score(z, labels):
    """Mean silhouette over samples; informational class-separation gauge."""
    labels = np.asarray(labels)
    uniq = np.unique(labels)
    if len(uniq) < 2:
        return float("nan")
    sq = (z * z).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (z @ z.T)
    dist = np.sqrt(np.maximum(d2, 0.0))
    scores = np.empty(len(z))
    for i in range(len(z)):
        same = labels == labels[i]
        n_same = same.sum()
        a = dist[i, same].sum() / max(n_same - 1, 1)
        b = min(dist[i, labels == u].mean() for u in uniq if u != labels[i])
        scores[i] = 0.0 if max(a, b) == 0 else (b - a) / max(a, b)
    return float(scores.mean())


def auc_score(scores, is_positive):
    """Rank-statistic AUC with average-tie handling.

    Probability that a random positive outranks a random negative,
    ties counted half.
    """
    scores = np.asarray(scores, dtype=np.float64)
    is_positive = np.asarray(is_positive, dtype=bool)
    n_pos = int(is_positive.sum())
    n_neg = len(scores) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC undefined: test split has a single class")
    _, inv, counts = np.unique(scores, return_inverse=True, return_counts=True)
    cum = np.cumsum(counts)
    avg_rank = (cum - counts) + (counts + 1) / 2.0
    ranks = avg_rank[inv]
    pos_rank_sum = ranks[is_positive].sum()
    return float((pos_rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


# shared runner ------------------------------------------------------------------

def _prepare(split: DatasetSplit):
    return split if split.is_normalized else normalize(split)


def _median_forward_seconds(model, x, reps=20):
    model.set_training(False)
    batch = x[: min(16, len(x))]
    for _ in range(3):
        model.forward(batch)
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        model.forward(batch)
        times.append(time.perf_counter() - t0)
    return float(np.median(times))


def _corrupt_factory(corruption):
    """(per-step corrupt_fn, deterministic eval transform, eval masks)."""
    if corruption is None:
        return None, None

    def step_fn(batch, rng):
        return corrupt(batch, corruption, rng)[0]

    def eval_fn(x):
        return corrupt(x, corruption, corruption.rng())[0]

    return step_fn, eval_fn


def _eval_mask(x, corruption):
    return corrupt(x, corruption, corruption.rng())[1]


def _run_autoencoding(family, split, cfg: TaskConfig, *, corruption=None,
                      train_values=None, variational=False):
    cfg.validate()
    split = _prepare(split)
    dtype = cfg.dtype()
    x_train = (train_values if train_values is not None
               else split.train_values()).astype(dtype)
    x_test = split.test_values().astype(dtype)

    spec = ModelSpec(family=family, input_length=split.length,
                     variational=variational, **cfg.model_overrides)
    model = build(spec, cfg.seed, dtype)
    step_fn, eval_fn = (None, None) if corruption is None else _corrupt_factory(corruption)
    tc = TrainConfig(cfg.epochs, cfg.batch_size, cfg.lr, cfg.seed)
    result = train(model, x_train, tc, corrupt_fn=step_fn,
                   eval_corrupt_fn=eval_fn, x_test=x_test)

    report = TaskReport(
        task=cfg.task,
        family=family,
        seed=cfg.seed,
        precision=cfg.precision,
        param_count=model.param_count(),
        epochs_run=result.epochs_run,
        train_mse=float(result.train_per_sample.mean()),
        test_mse=float(result.test_per_sample.mean()),
        epoch_losses=[float(v) for v in result.epoch_losses],
        train_per_sample=[float(v) for v in result.train_per_sample],
        test_per_sample=[float(v) for v in result.test_per_sample],
        drift_quantiles={"train": _quantiles(result.train_per_sample),
                         "test": _quantiles(result.test_per_sample)},
        seconds_per_epoch=result.seconds_per_epoch,
        seconds_per_forward=_median_forward_seconds(model, x_test),
        series_length=split.length,
        n_train=len(x_train),
        n_test=len(x_test),
        effective_config=cfg.effective_dict(),
        corruption=None if corruption is None else asdict(corruption),
    )
    report._model = model  # handle for checkpointing; not serialized
    return model, split, x_test, report


def _latent_artifacts(model, split, x_test, report, out):
    z = model.encode(x_test)
    labels = split.test_labels()
    report.silhouette = silhouette_score(z.astype(np.float64), labels)
    if out:
        k = z.shape[1]
        write_csv(os.path.join(out, "latent_test.csv"),
                  ["sample_index", "label"] + [f"z_{j + 1}" for j in range(k)],
                  [(i, labels[i], *z[i]) for i in range(len(z))])
        _, proj = power_iteration_pca(z.astype(np.float64))
        write_csv(os.path.join(out, "latent_pca.csv"),
                  ["sample_index", "label", "pc_1", "pc_2"],
                  [(i, labels[i], proj[i, 0], proj[i, 1]) for i in range(len(z))])


def loss_drift_export(report: TaskReport, out_dir):
    """Per-sample loss CSVs in sample order plus the epoch trace."""
    write_csv(os.path.join(out_dir, "losses_train.csv"),
              ["sample_index", "split", "loss"],
              [(i, "train", v) for i, v in enumerate(report.train_per_sample)])
    write_csv(os.path.join(out_dir, "losses_test.csv"),
              ["sample_index", "split", "loss"],
              [(i, "test", v) for i, v in enumerate(report.test_per_sample)])
    write_csv(os.path.join(out_dir, "epoch_losses.csv"),
              ["epoch", "mean_train_loss"],
              [(e, v) for e, v in enumerate(report.epoch_losses)])


def run_dir(out_root, task, family, seed):
    return os.path.join(out_root, task, family, f"seed{seed:02d}")


def _emit(report, model, split, x_test, out_root, extra_rows=None):
    if not out_root:
        return None
    out = run_dir(out_root, report.task, report.family, report.seed)
    os.makedirs(out, exist_ok=True)
    _latent_artifacts(model, split, x_test, report, out)
    loss_drift_export(report, out)
    write_csv(os.path.join(out, "timing.csv"),
              ["metric", "seconds"],
              [("per_epoch", report.seconds_per_epoch),
               ("per_forward", report.seconds_per_forward)]
              + (extra_rows or []))
    with open(os.path.join(out, "report.json"), "w", encoding="utf-8") as fh:
        fh.write(report.to_json())
    return out


# the five tasks -----------------------------------------------------------------

def run_reconstruction(family, split, cfg: TaskConfig):
    cfg.task = "reconstruction"
    model, split, x_test, report = _run_autoencoding(family, split, cfg)
    _emit(report, model, split, x_test, cfg.out_dir)
    return report


def run_denoising(family, split, cfg: TaskConfig):
    cfg.task = "denoising"
    corruption = cfg.corruption or Corruption(kind="gaussian_noise",
                                              noise_sigma=0.3, seed=cfg.seed)
    if corruption.kind != "gaussian_noise":
        raise ValueError("denoising needs a gaussian_noise corruption")
    model, split, x_test, report = _run_autoencoding(
        family, split, cfg, corruption=corruption)
    noisy = corrupt(x_test, corruption, corruption.rng())[0]
    report.baseline_mse = float(((noisy - x_test) ** 2).mean())
    _emit(report, model, split, x_test, cfg.out_dir)
    return report


def run_inpainting(family, split, cfg: TaskConfig):
    cfg.task = "inpainting"
    corruption = cfg.corruption or Corruption(kind="mask", mask_ratio=0.2,
                                              mask_block_length=10, seed=cfg.seed)
    if corruption.kind != "mask":
        raise ValueError("inpainting needs a mask corruption")
    model, split, x_test, report = _run_autoencoding(
        family, split, cfg, corruption=corruption)
    mask = _eval_mask(x_test, corruption)
    model.set_training(False)
    recon = model.forward(x_test * mask)
    err = (recon - x_test) ** 2
    masked = mask == 0
    if masked.any():
        report.masked_mse = float(err[masked].mean())
        report.unmasked_mse = float(err[~masked].mean())
        report.baseline_masked_mse = float((x_test[masked] ** 2).mean())
    _emit(report, model, split, x_test, cfg.out_dir)
    return report


def run_anomaly(family, split, cfg: TaskConfig):
    """Train on normal-class series only; score by reconstruction error."""
    cfg.task = "anomaly"
    split = _prepare(split)
    normal_train = split.normal_train_values()
    model, split, x_test, report = _run_autoencoding(
        family, split, cfg, train_values=normal_train)
    scores = np.asarray(report.test_per_sample)
    labels = split.test_labels()
    is_abnormal = labels != split.normal_label
    auc = auc_score(scores, is_abnormal)
    threshold = float(np.percentile(report.train_per_sample,
                                    cfg.threshold_quantile))
    flagged = scores > threshold
    report.anomaly = {
        "auc": auc,
        "threshold": threshold,
        "threshold_quantile": cfg.threshold_quantile,
        "tp": int((flagged & is_abnormal).sum()),
        "fp": int((flagged & ~is_abnormal).sum()),
        "tn": int((~flagged & ~is_abnormal).sum()),
        "fn": int((~flagged & is_abnormal).sum()),
        "scores": [float(s) for s in scores],
    }
    _emit(report, model, split, x_test, cfg.out_dir)
    return report


def run_generation(family, split, cfg: TaskConfig):
    """Variational training, then decode latent draws from the prior."""
    cfg.task = "generation"
    model, split, x_test, report = _run_autoencoding(
        family, split, cfg, variational=True)
    rng = np.random.Generator(np.random.PCG64(
        np.random.SeedSequence([cfg.seed, 7])))
    k = model.spec.latent_dim
    z = rng.standard_normal((cfg.n_generate, k)).astype(cfg.dtype())
    model.set_training(False)
    samples = model.decode(z)
    train_vals = split.train_values()
    report.generation = {
        "n_samples": int(cfg.n_generate),
        "sample_mean": [float(v) for v in samples.mean(axis=0)],
        "sample_std": [float(v) for v in samples.std(axis=0)],
        "train_mean": [float(v) for v in train_vals.mean(axis=0)],
        "train_std": [float(v) for v in train_vals.std(axis=0)],
        "min": float(samples.min()),
        "max": float(samples.max()),
    }
    out = _emit(report, model, split, x_test, cfg.out_dir)
    if out:
        write_csv(os.path.join(out, "generated.csv"),
                  ["sample_index"] + [f"x_{j + 1}" for j in range(samples.shape[1])],
                  [(i, *samples[i]) for i in range(len(samples))])
    return report


_RUNNERS = {
    "reconstruction": run_reconstruction,
    "denoising": run_denoising,
    "inpainting": run_inpainting,
    "anomaly": run_anomaly,
    "generation": run_generation,
}


def run_task(task, family, split, cfg: TaskConfig):
    cfg.task = task
    try:
        runner = _RUNNERS[task]
    except KeyError:
        raise ValueError(f"unknown task '{task}'") from None
    return runner(family, split, cfg)


# benchmark-wide outputs -----------------------------------------------------------

def timing_benchmark(width=256, batch=64, warmup=10, iters=100, seed=0,
                     widths_sweep=(64, 128, 256, 512), conv_channels=8,
                     conv_length=128, dtype=np.float64):
    """Median forward times for matched plain vs spline-edge layers.

    Returns a dict with per-layer rows and the two slowdown ratios.
    """
    rng = np.random.Generator(np.random.PCG64(seed))
    grid = SplineGrid()

    def median_time(layer, x):
        layer.set_training(False)
        for _ in range(warmup):
            layer.forward(x)
        times = []
        for _ in range(iters):
            t0 = time.perf_counter()
            layer.forward(x)
            times.append(time.perf_counter() - t0)
        return float(np.median(times))

    rows = []
    sweep = {}
    for w in widths_sweep:
        lin = Linear(w, w, rng, dtype)
        t = median_time(lin, rng.standard_normal((batch, w)).astype(dtype))
        sweep[w] = t
        rows.append({"layer": "linear", "size": w, "median_seconds": t})

    lin = Linear(width, width, rng, dtype)
    kan_lin = KanLinear(width, width, grid, rng, dtype=dtype)
    x = rng.standard_normal((batch, width)).astype(dtype)
    t_lin = median_time(lin, x)
    t_kan = median_time(kan_lin, x)
    rows.append({"layer": "kan_linear", "size": width, "median_seconds": t_kan})

    conv = Conv1d(conv_channels, conv_channels, 5, 1, 2, rng, dtype)
    kan_conv = KanConv1d(conv_channels, conv_channels, 5, 1, 2, grid, rng, dtype=dtype)
    xc = rng.standard_normal((batch, conv_channels, conv_length)).astype(dtype)
    t_conv = median_time(conv, xc)
    t_kconv = median_time(kan_conv, xc)
    rows.append({"layer": "conv1d", "size": conv_channels, "median_seconds": t_conv})
    rows.append({"layer": "kan_conv1d", "size": conv_channels, "median_seconds": t_kconv})

    return {
        "rows": rows,
        "linear_sweep": sweep,
        "ratio_kan_linear": t_kan / t_lin,
        "ratio_kan_conv": t_kconv / t_conv,
    }


def efficiency_table(reports):
    """Rows (family, params, test/train MSE, epoch time), params descending."""
    rows = [{
        "family": r.family,
        "params": r.param_count,
        "test_mse": r.test_mse,
        "train_mse": r.train_mse,
        "seconds_per_epoch": r.seconds_per_epoch,
    } for r in reports]
    rows.sort(key=lambda row: row["params"], reverse=True)
    return rows


def write_efficiency_table(rows, out_dir):
    header = ["family", "params", "test_mse", "train_mse", "seconds_per_epoch"]
    write_csv(os.path.join(out_dir, "efficiency.csv"), header,
              [tuple(row[h] for h in header) for row in rows])
    with open(os.path.join(out_dir, "efficiency.json"), "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=1)
